//! Oracles shared by the SVM property tests and the acceptance run.

use qrest::svm::{KernelSpec, StandardScaler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimizes `½βᵀKβ + εΣ(α+α*) - yᵀβ`, `β = α - α*`, over
/// `0 ≤ α ≤ ua`, `0 ≤ α* ≤ us`, `Σβ = 0` by accelerated projected gradient
/// with adaptive restart, directly in the `(α, α*)` variables.
pub fn dense_dual(k: &[Vec<f64>], y: &[f64], eps: f64, ua: f64, us: f64) -> f64 {
    let n = y.len();
    let objective = |a: &[f64], s: &[f64]| {
        let beta: Vec<f64> = (0..n).map(|i| a[i] - s[i]).collect();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += beta[i] * k[i][j] * beta[j];
            }
        }
        0.5 * quad + eps * (a.iter().sum::<f64>() + s.iter().sum::<f64>()) - y.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()
    };
    // projection onto the box intersected with Σα = Σα*, by bisection on the multiplier
    let project = |va: &[f64], vs: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let at = |mu: f64| {
            let a: Vec<f64> = va.iter().map(|v| (v - mu).clamp(0.0, ua)).collect();
            let s: Vec<f64> = vs.iter().map(|v| (v + mu).clamp(0.0, us)).collect();
            (a, s)
        };
        let excess = |mu: f64| {
            let (a, s) = at(mu);
            a.iter().sum::<f64>() - s.iter().sum::<f64>()
        };
        let span = va.iter().chain(vs).fold(0.0f64, |m, v| m.max(v.abs())) + ua + us + 1.0;
        let (mut lo, mut hi) = (-span, span);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    };
    let lipschitz = 2.0 * k.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let grad = |a: &[f64], s: &[f64]| {
        let beta: Vec<f64> = (0..n).map(|i| a[i] - s[i]).collect();
        let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum()).collect();
        let ga: Vec<f64> = (0..n).map(|i| kb[i] + eps - y[i]).collect();
        let gs: Vec<f64> = (0..n).map(|i| -kb[i] + eps + y[i]).collect();
        (ga, gs)
    };

    let (mut a, mut s) = (vec![0.0; n], vec![0.0; n]);
    let (mut pa, mut ps) = (a.clone(), s.clone());
    let mut t = 1.0f64;
    let mut f_prev = objective(&a, &s);
    for _ in 0..400_000 {
        let (ga, gs) = grad(&pa, &ps);
        let va: Vec<f64> = pa.iter().zip(&ga).map(|(x, g)| x - step * g).collect();
        let vs: Vec<f64> = ps.iter().zip(&gs).map(|(x, g)| x - step * g).collect();
        let (na, ns) = project(&va, &vs);
        let f = objective(&na, &ns);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let moved: f64 = na.iter().zip(&a).chain(ns.iter().zip(&s)).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        if f > f_prev {
            if t == 1.0 {
                // a plain projected step no longer descends: converged to rounding
                break;
            }
            t = 1.0;
            pa = a.clone();
            ps = s.clone();
            continue;
        }
        let w = (t - 1.0) / t_next;
        pa = na.iter().zip(&a).map(|(x, y)| x + w * (x - y)).collect();
        ps = ns.iter().zip(&s).map(|(x, y)| x + w * (x - y)).collect();
        a = na;
        s = ns;
        t = t_next;
        let converged = moved.sqrt() < 1e-13 && (f_prev - f).abs() < 1e-13;
        f_prev = f;
        if converged {
            break;
        }
    }
    objective(&a, &s)
}

pub fn synthetic(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y = x
        .iter()
        .map(|r| r.iter().map(|v: &f64| v.sin()).sum::<f64>() + 1.5 + 0.1 * rng.random_range(-1.0..1.0))
        .collect();
    (x, y)
}

/// Kernel matrix on standardized rows, as the trained model sees them.
pub fn kernel_matrix(scaler: &StandardScaler, kernel: KernelSpec, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let z: Vec<Vec<f64>> = x.iter().map(|r| scaler.transform(r)).collect();
    z.iter().map(|a| z.iter().map(|b| kernel.eval(a, b)).collect()).collect()
}
