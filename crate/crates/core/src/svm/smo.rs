//! Two-coordinate dual solver for
//! `min ½ zᵀQz + pᵀz  s.t.  0 ≤ z_t ≤ U_t,  Σ s_t z_t = 0`,
//! where `z = (α, α*)`, `s = (+1, …, -1, …)` and `Q_tu = s_t s_u K(x_t, x_u)`.
//! Working pairs use maximal-violation / second-order selection.

use std::collections::HashMap;
use std::rc::Rc;

use super::kernel::KernelSpec;

const TAU: f64 = 1e-12;

/// Least-recently-used cache of kernel rows.
struct RowCache<'a> {
    x: &'a [Vec<f64>],
    kernel: KernelSpec,
    capacity: usize,
    rows: HashMap<usize, (Rc<[f64]>, u64)>,
    clock: u64,
}

impl<'a> RowCache<'a> {
    fn new(x: &'a [Vec<f64>], kernel: KernelSpec, budget_bytes: usize) -> Self {
        let row_bytes = 8 * x.len().max(1);
        Self {
            x,
            kernel,
            capacity: (budget_bytes / row_bytes).max(2),
            rows: HashMap::new(),
            clock: 0,
        }
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.1 = self.clock;
            return entry.0.clone();
        }
        if self.rows.len() >= self.capacity {
            let oldest = self
                .rows
                .iter()
                .min_by_key(|(_, (_, stamp))| *stamp)
                .map(|(&k, _)| k)
                .expect("cache is nonempty");
            self.rows.remove(&oldest);
        }
        let xi = &self.x[i];
        let row: Rc<[f64]> = self.x.iter().map(|xj| self.kernel.eval(xi, xj)).collect();
        self.rows.insert(i, (row.clone(), self.clock));
        row
    }
}

pub(crate) struct DualSolution {
    /// `α_i - α_i*` per sample.
    pub beta: Vec<f64>,
    pub bias: f64,
    /// Value of `½ zᵀQz + pᵀz` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub violation: f64,
    pub converged: bool,
}

pub(crate) struct DualSpec<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
    pub kernel: KernelSpec,
    pub epsilon: f64,
    /// Upper bound on `α` (penalizes under-prediction).
    pub upper_alpha: f64,
    /// Upper bound on `α*` (penalizes over-prediction).
    pub upper_alpha_star: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub cache_bytes: usize,
}

pub(crate) fn solve_dual(spec: &DualSpec<'_>) -> DualSolution {
    let n = spec.x.len();
    let l = 2 * n;
    let upper: Vec<f64> = (0..l)
        .map(|t| if t < n { spec.upper_alpha } else { spec.upper_alpha_star })
        .collect();
    let p: Vec<f64> = (0..l)
        .map(|t| if t < n { spec.epsilon - spec.y[t] } else { spec.epsilon + spec.y[t - n] })
        .collect();
    let qd: Vec<f64> = spec.x.iter().map(|xi| spec.kernel.eval(xi, xi)).collect();
    let mut st = State {
        n,
        z: vec![0.0; l],
        g: p.clone(),
        g_bar: vec![0.0; l],
        upper,
        p,
        active: (0..l).collect(),
        cache: RowCache::new(spec.x, spec.kernel, spec.cache_bytes),
    };

    let mut iterations = 0;
    let mut violation = f64::INFINITY;
    let mut converged = false;
    let shrink_every = l.min(1000);
    let mut counter = shrink_every;
    let mut unshrunk = false;

    while iterations < spec.max_iter {
        counter -= 1;
        if counter == 0 {
            counter = shrink_every;
            st.shrink(spec.tol, &mut unshrunk);
        }
        let mut pair = st.select(&qd, spec.tol);
        if pair.0.is_none() && st.active.len() < l {
            // optimal on the shrunk problem; confirm on the full one
            st.reconstruct_gradient();
            pair = st.select(&qd, spec.tol);
            counter = 1;
        }
        violation = pair.1;
        let Some((i, j)) = pair.0 else {
            converged = true;
            break;
        };
        iterations += 1;
        st.update(i, j, &qd);
    }
    if st.active.len() < l {
        st.reconstruct_gradient();
    }

    let State { z, g, upper, p, .. } = st;
    let objective = 0.5 * z.iter().zip(g.iter().zip(&p)).map(|(zt, (gt, pt))| zt * (gt + pt)).sum::<f64>();
    let bias = -offset(&z, &g, &upper, n);
    let beta = (0..n).map(|k| z[k] - z[k + n]).collect();
    DualSolution {
        beta,
        bias,
        objective,
        iterations,
        violation,
        converged,
    }
}

fn sign(t: usize, n: usize) -> f64 {
    if t < n {
        1.0
    } else {
        -1.0
    }
}

struct State<'a> {
    n: usize,
    z: Vec<f64>,
    /// Gradient `Qz + p`, exact on the active set.
    g: Vec<f64>,
    /// `Σ_{u at upper bound} U_u Q_tu`, kept for every `t` so shrunk gradients can be rebuilt.
    g_bar: Vec<f64>,
    upper: Vec<f64>,
    p: Vec<f64>,
    active: Vec<usize>,
    cache: RowCache<'a>,
}

impl State<'_> {
    fn can_rise(&self, t: usize) -> bool {
        if t < self.n {
            self.z[t] < self.upper[t]
        } else {
            self.z[t] > 0.0
        }
    }

    fn can_fall(&self, t: usize) -> bool {
        if t < self.n {
            self.z[t] > 0.0
        } else {
            self.z[t] < self.upper[t]
        }
    }

    /// Working pair on the active set and the current maximal violation; `None` once it is below `tol`.
    fn select(&mut self, qd: &[f64], tol: f64) -> (Option<(usize, usize)>, f64) {
        let n = self.n;
        // i: maximal violator among variables that can move up along s
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for &t in &self.active {
            if self.can_rise(t) && -sign(t, n) * self.g[t] >= gmax {
                gmax = -sign(t, n) * self.g[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            return (None, 0.0);
        };
        let ki = self.cache.row(i % n);

        // j: second-order choice among variables that can move down along s
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_obj = f64::INFINITY;
        let mut j_sel = None;
        for &t in &self.active {
            if !self.can_fall(t) {
                continue;
            }
            let v = sign(t, n) * self.g[t];
            gmax2 = gmax2.max(v);
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = qd[i % n] + qd[t % n] - 2.0 * ki[t % n];
                let obj = -grad_diff * grad_diff / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    j_sel = Some(t);
                }
            }
        }
        let violation = gmax + gmax2;
        (j_sel.filter(|_| violation >= tol).map(|j| (i, j)), violation)
    }

    fn update(&mut self, i: usize, j: usize, qd: &[f64]) {
        let n = self.n;
        let ki = self.cache.row(i % n);
        let kj = self.cache.row(j % n);
        let (si, sj) = (sign(i, n), sign(j, n));
        let (ci, cj) = (self.upper[i], self.upper[j]);
        let (old_i, old_j) = (self.z[i], self.z[j]);
        let g = &self.g;
        let quad = {
            let q = qd[i % n] + qd[j % n] - 2.0 * ki[j % n];
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        let (mut ai, mut aj) = (old_i, old_j);
        if si != sj {
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.z[i] = ai;
        self.z[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for &t in &self.active {
            self.g[t] += sign(t, n) * (si * ki[t % n] * di + sj * kj[t % n] * dj);
        }
        for (u, old, new, row) in [(i, old_i, ai, &ki), (j, old_j, aj, &kj)] {
            let (was, is) = (old >= self.upper[u], new >= self.upper[u]);
            if was != is {
                let w = if is { self.upper[u] } else { -self.upper[u] } * sign(u, n);
                for t in 0..2 * n {
                    self.g_bar[t] += w * sign(t, n) * row[t % n];
                }
            }
        }
    }

    /// Drops bound variables that cannot re-enter the working set soon.
    fn shrink(&mut self, tol: f64, unshrunk: &mut bool) {
        let n = self.n;
        let mut gmax1 = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        for &t in &self.active {
            let sg = sign(t, n) * self.g[t];
            if self.can_rise(t) {
                gmax1 = gmax1.max(-sg);
            }
            if self.can_fall(t) {
                gmax2 = gmax2.max(sg);
            }
        }
        if !*unshrunk && gmax1 + gmax2 <= 10.0 * tol {
            *unshrunk = true;
            self.reconstruct_gradient();
        }
        let active = std::mem::take(&mut self.active);
        self.active = active
            .into_iter()
            .filter(|&t| {
                let positive = t < n;
                let shrunk = if self.z[t] >= self.upper[t] {
                    -self.g[t] > if positive { gmax1 } else { gmax2 }
                } else if self.z[t] <= 0.0 {
                    self.g[t] > if positive { gmax2 } else { gmax1 }
                } else {
                    false
                };
                !shrunk
            })
            .collect();
    }

    /// Recomputes the gradient of shrunk variables and reactivates everything.
    fn reconstruct_gradient(&mut self) {
        let n = self.n;
        let l = 2 * n;
        let mut is_active = vec![false; l];
        for &t in &self.active {
            is_active[t] = true;
        }
        let inactive: Vec<usize> = (0..l).filter(|&t| !is_active[t]).collect();
        for &t in &inactive {
            self.g[t] = self.g_bar[t] + self.p[t];
        }
        if !inactive.is_empty() {
            for u in 0..l {
                let zu = self.z[u];
                if zu > 0.0 && zu < self.upper[u] {
                    let row = self.cache.row(u % n);
                    let w = zu * sign(u, n);
                    for &t in &inactive {
                        self.g[t] += w * sign(t, n) * row[t % n];
                    }
                }
            }
        }
        self.active = (0..l).collect();
    }
}

/// Average of `s_t G_t` over free variables, else the midpoint of its feasible interval.
fn offset(z: &[f64], g: &[f64], upper: &[f64], n: usize) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut free = 0usize;
    for t in 0..z.len() {
        let st = if t < n { 1.0 } else { -1.0 };
        let yg = st * g[t];
        if z[t] >= upper[t] {
            if st < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if z[t] <= 0.0 {
            if st > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else {
        lb
    }
}
