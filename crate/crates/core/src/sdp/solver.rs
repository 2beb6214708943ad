//! Infeasible primal-dual path-following method with Nesterov–Todd scaling
//! and a Mehrotra predictor-corrector step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::SpdFactor;
use super::problem::{block_inner, block_norm, identity, BlockMatrix, SdpProblem};
use crate::error::Result;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 200;

const DIVERGENCE: f64 = 1e10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub primal: BlockMatrix,
    pub y: Vec<f64>,
    pub slack: BlockMatrix,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal - dual| / (1 + |primal|)`.
    pub gap: f64,
    /// `‖A(X) - b‖∞`.
    pub primal_infeasibility: f64,
    /// `‖C - A*(y) - S‖_F / (1 + ‖C‖_F)`.
    pub dual_infeasibility: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl SdpSolution {
    /// Largest of the three convergence measures.
    pub fn residual(&self) -> f64 {
        self.gap.max(self.primal_infeasibility).max(self.dual_infeasibility)
    }
}

/// One constraint restricted to one block, with both triangles expanded.
struct BlockPiece {
    constraint: usize,
    rows: Vec<usize>,
    /// `(position in rows, col, value)`
    local: Vec<(usize, usize, f64)>,
    /// `(row, col, value)`
    full: Vec<(usize, usize, f64)>,
}

fn split_by_block(p: &SdpProblem) -> Vec<Vec<BlockPiece>> {
    let mut out: Vec<Vec<BlockPiece>> = p.blocks.iter().map(|_| Vec::new()).collect();
    for (k, con) in p.constraints.iter().enumerate() {
        let mut touched: Vec<usize> = con.entries.iter().map(|e| e.block).collect();
        touched.sort_unstable();
        touched.dedup();
        for b in touched {
            let mut full = Vec::new();
            for e in con.entries.iter().filter(|e| e.block == b) {
                full.push((e.row, e.col, e.value));
                if e.row != e.col {
                    full.push((e.col, e.row, e.value));
                }
            }
            let mut rows: Vec<usize> = full.iter().map(|t| t.0).collect();
            rows.sort_unstable();
            rows.dedup();
            let local = full
                .iter()
                .map(|&(r, c, v)| (rows.binary_search(&r).unwrap(), c, v))
                .collect();
            out[b].push(BlockPiece {
                constraint: k,
                rows,
                local,
                full,
            });
        }
    }
    out
}

/// `M_ij = <A_j, W A_i W>`; each `W A_i W` is built once from the few rows `A_i` touches.
fn schur_complement(pieces: &[Vec<BlockPiece>], w: &[DMatrix<f64>], m: usize) -> DMatrix<f64> {
    let mut schur = DMatrix::<f64>::zeros(m, m);
    for (b, items) in pieces.iter().enumerate() {
        let wb = &w[b];
        let n = wb.nrows();
        let mut t = DMatrix::<f64>::zeros(n, n);
        let mut waw = DMatrix::<f64>::zeros(n, n);
        for (p, ip) in items.iter().enumerate() {
            // t[:, a] = (A_i W)[rows[a], :]ᵀ, then W A_i W = Σ_a W[:, rows[a]] t[:, a]ᵀ
            let k = ip.rows.len();
            t.columns_mut(0, k).fill(0.0);
            for &(ra, col, v) in &ip.local {
                t.column_mut(ra).axpy(v, &wb.column(col), 1.0);
            }
            waw.fill(0.0);
            for (a, &row) in ip.rows.iter().enumerate() {
                waw.ger(1.0, &wb.column(row), &t.column(a), 1.0);
            }
            let i = ip.constraint;
            for iq in &items[p..] {
                let s: f64 = iq.full.iter().map(|&(r, c, v)| v * waw[(r, c)]).sum();
                schur[(iq.constraint, i)] += s;
            }
        }
    }
    // only one triangle per block pair was accumulated
    for i in 0..m {
        for j in i + 1..m {
            let v = schur[(i, j)] + schur[(j, i)];
            schur[(i, j)] = v;
            schur[(j, i)] = v;
        }
    }
    schur
}

/// NT scaling of one block: `W = G Gᵀ` with `G⁻¹ X G⁻ᵀ = Gᵀ S G = diag(d)`.
struct Scaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    d: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let lx = x.clone().cholesky()?.l();
    let ls = s.clone().cholesky()?.l();
    let svd = (ls.transpose() * &lx).svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let d = svd.singular_values;
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let inv_sqrt = d.map(|v| 1.0 / v.sqrt());
    let mut g = lx * vt.transpose();
    for (j, &f) in inv_sqrt.iter().enumerate() {
        g.column_mut(j).scale_mut(f);
    }
    let mut g_inv = u.transpose() * ls.transpose();
    for (i, &f) in inv_sqrt.iter().enumerate() {
        g_inv.row_mut(i).scale_mut(f);
    }
    let w = &g * g.transpose();
    Some(Scaling { g, g_inv, w, d })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Largest step `α` keeping `diag(d) + α Δ ⪰ 0`, for a scaled direction `Δ`.
fn max_step(d: &DVector<f64>, delta: &DMatrix<f64>) -> f64 {
    let n = d.len();
    let mut q = DMatrix::from_fn(n, n, |i, j| delta[(i, j)] / (d[i] * d[j]).sqrt());
    symmetrize(&mut q);
    let lmin = q.symmetric_eigenvalues().min();
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

struct Iterate {
    x: BlockMatrix,
    y: DVector<f64>,
    s: BlockMatrix,
}

struct Residuals {
    rp: DVector<f64>,
    rd: BlockMatrix,
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
}

fn residuals(p: &SdpProblem, b: &DVector<f64>, it: &Iterate, c_scale: f64) -> Residuals {
    let ax = DVector::from_vec(p.apply(&it.x));
    let rp = b - ax;
    let aty = p.adjoint(it.y.as_slice());
    let rd: BlockMatrix = p
        .objective
        .iter()
        .zip(&aty)
        .zip(&it.s)
        .map(|((c, a), s)| c - a - s)
        .collect();
    let pobj = block_inner(&p.objective, &it.x);
    let dobj = b.dot(&it.y);
    Residuals {
        pinf: rp.amax(),
        dinf: block_norm(&rd) / c_scale,
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
        rp,
        rd,
        pobj,
        dobj,
    }
}

fn initial_point(p: &SdpProblem) -> Iterate {
    let mut xi = Vec::with_capacity(p.blocks.len());
    let mut eta = Vec::with_capacity(p.blocks.len());
    for (bi, &n) in p.blocks.iter().enumerate() {
        let nf = n as f64;
        let mut x_scale = 10f64.max(nf.sqrt());
        let mut s_scale = x_scale.max(p.objective[bi].norm());
        for con in &p.constraints {
            let norm = con
                .entries
                .iter()
                .filter(|e| e.block == bi)
                .map(|e| if e.row == e.col { e.value * e.value } else { 2.0 * e.value * e.value })
                .sum::<f64>()
                .sqrt();
            if norm > 0.0 {
                x_scale = x_scale.max(nf * (1.0 + con.rhs.abs()) / (1.0 + norm));
                s_scale = s_scale.max(norm);
            }
        }
        xi.push(x_scale);
        eta.push(s_scale);
    }
    Iterate {
        x: identity(&p.blocks, &xi),
        y: DVector::zeros(p.num_constraints()),
        s: identity(&p.blocks, &eta),
    }
}

struct Direction {
    dx: BlockMatrix,
    dy: DVector<f64>,
    ds: BlockMatrix,
}

fn direction(
    p: &SdpProblem,
    factor: &SpdFactor,
    scal: &[Scaling],
    res: &Residuals,
    rc: &[DMatrix<f64>],
) -> Direction {
    let wrw: BlockMatrix = scal
        .iter()
        .zip(rc.iter().zip(&res.rd))
        .map(|(sc, (r, d))| r - &sc.w * d * &sc.w)
        .collect();
    let rhs = &res.rp - DVector::from_vec(p.apply(&wrw));
    let dy = factor.solve(&rhs);
    let aty = p.adjoint(dy.as_slice());
    let ds: BlockMatrix = res.rd.iter().zip(&aty).map(|(d, a)| d - a).collect();
    let dx: BlockMatrix = scal
        .iter()
        .zip(rc.iter().zip(&ds))
        .map(|(sc, (r, s))| {
            let mut m = r - &sc.w * s * &sc.w;
            symmetrize(&mut m);
            m
        })
        .collect();
    Direction { dx, dy, ds }
}

fn scaled(scal: &[Scaling], dir: &Direction) -> (BlockMatrix, BlockMatrix) {
    let dxs = scal
        .iter()
        .zip(&dir.dx)
        .map(|(sc, dx)| {
            let mut m = &sc.g_inv * dx * sc.g_inv.transpose();
            symmetrize(&mut m);
            m
        })
        .collect();
    let dss = scal
        .iter()
        .zip(&dir.ds)
        .map(|(sc, ds)| {
            let mut m = sc.g.transpose() * ds * &sc.g;
            symmetrize(&mut m);
            m
        })
        .collect();
    (dxs, dss)
}

fn step_lengths(scal: &[Scaling], dxs: &[DMatrix<f64>], dss: &[DMatrix<f64>]) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for (sc, (dx, ds)) in scal.iter().zip(dxs.iter().zip(dss)) {
        ap = ap.min(max_step(&sc.d, dx));
        ad = ad.min(max_step(&sc.d, ds));
    }
    (ap, ad)
}

/// Solves the standard-form SDP. Never fails on numerical trouble: the best
/// iterate seen is returned with status `MaxIter`.
pub fn solve_sdp(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    p.validate()?;
    let m = p.num_constraints();
    let n_total = p.total_dim() as f64;
    let b = DVector::from_vec(p.rhs());
    let c_scale = 1.0 + block_norm(&p.objective);
    let pieces = split_by_block(p);

    let mut it = initial_point(p);
    let mut best: Option<SdpSolution> = None;
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;

    let snapshot = |it: &Iterate, res: &Residuals, iterations: usize, status: SolveStatus| SdpSolution {
        primal: it.x.clone(),
        y: it.y.iter().copied().collect(),
        slack: it.s.clone(),
        primal_objective: res.pobj,
        dual_objective: res.dobj,
        gap: res.gap,
        primal_infeasibility: res.pinf,
        dual_infeasibility: res.dinf,
        iterations,
        status,
    };

    loop {
        let res = residuals(p, &b, &it, c_scale);
        let current = snapshot(&it, &res, iterations, SolveStatus::MaxIter);
        if best.as_ref().is_none_or(|bs| current.residual() < bs.residual()) {
            best = Some(current);
        }
        if res.gap <= tol && res.pinf <= tol && res.dinf <= tol {
            status = SolveStatus::Optimal;
            best = Some(snapshot(&it, &res, iterations, status));
            break;
        }
        let x_size: f64 = it.x.iter().map(|x| x.trace()).sum();
        if x_size > DIVERGENCE || it.y.amax() > DIVERGENCE {
            status = SolveStatus::Infeasible;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let Some(scal) = it
            .x
            .iter()
            .zip(&it.s)
            .map(|(x, s)| nt_scaling(x, s))
            .collect::<Option<Vec<_>>>()
        else {
            break;
        };
        let w: BlockMatrix = scal.iter().map(|sc| sc.w.clone()).collect();
        let mut schur = schur_complement(&pieces, &w, m);
        let mut factor = None;
        let diag_max = schur.diagonal().amax().max(f64::MIN_POSITIVE);
        for k in 0..4 {
            if k > 0 {
                let bump = diag_max * 1e-14 * 100f64.powi(k - 1);
                for i in 0..m {
                    schur[(i, i)] += bump;
                }
            }
            factor = SpdFactor::new(schur.clone());
            if factor.is_some() {
                break;
            }
        }
        let Some(factor) = factor else { break };

        let mu = block_inner(&it.x, &it.s) / n_total;

        // predictor
        let rc_aff: BlockMatrix = it.x.iter().map(|x| -x).collect();
        let aff = direction(p, &factor, &scal, &res, &rc_aff);
        let (dxs_a, dss_a) = scaled(&scal, &aff);
        let (ap, ad) = step_lengths(&scal, &dxs_a, &dss_a);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut mu_aff = 0.0;
        for (bi, (x, s)) in it.x.iter().zip(&it.s).enumerate() {
            let xa = x + &aff.dx[bi] * ap;
            let sa = s + &aff.ds[bi] * ad;
            mu_aff += xa.dot(&sa);
        }
        mu_aff /= n_total;
        let ratio = (mu_aff / mu).clamp(0.0, 1.0);
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = ratio.powf(expon).min(1.0);

        // corrector
        let rc: BlockMatrix = scal
            .iter()
            .zip(dxs_a.iter().zip(&dss_a))
            .map(|(sc, (dx, ds))| {
                let n = sc.d.len();
                let mut prod = dx * ds;
                symmetrize(&mut prod);
                let h = DMatrix::from_fn(n, n, |i, j| {
                    let mut r = -prod[(i, j)];
                    if i == j {
                        r += sigma * mu - sc.d[i] * sc.d[i];
                    }
                    2.0 * r / (sc.d[i] + sc.d[j])
                });
                &sc.g * h * sc.g.transpose()
            })
            .collect();
        let dir = direction(p, &factor, &scal, &res, &rc);
        let (dxs, dss) = scaled(&scal, &dir);
        let (ap_max, ad_max) = step_lengths(&scal, &dxs, &dss);
        let gamma = 0.9 + 0.09 * ap_max.min(ad_max).min(1.0);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);
        if !(ap > 1e-12 || ad > 1e-12) {
            break;
        }
        for (x, dx) in it.x.iter_mut().zip(&dir.dx) {
            *x += dx * ap;
        }
        it.y += &dir.dy * ad;
        for (s, ds) in it.s.iter_mut().zip(&dir.ds) {
            *s += ds * ad;
        }
    }

    let mut sol = best.expect("at least one iterate is recorded");
    if status != SolveStatus::Optimal {
        sol.status = status;
    }
    sol.iterations = iterations;
    #[cfg(debug_assertions)]
    if sol.status == SolveStatus::Optimal {
        for (x, s) in sol.primal.iter().zip(&sol.slack) {
            debug_assert!(x.symmetric_eigenvalues().min() >= -tol);
            debug_assert!(s.symmetric_eigenvalues().min() >= -tol);
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::problem::Constraint;

    #[test]
    fn trace_minimization_with_pinned_corner() {
        // min Tr X s.t. X_11 = 1  →  1 at X = diag(1, 0)
        let mut c = Constraint::new(1.0);
        c.push(0, 0, 0, 1.0);
        let p = SdpProblem::new(vec![2], vec![DMatrix::identity(2, 2)], vec![c]).unwrap();
        let sol = solve_sdp(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-6);
        assert!((sol.primal[0][(0, 0)] - 1.0).abs() < 1e-6);
        assert!(sol.primal[0][(1, 1)].abs() < 1e-6);
    }

    #[test]
    fn max_eigenvalue_program() {
        // max y s.t. A - yI ⪰ 0 gives λ_min(A); written as min <A,X>, Tr X = 1
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let mut c = Constraint::new(1.0);
        for i in 0..3 {
            c.push(0, i, i, 1.0);
        }
        let p = SdpProblem::new(vec![3], vec![a.clone()], vec![c]).unwrap();
        let sol = solve_sdp(&p, 1e-9, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let lmin = a.symmetric_eigenvalues().min();
        assert!((sol.dual_objective - lmin).abs() < 1e-7);
    }

    #[test]
    fn multi_block_problem() {
        // two independent scalar blocks: min x1 + 2 x2, x1 + x2 = 1  →  1
        let mut c = Constraint::new(1.0);
        c.push(0, 0, 0, 1.0);
        c.push(1, 0, 0, 1.0);
        let obj = vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 2.0)];
        let p = SdpProblem::new(vec![1, 1], obj, vec![c]).unwrap();
        let sol = solve_sdp(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unbounded_dual_is_flagged() {
        // min <0, X> s.t. X_11 = -1 has no feasible X; the dual ray grows without bound
        let mut c = Constraint::new(-1.0);
        c.push(0, 0, 0, 1.0);
        let p = SdpProblem::new(vec![2], vec![DMatrix::zeros(2, 2)], vec![c]).unwrap();
        let sol = solve_sdp(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_ne!(sol.status, SolveStatus::Optimal);
    }
}
