//! The three fidelity programs, written as Hermitian LMIs and realified.
//!
//! Every program is set up in the eigenbasis of `ρ`, restricted to its
//! support: with `ρ = V Λ V†` the block `[[ρ, Z], [Z†, σ]] ⪰ 0` forces
//! `Z = V K`, and is equivalent to `[[Λ, K], [K†, σ]] ⪰ 0`. This keeps the
//! programs strictly feasible for rank-deficient inputs.

use nalgebra::DMatrix;

use super::problem::{Constraint, SdpProblem};
use super::solver::{solve_sdp, SdpSolution, SolveStatus, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::qcore::{c64, digits, from_digits, herm_eig_unchecked, hermitian_deviation, ComplexMatrix, DensityMatrix, C64};

/// Eigenvalues below this are treated as outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Solutions that stopped on the iteration cap are still accepted when every
/// residual is below this.
const ACCEPT_RESIDUAL: f64 = 1e-6;

/// `A + iB ↦ [[A, -B], [B, A]]`.
pub fn realify(h: &ComplexMatrix) -> Result<DMatrix<f64>> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(format!("realify needs a square matrix, got {:?}", h.shape())));
    }
    let dev = hermitian_deviation(h);
    if dev > 1e-10 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = h.nrows();
    Ok(DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    }))
}

/// Hermitian LMI `F₀ + Σ_k v_k F_k ⪰ 0`, maximizing `Σ_k g_k v_k`.
/// Variable matrices are sparse upper-triangle lists `(block, row, col, value)`.
struct Lmi {
    dims: Vec<usize>,
    constant: Vec<ComplexMatrix>,
    vars: Vec<(f64, Vec<(usize, usize, usize, C64)>)>,
}

impl Lmi {
    fn new(dims: Vec<usize>) -> Self {
        let constant = dims.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
        Self {
            dims,
            constant,
            vars: Vec::new(),
        }
    }

    fn var(&mut self, objective: f64, entries: Vec<(usize, usize, usize, C64)>) -> usize {
        self.vars.push((objective, entries));
        self.vars.len() - 1
    }

    /// Dual standard form: `S = C - Σ y_k A_k` with `C = F₀`, `A_k = -F_k`, `b_k = g_k`.
    fn into_problem(self) -> Result<SdpProblem> {
        let blocks: Vec<usize> = self.dims.iter().map(|&n| 2 * n).collect();
        let objective = self.constant.iter().map(realify).collect::<Result<Vec<_>>>()?;
        let constraints = self
            .vars
            .into_iter()
            .map(|(g, entries)| {
                let mut con = Constraint::new(g);
                for (b, i, j, v) in entries {
                    let n = self.dims[b];
                    let (i, j, v) = if i <= j { (i, j, v) } else { (j, i, v.conj()) };
                    if i == j {
                        con.push(b, i, i, -v.re);
                        con.push(b, n + i, n + i, -v.re);
                        continue;
                    }
                    if v.re != 0.0 {
                        con.push(b, i, j, -v.re);
                        con.push(b, n + i, n + j, -v.re);
                    }
                    if v.im != 0.0 {
                        con.push(b, i, n + j, v.im);
                        con.push(b, j, n + i, -v.im);
                    }
                }
                con
            })
            .collect();
        SdpProblem::new(blocks, objective, constraints)
    }
}

/// Eigenvalues and eigenvectors spanning the numerical support.
fn support(rho: &DensityMatrix) -> (Vec<f64>, ComplexMatrix) {
    let (vals, vecs) = herm_eig_unchecked(rho.matrix());
    let r = vals.iter().take_while(|&&l| l > SUPPORT_TOL).count().max(1);
    (vals[..r].to_vec(), vecs.columns(0, r).into_owned())
}

/// Adds the complex entries of `K` (an `r × s` block at rows `0..r`, columns
/// `r..r+s` of block 0) with objective `Re Tr(K T)` for the given `s × r` matrix `T`.
fn add_overlap_vars(lmi: &mut Lmi, r: usize, t: &ComplexMatrix) {
    let s = t.nrows();
    for a in 0..r {
        for j in 0..s {
            let coeff = t[(j, a)];
            lmi.var(coeff.re, vec![(0, a, r + j, c64(1.0, 0.0))]);
            lmi.var(-coeff.im, vec![(0, a, r + j, c64(0.0, 1.0))]);
        }
    }
}

fn check_solution(sol: &SdpSolution, what: &str) -> Result<()> {
    match sol.status {
        SolveStatus::Optimal => Ok(()),
        _ if sol.residual() <= ACCEPT_RESIDUAL => Ok(()),
        status => Err(Error::SolverFailure(format!(
            "{what}: {status:?} after {} iterations (gap {:.2e}, pinf {:.2e}, dinf {:.2e})",
            sol.iterations, sol.gap, sol.primal_infeasibility, sol.dual_infeasibility
        ))),
    }
}

fn same_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    Ok(())
}

/// Program whose optimum is `F(ρ, σ)` for fixed `σ`.
pub fn fidelity_fixed_problem(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<SdpProblem> {
    same_dims(rho, sigma)?;
    let (lr, vr) = support(rho);
    let (ls, us) = support(sigma);
    let (r, s) = (lr.len(), ls.len());
    let mut lmi = Lmi::new(vec![r + s]);
    for (i, &l) in lr.iter().chain(&ls).enumerate() {
        lmi.constant[0][(i, i)] = c64(l, 0.0);
    }
    let t = us.adjoint() * vr;
    add_overlap_vars(&mut lmi, r, &t);
    lmi.into_problem()
}

/// `F(ρ, σ) = max Re Tr Z` over `[[ρ, Z], [Z†, σ]] ⪰ 0`.
pub fn max_fidelity_fixed(rho: &DensityMatrix, sigma: &DensityMatrix, tol: f64) -> Result<f64> {
    let p = fidelity_fixed_problem(rho, sigma)?;
    let sol = solve_sdp(&p, tol, DEFAULT_MAX_ITER)?;
    check_solution(&sol, "fixed fidelity")?;
    Ok(sol.dual_objective.clamp(0.0, 1.0))
}

/// Program maximizing the fidelity over diagonal `σ = diag(q)`.
/// Variables: `t_0..t_{d-2}` (with `q_{d-1} = 1 - Σ t`), then `K`.
pub fn fidelity_incoherent_problem(rho: &DensityMatrix) -> Result<SdpProblem> {
    let d = rho.dim();
    let (lr, vr) = support(rho);
    let r = lr.len();
    let mut lmi = Lmi::new(vec![r + d]);
    for (i, &l) in lr.iter().enumerate() {
        lmi.constant[0][(i, i)] = c64(l, 0.0);
    }
    let last = r + d - 1;
    lmi.constant[0][(last, last)] = c64(1.0, 0.0);
    for j in 0..d - 1 {
        lmi.var(0.0, vec![(0, r + j, r + j, c64(1.0, 0.0)), (0, last, last, c64(-1.0, 0.0))]);
    }
    add_overlap_vars(&mut lmi, r, &vr);
    lmi.into_problem()
}

/// `max_{σ incoherent} F(ρ, σ)` and the maximizing populations `q`.
pub fn max_fidelity_incoherent(rho: &DensityMatrix, tol: f64) -> Result<(f64, Vec<f64>)> {
    let d = rho.dim();
    let p = fidelity_incoherent_problem(rho)?;
    let sol = solve_sdp(&p, tol, DEFAULT_MAX_ITER)?;
    check_solution(&sol, "incoherent fidelity")?;
    let t = &sol.y[..d - 1];
    let mut q: Vec<f64> = t.to_vec();
    q.push(1.0 - t.iter().sum::<f64>());
    for v in &mut q {
        *v = v.max(0.0);
    }
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= total);
    Ok((sol.dual_objective.clamp(0.0, 1.0), q))
}

/// Every bipartition of `n` subsystems, each named by the side not holding subsystem 0.
pub fn default_bipartitions(n: usize) -> Vec<Vec<usize>> {
    if n < 2 {
        return Vec::new();
    }
    (1u32..(1 << (n - 1)))
        .map(|mask| (1..n).filter(|&k| mask & (1 << (k - 1)) != 0).collect())
        .collect()
}

/// Upper-triangle entries of a traceless Hermitian basis of `d × d` matrices:
/// `E_kk - E_{d-1,d-1}`, then `E_ab + E_ba` and `i E_ab - i E_ba` for `a < b`.
fn traceless_basis(d: usize) -> Vec<Vec<(usize, usize, C64)>> {
    let mut basis = Vec::with_capacity(d * d - 1);
    for k in 0..d - 1 {
        basis.push(vec![(k, k, c64(1.0, 0.0)), (d - 1, d - 1, c64(-1.0, 0.0))]);
    }
    for a in 0..d {
        for b in a + 1..d {
            basis.push(vec![(a, b, c64(1.0, 0.0))]);
            basis.push(vec![(a, b, c64(0.0, 1.0))]);
        }
    }
    basis
}

fn transpose_entry(i: usize, j: usize, v: C64, dims: &[usize], subsystems: &[usize]) -> (usize, usize, C64) {
    let mut di = digits(i, dims);
    let mut dj = digits(j, dims);
    for &s in subsystems {
        std::mem::swap(&mut di[s], &mut dj[s]);
    }
    (from_digits(&di, dims), from_digits(&dj, dims), v)
}

/// Program maximizing the fidelity over unit-trace `σ ⪰ 0` with `σ^{T_S} ⪰ 0`
/// for every listed set `S` of subsystems.
pub fn fidelity_ppt_problem(rho: &DensityMatrix, bipartitions: &[Vec<usize>]) -> Result<SdpProblem> {
    let dims = rho.dims().to_vec();
    if dims.len() < 2 {
        return Err(Error::NotBipartite(dims.len()));
    }
    for part in bipartitions {
        if let Some(&bad) = part.iter().find(|&&s| s >= dims.len()) {
            return Err(Error::InvalidSubsystem {
                index: bad,
                count: dims.len(),
            });
        }
    }
    let d = rho.dim();
    let (lr, vr) = support(rho);
    let r = lr.len();
    let mut block_dims = vec![r + d];
    block_dims.extend(bipartitions.iter().map(|_| d));
    let mut lmi = Lmi::new(block_dims);
    for (i, &l) in lr.iter().enumerate() {
        lmi.constant[0][(i, i)] = c64(l, 0.0);
    }
    let flat = c64(1.0 / d as f64, 0.0);
    for i in 0..d {
        lmi.constant[0][(r + i, r + i)] = flat;
        for b in 1..=bipartitions.len() {
            lmi.constant[b][(i, i)] = flat;
        }
    }
    for element in traceless_basis(d) {
        let mut entries = Vec::new();
        for &(i, j, v) in &element {
            entries.push((0, r + i, r + j, v));
            for (bi, part) in bipartitions.iter().enumerate() {
                let (ti, tj, tv) = transpose_entry(i, j, v, &dims, part);
                entries.push((bi + 1, ti, tj, tv));
            }
        }
        lmi.var(0.0, entries);
    }
    add_overlap_vars(&mut lmi, r, &vr);
    lmi.into_problem()
}

/// `max F(ρ, σ)` over states that are PPT across every listed bipartition.
/// Returns the primal objective, an upper bound on the optimum up to the
/// primal residual, so `1 - value²` stays a lower bound.
pub fn max_fidelity_ppt(rho: &DensityMatrix, bipartitions: &[Vec<usize>], tol: f64) -> Result<f64> {
    let p = fidelity_ppt_problem(rho, bipartitions)?;
    let sol = solve_sdp(&p, tol, DEFAULT_MAX_ITER)?;
    check_solution(&sol, "PPT fidelity")?;
    Ok(sol.primal_objective.max(sol.dual_objective).clamp(0.0, 1.0))
}
