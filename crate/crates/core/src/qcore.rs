//! Dense complex linear algebra and the structural operations on quantum
//! states (tensor products, partial trace and transpose, spectra, moments,
//! entropy, fidelity).
//!
//! Subsystem ordering follows the Kronecker convention: for `dims = [d0, d1, ..]`
//! the first subsystem is the most significant digit of the global index.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Hermiticity tolerance accepted by [`DensityMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_CLIP_TOL, 0)` are clipped to zero.
pub const PSD_CLIP_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-8;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Mixed-radix digits of `index` for `dims` (most significant first).
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

pub fn from_digits(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

fn check_subsystems(indices: &[usize], count: usize) -> Result<()> {
    match indices.iter().find(|&&i| i >= count) {
        Some(&index) => Err(Error::InvalidSubsystem { index, count }),
        None => Ok(()),
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn herm_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let deviation = hermitian_deviation(m);
    if deviation > 1e-8 {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(herm_eig_unchecked(&hermitize(m)))
}

pub(crate) fn herm_eig_unchecked(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub(crate) fn herm_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `V diag(f(λ)) V†`.
pub(crate) fn spectral_map(values: &[f64], vectors: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let mut scaled = vectors.clone();
    for (j, &l) in values.iter().enumerate() {
        let s = f(l);
        scaled.column_mut(j).scale_mut(s);
    }
    &scaled * vectors.adjoint()
}

/// Square root of a PSD matrix; negative eigenvalues are treated as zero.
pub fn sqrtm_psd(m: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = herm_eig_unchecked(&hermitize(m));
    spectral_map(&values, &vectors, |l| l.max(0.0).sqrt())
}

/// A Hermitian, PSD, unit-trace matrix together with its subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates and canonicalizes `mat`: exact Hermitization, clipping of
    /// eigenvalues in `[-1e-9, 0)` and trace renormalization.
    pub fn new(mat: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if !mat.is_square() || mat.nrows() != d || dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix with subsystem dims {:?}",
                mat.nrows(),
                mat.ncols(),
                dims
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let deviation = hermitian_deviation(&mat);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace { trace });
        }
        let mut mat = hermitize(&mat);
        let (values, vectors) = herm_eig_unchecked(&mat);
        let min = values.last().copied().unwrap_or(0.0);
        if min < -PSD_CLIP_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        if min < 0.0 {
            let clipped: Vec<f64> = values.iter().map(|&l| l.max(0.0)).collect();
            mat = spectral_map(&clipped, &vectors, |l| l);
            mat = hermitize(&mat);
        }
        let trace = mat.trace().re;
        mat.unscale_mut(trace);
        Ok(Self { mat, dims })
    }

    /// Renormalizes an unnormalized PSD matrix (e.g. after a channel) and validates it.
    pub fn from_unnormalized(mat: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let trace = mat.trace().re;
        if trace.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidTrace { trace });
        }
        Self::new(hermitize(&mat).unscale(trace), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        let mat = ComplexMatrix::identity(d, d).unscale(d as f64);
        Self { mat, dims }
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[f64], dims: Vec<usize>) -> Result<Self> {
        let mat = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
            probs.len(),
            probs.iter().map(|&p| c64(p, 0.0)),
        ));
        Self::new(mat, dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eigenvalues(&self.mat)
    }

    pub fn eig(&self) -> (Vec<f64>, ComplexMatrix) {
        herm_eig_unchecked(&self.mat)
    }

    pub fn diagonal_probs(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    /// `U ρ U†` for a unitary `u`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::new(u * &self.mat * u.adjoint(), self.dims.clone())
    }

    /// Convex combination `w·self + (1-w)·other`.
    pub fn mix(&self, w: f64, other: &DensityMatrix) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Self::new(self.mat.scale(w) + other.mat.scale(1.0 - w), self.dims.clone())
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.mat[(i, j)].norm() <= tol))
    }
}

/// Unit vector with subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    amps: ComplexVector,
    dims: Vec<usize>,
}

impl PureState {
    /// Normalizes `amps`; fails on the zero vector or a dims mismatch.
    pub fn new(amps: ComplexVector, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if amps.len() != d || dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} with subsystem dims {:?}",
                amps.len(),
                dims
            )));
        }
        let norm = amps.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidInput("cannot normalize zero vector".into()));
        }
        Ok(Self { amps: amps.unscale(norm), dims })
    }

    pub fn basis(index: usize, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        let mut amps = ComplexVector::zeros(d);
        if index >= d {
            return Err(Error::InvalidInput(format!("basis index {index} >= {d}")));
        }
        amps[index] = c64(1.0, 0.0);
        Self::new(amps, dims)
    }

    pub fn amps(&self) -> &ComplexVector {
        &self.amps
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.amps * self.amps.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::new(self.projector(), self.dims.clone())
            .expect("projector of a unit vector is a valid state")
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState {
            amps: self.amps.kronecker(&other.amps),
            dims,
        }
    }
}

/// Reduced state on the subsystems in `keep` (order of `keep` is ignored;
/// kept subsystems appear in their original order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if keep.is_empty() {
        return Err(Error::InvalidInput("partial trace must keep at least one subsystem".into()));
    }
    check_subsystems(keep, dims.len())?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();

    let d = rho.dim();
    let split: Vec<(usize, usize)> = (0..d)
        .map(|g| {
            let dg = digits(g, dims);
            let a: Vec<usize> = kept.iter().map(|&k| dg[k]).collect();
            let t: Vec<usize> = traced.iter().map(|&k| dg[k]).collect();
            (from_digits(&a, &kept_dims), from_digits(&t, &traced_dims))
        })
        .collect();

    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for g1 in 0..d {
        let (a1, t1) = split[g1];
        for g2 in 0..d {
            let (a2, t2) = split[g2];
            if t1 == t2 {
                out[(a1, a2)] += m[(g1, g2)];
            }
        }
    }
    DensityMatrix::new(out, kept_dims)
}

/// Partial transpose of a square matrix on the listed subsystems.
pub fn partial_transpose_matrix(m: &ComplexMatrix, dims: &[usize], subsystems: &[usize]) -> Result<ComplexMatrix> {
    check_subsystems(subsystems, dims.len())?;
    let d: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix with subsystem dims {:?}",
            m.nrows(),
            m.ncols(),
            dims
        )));
    }
    let digit_table: Vec<Vec<usize>> = (0..d).map(|g| digits(g, dims)).collect();
    let mut out = ComplexMatrix::zeros(d, d);
    let mut r = vec![0; dims.len()];
    let mut c = vec![0; dims.len()];
    for g1 in 0..d {
        for g2 in 0..d {
            r.copy_from_slice(&digit_table[g1]);
            c.copy_from_slice(&digit_table[g2]);
            for &s in subsystems {
                std::mem::swap(&mut r[s], &mut c[s]);
            }
            out[(from_digits(&r, dims), from_digits(&c, dims))] = m[(g1, g2)];
        }
    }
    Ok(out)
}

/// `ρ^{T_k}` for one subsystem `k`.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: usize) -> Result<ComplexMatrix> {
    partial_transpose_matrix(rho.matrix(), rho.dims(), &[subsystem])
}

/// `Tr(ρ^m)` from the spectrum.
pub fn trace_power(rho: &DensityMatrix, m: u32) -> f64 {
    if m == 1 {
        return rho.matrix().trace().re;
    }
    rho.eigenvalues().iter().map(|&l| l.max(0.0).powi(m as i32)).sum()
}

/// `(Tr ρ², Tr ρ³)` from one eigendecomposition.
pub fn moments_2_3(rho: &DensityMatrix) -> (f64, f64) {
    rho.eigenvalues().iter().fold((0.0, 0.0), |(s2, s3), &l| {
        let l = l.max(0.0);
        (s2 + l * l, s3 + l * l * l)
    })
}

pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Von Neumann entropy in bits.
pub fn vn_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues()).max(0.0)
}

/// Uhlmann fidelity `Tr sqrt(sqrt(ρ) σ sqrt(ρ))`.
pub fn fidelity_exact(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let sr = sqrtm_psd(rho.matrix());
    let inner = &sr * sigma.matrix() * &sr;
    let f: f64 = herm_eigenvalues(&hermitize(&inner))
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c64(1.0, 0.0), c64(-1.0, 0.0)]))
    }

    fn bell() -> DensityMatrix {
        let s = 1.0 / 2f64.sqrt();
        let v = ComplexVector::from_vec(vec![c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)]);
        PureState::new(v, vec![2, 2]).unwrap().to_density()
    }

    #[test]
    fn tensor_examples() {
        let i2 = ComplexMatrix::identity(2, 2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4, 4));
        let zz = tensor(&pauli_z(), &pauli_z());
        let expected = [1.0, -1.0, -1.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expected[i] } else { 0.0 };
                assert_eq!(zz[(i, j)], c64(e, 0.0));
            }
        }
        let ones = ComplexMatrix::from_element(2, 2, c64(1.0, 0.0));
        let three = ComplexMatrix::from_element(1, 1, c64(3.0, 0.0));
        assert_eq!(tensor(&ones, &three), ComplexMatrix::from_element(2, 2, c64(3.0, 0.0)));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let r = partial_trace(&bell(), &[0]).unwrap();
        assert!((r.matrix() - ComplexMatrix::identity(2, 2).scale(0.5)).camax() < 1e-14);
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        assert!(matches!(
            partial_trace(&bell(), &[2]),
            Err(Error::InvalidSubsystem { index: 2, count: 2 })
        ));
        assert!(partial_transpose(&bell(), 5).is_err());
    }

    #[test]
    fn bell_partial_transpose_has_negative_eigenvalue() {
        let pt = partial_transpose(&bell(), 1).unwrap();
        let (values, _) = herm_eig(&pt).unwrap();
        assert!((values[3] + 0.5).abs() < 1e-12);
        assert!((values[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn herm_eig_diagonal() {
        let (values, vectors) = herm_eig(&pauli_z()).unwrap();
        assert_eq!(values, vec![1.0, -1.0]);
        assert!((vectors[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((vectors[(1, 1)].norm() - 1.0).abs() < 1e-14);
        let (values, _) = herm_eig(&ComplexMatrix::identity(2, 2)).unwrap();
        assert_eq!(values, vec![1.0, 1.0]);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2, 2);
        m[(0, 1)] = c64(1.0, 0.0);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn entropy_values() {
        assert!(vn_entropy(&bell()).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        assert!((vn_entropy(&mixed) - 1.0).abs() < 1e-14);
        let d = DensityMatrix::diagonal(&[0.25, 0.75], vec![2]).unwrap();
        let expected = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((vn_entropy(&d) - expected).abs() < 1e-14);
        assert!((expected - 0.811_278_124_459_132_9).abs() < 1e-15);
    }

    #[test]
    fn trace_power_examples() {
        assert!((trace_power(&bell(), 2) - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(vec![3]);
        assert!((trace_power(&mixed, 2) - 1.0 / 3.0).abs() < 1e-14);
        assert!((trace_power(&mixed, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let b = bell();
        assert!((fidelity_exact(&b, &b).unwrap() - 1.0).abs() < 1e-7);
        let zero = PureState::basis(0, vec![2]).unwrap().to_density();
        let one = PureState::basis(1, vec![2]).unwrap().to_density();
        assert!(fidelity_exact(&zero, &one).unwrap() < 1e-12);
        let p: [f64; 3] = [0.1, 0.2, 0.7];
        let q = [0.5, 0.25, 0.25];
        let bhattacharyya: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
        let f = fidelity_exact(
            &DensityMatrix::diagonal(&p, vec![3]).unwrap(),
            &DensityMatrix::diagonal(&q, vec![3]).unwrap(),
        )
        .unwrap();
        assert!((f - bhattacharyya).abs() < 1e-12);
        let other = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!(fidelity_exact(&b, &DensityMatrix::maximally_mixed(vec![3])).is_err());
        assert!((fidelity_exact(&b, &other).unwrap() - 0.5).abs() < 1e-7);
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = ComplexMatrix::identity(2, 2).scale(0.5);
        assert!(DensityMatrix::new(m.clone(), vec![3]).is_err());
        m[(0, 0)] = c64(1.5, 0.0);
        m[(1, 1)] = c64(-0.5, 0.0);
        assert!(matches!(DensityMatrix::new(m, vec![2]), Err(Error::NotPsd { .. })));
        let mut m = ComplexMatrix::identity(2, 2);
        m[(1, 1)] = c64(-1e-10, 0.0);
        let d = DensityMatrix::new(m.unscale(1.0 - 1e-10), vec![2]).unwrap();
        assert!(d.eigenvalues().iter().all(|&l| l >= 0.0));
        assert!((d.matrix().trace().re - 1.0).abs() < 1e-14);
    }
}
