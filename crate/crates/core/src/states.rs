//! Seeded generators for the state families used to build datasets.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{c64, tensor_all, ComplexMatrix, ComplexVector, DensityMatrix, PureState};

/// Default number of product components in a random separable state.
pub const DEFAULT_SEPARABLE_COMPONENTS: usize = 10;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn param_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange { name, value, range })
    }
}

/// Complex standard-normal vector normalized to unit length (Haar on the sphere).
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexVector {
    let v = ComplexVector::from_fn(d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im)
    });
    let n = v.norm();
    v.unscale(n)
}

/// Haar unitary: QR of a complex Ginibre matrix with the phases of `diag(R)` absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) * FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { c64(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniform point on the probability simplex (Dirichlet(1, ..., 1)).
pub fn simplex_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d < 1) || dims.iter().product::<usize>() < 2 {
        return Err(Error::InvalidInput(format!("invalid subsystem dims {dims:?}")));
    }
    Ok(())
}

pub fn random_pure(dims: &[usize], seed: u64) -> Result<PureState> {
    check_dims(dims)?;
    let mut rng = rng_from_seed(seed);
    random_pure_with(dims, &mut rng)
}

fn random_pure_with<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<PureState> {
    let d = dims.iter().product();
    PureState::new(haar_vector(d, rng), dims.to_vec())
}

fn mixture(weights: &[f64], components: &[ComplexMatrix], dims: &[usize]) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    let mut acc = ComplexMatrix::zeros(d, d);
    for (w, c) in weights.iter().zip(components) {
        acc += c.scale(*w);
    }
    DensityMatrix::from_unnormalized(acc, dims.to_vec())
}

/// Random convex combination of `k` Haar pure states.
pub fn random_mixed(dims: &[usize], k: usize, seed: u64) -> Result<DensityMatrix> {
    check_dims(dims)?;
    if k == 0 {
        return Err(Error::InvalidInput("component count must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    random_mixed_with(dims, k, &mut rng)
}

fn random_mixed_with<R: Rng + ?Sized>(dims: &[usize], k: usize, rng: &mut R) -> Result<DensityMatrix> {
    let comps = (0..k)
        .map(|_| random_pure_with(dims, rng).map(|p| p.projector()))
        .collect::<Result<Vec<_>>>()?;
    let w = simplex_weights(k, rng);
    mixture(&w, &comps, dims)
}

/// Diagonal (incoherent) state with simplex-uniform populations.
pub fn random_diagonal(dims: &[usize], seed: u64) -> Result<DensityMatrix> {
    check_dims(dims)?;
    let mut rng = rng_from_seed(seed);
    random_diagonal_with(dims, &mut rng)
}

fn random_diagonal_with<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<DensityMatrix> {
    let d = dims.iter().product();
    DensityMatrix::diagonal(&simplex_weights(d, rng), dims.to_vec())
}

/// `λ|ψ⟩⟨ψ| + (1-λ)σ_diag`; `λ` is drawn uniformly when not given.
pub fn pure_diag_mix(dims: &[usize], lambda: Option<f64>, seed: u64) -> Result<DensityMatrix> {
    check_dims(dims)?;
    if let Some(l) = lambda {
        param_range("lambda", l, 0.0, 1.0, "[0, 1]")?;
    }
    let mut rng = rng_from_seed(seed);
    let psi = random_pure_with(dims, &mut rng)?;
    let diag = random_diagonal_with(dims, &mut rng)?;
    let lambda = lambda.unwrap_or_else(|| rng.random::<f64>());
    psi.to_density().mix(lambda, &diag)
}

/// Swap operator `F = Σ |ij⟩⟨ji|` on `d ⊗ d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut f = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(i * d + j, j * d + i)] = c64(1.0, 0.0);
        }
    }
    f
}

/// Normalized maximally entangled vector `Σ|ii⟩/√d`.
pub fn max_entangled(d: usize) -> PureState {
    let mut v = ComplexVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = c64(1.0, 0.0);
    }
    PureState::new(v, vec![d, d]).expect("nonzero vector")
}

/// Werner state with `Tr(ρ F) = f`.
pub fn werner(d: usize, f: f64) -> Result<DensityMatrix> {
    param_range("f", f, -1.0, 1.0, "[-1, 1]")?;
    if d < 2 {
        return Err(Error::InvalidInput("Werner states need d >= 2".into()));
    }
    let df = d as f64;
    let denom = df.powi(4) - df * df;
    let a = (df * df - f * df) / denom;
    let b = (f * df * df - df) / denom;
    let n = d * d;
    let m = ComplexMatrix::identity(n, n).scale(a) + swap_operator(d).scale(b);
    DensityMatrix::new(m, vec![d, d])
}

/// Isotropic state with singlet fraction `F = ⟨ψ⁺|ρ|ψ⁺⟩` (normalized `ψ⁺`).
pub fn isotropic(d: usize, fidelity: f64) -> Result<DensityMatrix> {
    param_range("F", fidelity, 0.0, 1.0, "[0, 1]")?;
    if d < 2 {
        return Err(Error::InvalidInput("isotropic states need d >= 2".into()));
    }
    let n = d * d;
    let p = max_entangled(d).projector();
    let id = ComplexMatrix::identity(n, n);
    let m = (id - &p).scale((1.0 - fidelity) / (n as f64 - 1.0)) + p.scale(fidelity);
    DensityMatrix::new(m, vec![d, d])
}

/// `p|ψ⟩⟨ψ| + (1-p) I/d`.
pub fn with_white_noise(psi: &PureState, p: f64) -> Result<DensityMatrix> {
    param_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let noise = DensityMatrix::maximally_mixed(psi.dims().to_vec());
    psi.to_density().mix(p, &noise)
}

/// Coefficients of the two-qutrit family `Σ_{i<j} b_ij(|ij⟩+|ji⟩) + Σ_i b_i|ii⟩`.
/// `off` is ordered as `(b_01, b_02, b_12)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiCoefficients {
    pub off: [f64; 3],
    pub diag: [f64; 3],
}

impl PhiCoefficients {
    /// `b_ij = cos α / √6`, `b_i = sin α / √3`.
    pub fn phi1(alpha: f64) -> Self {
        Self {
            off: [alpha.cos() / 6f64.sqrt(); 3],
            diag: [alpha.sin() / 3f64.sqrt(); 3],
        }
    }

    /// `b_0 = b_1 = sin α · √2/2`, `b_2 = cos α`, no off-diagonal terms.
    pub fn phi2(alpha: f64) -> Self {
        let s = alpha.sin() * FRAC_1_SQRT_2;
        Self {
            off: [0.0; 3],
            diag: [s, s, alpha.cos()],
        }
    }

    pub fn state(&self) -> Result<PureState> {
        let mut v = ComplexVector::zeros(9);
        let pairs = [(0, 1), (0, 2), (1, 2)];
        for (&(i, j), &b) in pairs.iter().zip(&self.off) {
            v[3 * i + j] += c64(b, 0.0);
            v[3 * j + i] += c64(b, 0.0);
        }
        for (i, &b) in self.diag.iter().enumerate() {
            v[3 * i + i] += c64(b, 0.0);
        }
        PureState::new(v, vec![3, 3])
    }
}

/// `p|φ⟩⟨φ| + (1-p) I₉/9` for the given coefficient family.
pub fn phi_family(coeffs: &PhiCoefficients, p: f64) -> Result<DensityMatrix> {
    with_white_noise(&coeffs.state()?, p)
}

/// `(U₁ ⊗ ... ⊗ U_n) ρ (...)†` with independent Haar unitaries per subsystem.
pub fn apply_local_unitaries(rho: &DensityMatrix, seed: u64) -> Result<DensityMatrix> {
    let mut rng = rng_from_seed(seed);
    apply_local_unitaries_with(rho, &mut rng)
}

fn apply_local_unitaries_with<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> Result<DensityMatrix> {
    if rho.dims().len() < 2 {
        return Err(Error::WrongSystem {
            what: "local unitaries",
            dims: rho.dims().to_vec(),
        });
    }
    let us: Vec<ComplexMatrix> = rho.dims().iter().map(|&d| haar_unitary(d, rng)).collect();
    rho.conjugate_by(&tensor_all(&us))
}

/// A completely positive trace-preserving map on one subsystem.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidInput("empty Kraus set".into()))?;
        let (r, c) = first.shape();
        if r != c || operators.iter().any(|e| e.shape() != (r, c)) {
            return Err(Error::DimensionMismatch("Kraus operators must share a square shape".into()));
        }
        let mut sum = ComplexMatrix::zeros(r, r);
        for e in &operators {
            sum += e.adjoint() * e;
        }
        let dev = (sum - ComplexMatrix::identity(r, r)).camax();
        if dev > 1e-10 {
            return Err(Error::InvalidInput(format!("Kraus set not complete (deviation {dev:e})")));
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    /// Applies the channel independently on each listed subsystem.
    pub fn apply(&self, rho: &DensityMatrix, subsystems: &[usize]) -> Result<DensityMatrix> {
        let dims = rho.dims();
        let mut current = rho.matrix().clone();
        for &s in subsystems {
            if s >= dims.len() {
                return Err(Error::InvalidSubsystem { index: s, count: dims.len() });
            }
            if dims[s] != self.dim() {
                return Err(Error::WrongSystem {
                    what: "Kraus channel",
                    dims: dims.to_vec(),
                });
            }
            let mut next = ComplexMatrix::zeros(current.nrows(), current.ncols());
            for e in &self.operators {
                let factors: Vec<ComplexMatrix> = dims
                    .iter()
                    .enumerate()
                    .map(|(k, &d)| if k == s { e.clone() } else { ComplexMatrix::identity(d, d) })
                    .collect();
                let big = tensor_all(&factors);
                next += &big * &current * big.adjoint();
            }
            current = next;
        }
        DensityMatrix::from_unnormalized(current, dims.to_vec())
    }
}

/// Qutrit amplitude damping with `E₀ = |0⟩⟨0| + √(1-r)(|1⟩⟨1| + |2⟩⟨2|)`,
/// `E₁ = √r|0⟩⟨1|`, `E₂ = √r|0⟩⟨2|`.
pub fn qutrit_amplitude_damping(r: f64) -> Result<KrausChannel> {
    param_range("r", r, 0.0, 1.0, "[0, 1]")?;
    let s = (1.0 - r).sqrt();
    let t = r.sqrt();
    let mut e0 = ComplexMatrix::zeros(3, 3);
    e0[(0, 0)] = c64(1.0, 0.0);
    e0[(1, 1)] = c64(s, 0.0);
    e0[(2, 2)] = c64(s, 0.0);
    let mut e1 = ComplexMatrix::zeros(3, 3);
    e1[(0, 1)] = c64(t, 0.0);
    let mut e2 = ComplexMatrix::zeros(3, 3);
    e2[(0, 2)] = c64(t, 0.0);
    KrausChannel::new(vec![e0, e1, e2])
}

/// Damps subsystem 0, or both subsystems of a two-qutrit state when `both_subsystems`.
pub fn amplitude_damp_qutrit(rho: &DensityMatrix, r: f64, both_subsystems: bool) -> Result<DensityMatrix> {
    if rho.dims().iter().any(|&d| d != 3) {
        return Err(Error::WrongSystem {
            what: "qutrit amplitude damping",
            dims: rho.dims().to_vec(),
        });
    }
    let channel = qutrit_amplitude_damping(r)?;
    let targets: Vec<usize> = if both_subsystems {
        (0..rho.dims().len()).collect()
    } else {
        vec![0]
    };
    channel.apply(rho, &targets)
}

/// Fully separable state `Σ_i w_i ⊗_s |ψ_i^(s)⟩⟨ψ_i^(s)|`.
pub fn random_separable(dims: &[usize], k: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = rng_from_seed(seed);
    random_separable_with(dims, k, &mut rng).map(|(rho, _)| rho)
}

/// Also returns the product components, one vector per subsystem.
pub fn random_separable_components(
    dims: &[usize],
    k: usize,
    seed: u64,
) -> Result<(DensityMatrix, Vec<(f64, Vec<PureState>)>)> {
    let mut rng = rng_from_seed(seed);
    random_separable_with(dims, k, &mut rng)
}

#[allow(clippy::type_complexity)]
fn random_separable_with<R: Rng + ?Sized>(
    dims: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<(DensityMatrix, Vec<(f64, Vec<PureState>)>)> {
    check_dims(dims)?;
    if k == 0 {
        return Err(Error::InvalidInput("component count must be at least 1".into()));
    }
    let mut parts = Vec::with_capacity(k);
    let mut projectors = Vec::with_capacity(k);
    for _ in 0..k {
        let locals = dims
            .iter()
            .map(|&d| random_pure_with(&[d], rng))
            .collect::<Result<Vec<_>>>()?;
        let proj: Vec<ComplexMatrix> = locals.iter().map(|p| p.projector()).collect();
        projectors.push(tensor_all(&proj));
        parts.push(locals);
    }
    let w = simplex_weights(k, rng);
    let rho = mixture(&w, &projectors, dims)?;
    Ok((rho, w.into_iter().zip(parts).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    HaarPure,
    ConvexMixture,
    Diagonal,
    PureDiagMix,
    Werner,
    Isotropic,
    Phi1Noisy,
    Phi2Noisy,
    PureNoisy,
    SeparableMix,
    LocalUnitaryOrbit,
    AmplitudeDamped,
}

/// Everything needed to rebuild a state bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecipe {
    pub family: Family,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<StateRecipe>>,
}

impl StateRecipe {
    pub fn new(family: Family, dims: Vec<usize>, seed: u64) -> Self {
        Self {
            family,
            dims,
            params: BTreeMap::new(),
            seed,
            base: None,
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn wrap(family: Family, base: StateRecipe, seed: u64) -> Self {
        Self {
            family,
            dims: base.dims.clone(),
            params: BTreeMap::new(),
            seed,
            base: Some(Box::new(base)),
        }
    }

    fn param(&self, name: &'static str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("{:?} recipe is missing parameter {name}", self.family)))
    }

    fn count_param(&self, name: &'static str, default: usize) -> Result<usize> {
        match self.params.get(name) {
            None => Ok(default),
            Some(&v) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(&v) => Err(Error::ParamOutOfRange {
                name,
                value: v,
                range: "positive integer",
            }),
        }
    }

    fn bipartite_dim(&self) -> Result<usize> {
        match self.dims.as_slice() {
            [a, b] if a == b => Ok(*a),
            _ => Err(Error::WrongSystem {
                what: "bipartite d⊗d family",
                dims: self.dims.clone(),
            }),
        }
    }

    /// Whether the recipe always yields a pure state.
    pub fn is_pure(&self) -> bool {
        match self.family {
            Family::HaarPure => true,
            Family::ConvexMixture => self.params.get("k") == Some(&1.0),
            Family::LocalUnitaryOrbit => self.base.as_ref().is_some_and(|b| b.is_pure()),
            _ => false,
        }
    }

    /// Pure state vector for recipes that are pure by construction.
    pub fn build_pure(&self) -> Result<Option<PureState>> {
        match self.family {
            Family::HaarPure => random_pure(&self.dims, self.seed).map(Some),
            _ => Ok(None),
        }
    }

    pub fn build(&self) -> Result<DensityMatrix> {
        check_dims(&self.dims)?;
        let dims = &self.dims;
        match self.family {
            Family::HaarPure => Ok(random_pure(dims, self.seed)?.to_density()),
            Family::ConvexMixture => random_mixed(dims, self.count_param("k", 8)?, self.seed),
            Family::Diagonal => random_diagonal(dims, self.seed),
            Family::PureDiagMix => pure_diag_mix(dims, self.params.get("lambda").copied(), self.seed),
            Family::Werner => werner(self.bipartite_dim()?, self.param("f")?),
            Family::Isotropic => isotropic(self.bipartite_dim()?, self.param("F")?),
            Family::Phi1Noisy | Family::Phi2Noisy => {
                if dims != &[3, 3] {
                    return Err(Error::WrongSystem {
                        what: "phi family",
                        dims: dims.clone(),
                    });
                }
                let alpha = self.param("alpha")?;
                let coeffs = if self.family == Family::Phi1Noisy {
                    PhiCoefficients::phi1(alpha)
                } else {
                    PhiCoefficients::phi2(alpha)
                };
                phi_family(&coeffs, self.param("p")?)
            }
            Family::PureNoisy => with_white_noise(&random_pure(dims, self.seed)?, self.param("p")?),
            Family::SeparableMix => {
                let lambda = self.param("lambda")?;
                param_range("lambda", lambda, 0.0, 1.0, "[0, 1]")?;
                let k = self.count_param("k", DEFAULT_SEPARABLE_COMPONENTS)?;
                let mut rng = rng_from_seed(self.seed);
                let psi = random_pure_with(dims, &mut rng)?;
                let (sep, _) = random_separable_with(dims, k, &mut rng)?;
                psi.to_density().mix(lambda, &sep)
            }
            Family::LocalUnitaryOrbit => {
                let base = self.base_recipe()?.build()?;
                apply_local_unitaries(&base, self.seed)
            }
            Family::AmplitudeDamped => {
                let base = self.base_recipe()?.build()?;
                let both = self.params.get("both").copied().unwrap_or(1.0) != 0.0;
                amplitude_damp_qutrit(&base, self.param("r")?, both)
            }
        }
    }

    fn base_recipe(&self) -> Result<&StateRecipe> {
        self.base
            .as_deref()
            .ok_or_else(|| Error::InvalidInput(format!("{:?} recipe needs a base recipe", self.family)))
    }
}
