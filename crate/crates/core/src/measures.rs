//! Coherence and entanglement measures, with closed forms where they exist.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{shannon_entropy, vn_entropy, ComplexMatrix, DensityMatrix, PureState};
use crate::sdp::{max_fidelity_incoherent, max_fidelity_ppt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    L1Coherence,
    RelEntCoherence,
    GeomCoherence,
    GeomEntanglement,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::L1Coherence,
        Measure::RelEntCoherence,
        Measure::GeomCoherence,
        Measure::GeomEntanglement,
    ];
    pub const COHERENCE: [Measure; 3] = [Measure::L1Coherence, Measure::RelEntCoherence, Measure::GeomCoherence];

    pub fn name(self) -> &'static str {
        match self {
            Measure::L1Coherence => "L1Coherence",
            Measure::RelEntCoherence => "RelEntCoherence",
            Measure::GeomCoherence => "GeomCoherence",
            Measure::GeomEntanglement => "GeomEntanglement",
        }
    }

    pub fn is_coherence(self) -> bool {
        self != Measure::GeomEntanglement
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown measure {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelMethod {
    Analytic,
    #[serde(rename = "SDP")]
    Sdp,
    PureOracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureLabel {
    pub measure: Measure,
    pub value: f64,
    pub method: LabelMethod,
    pub tolerance: f64,
}

/// `Σ_{i≠j} |ρ_ij|`.
pub fn c_l1(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let mut total = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                total += m[(i, j)].norm();
            }
        }
    }
    total
}

/// `S(diag ρ) - S(ρ)` in bits.
pub fn c_rel_ent(rho: &DensityMatrix) -> f64 {
    (shannon_entropy(&rho.diagonal_probs()) - vn_entropy(rho)).max(0.0)
}

/// `1 - max_{σ incoherent} F(ρ, σ)²`.
pub fn c_geometric(rho: &DensityMatrix, tol: f64) -> Result<f64> {
    let (f, _) = max_fidelity_incoherent(rho, tol)?;
    Ok((1.0 - f * f).clamp(0.0, 1.0))
}

/// `1 - max_i |⟨i|ψ⟩|²`.
pub fn cg_pure_oracle(psi: &PureState) -> f64 {
    let pmax = psi.amps().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    1.0 - pmax
}

/// Lower bound `1 - max_{σ PPT} F(ρ, σ)²` on the geometric measure of entanglement.
pub fn eg_lower(rho: &DensityMatrix, bipartitions: &[Vec<usize>], tol: f64) -> Result<f64> {
    if bipartitions.is_empty() || bipartitions.iter().any(|b| b.is_empty()) {
        return Err(Error::InvalidInput("eg_lower needs nonempty bipartitions".into()));
    }
    let f = max_fidelity_ppt(rho, bipartitions, tol)?;
    Ok((1.0 - f * f).clamp(0.0, 1.0))
}

/// `1 - (largest Schmidt coefficient)²` for a two-party pure state.
pub fn eg_pure_oracle(psi: &PureState) -> Result<f64> {
    let [da, db] = psi.dims() else {
        return Err(Error::NotBipartite(psi.dims().len()));
    };
    let amps = psi.amps();
    let m = ComplexMatrix::from_fn(*da, *db, |i, j| amps[i * db + j]);
    let smax = m.singular_values().max();
    Ok((1.0 - smax * smax).max(0.0))
}

/// `½(1 - √(1 - f²))` for Werner states with `f ≤ 0`.
pub fn eg_werner_analytic(f: f64) -> Result<f64> {
    if !(-1.0..=0.0).contains(&f) {
        return Err(Error::ParamOutOfRange {
            name: "f",
            value: f,
            range: "[-1, 0]",
        });
    }
    Ok(0.5 * (1.0 - (1.0 - f * f).max(0.0).sqrt()))
}

/// `1 - (√F + √((1-F)(d-1)))² / d` for isotropic states with `F ≥ 1/d`.
pub fn eg_isotropic_analytic(d: usize, fidelity: f64) -> Result<f64> {
    let df = d as f64;
    if d < 2 || !(fidelity >= 1.0 / df - 1e-15 && fidelity <= 1.0) {
        return Err(Error::ParamOutOfRange {
            name: "F",
            value: fidelity,
            range: "[1/d, 1]",
        });
    }
    let root = fidelity.sqrt() + ((1.0 - fidelity) * (df - 1.0)).sqrt();
    Ok((1.0 - root * root / df).max(0.0))
}
