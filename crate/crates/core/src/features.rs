//! Compact feature vectors built from diagonal probabilities and spectral moments.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{digits, partial_trace, trace_power, DensityMatrix};
use crate::states::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemaKind {
    CoherenceZPatterns,
    EntanglementDiagMoments,
}

/// What a single feature entry measures; decides how perturbations are clipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryKind {
    ZPattern,
    Projector,
    Moment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub kind: SchemaKind,
    pub dims: Vec<usize>,
    pub names: Vec<String>,
}

/// σ_z patterns of weight 1 up to `min(3, n)`: ascending weight, then lexicographic slots.
pub fn z_patterns(n: usize) -> Vec<Vec<usize>> {
    fn combos(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for s in start..n {
            cur.push(s);
            combos(n, k, s + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for k in 1..=n.min(3) {
        combos(n, k, 0, &mut Vec::new(), &mut out);
    }
    out
}

const SUBSYSTEM_LETTERS: &[u8] = b"ABCDEFGH";

impl FeatureSchema {
    pub fn coherence(n_qubits: usize) -> Result<Self> {
        let dims = vec![2; n_qubits];
        if !(2..=5).contains(&n_qubits) {
            return Err(Error::WrongSystem {
                what: "coherence features",
                dims,
            });
        }
        let mut names: Vec<String> = z_patterns(n_qubits)
            .iter()
            .map(|p| {
                let ops: String = (0..n_qubits).map(|s| if p.contains(&s) { 'Z' } else { 'I' }).collect();
                format!("<{ops}>")
            })
            .collect();
        names.push("Tr[rho^2]".into());
        names.push("Tr[rho^3]".into());
        Ok(Self {
            kind: SchemaKind::CoherenceZPatterns,
            dims,
            names,
        })
    }

    pub fn entanglement(dims: &[usize]) -> Result<Self> {
        if !matches!(dims, [3, 3] | [4, 4] | [2, 2, 2, 2]) {
            return Err(Error::WrongSystem {
                what: "entanglement features",
                dims: dims.to_vec(),
            });
        }
        let d: usize = dims.iter().product();
        let mut names: Vec<String> = (0..d)
            .map(|k| {
                let label: String = digits(k, dims).iter().map(|x| x.to_string()).collect();
                format!("<P{label}>")
            })
            .collect();
        names.push("Tr[rho^2]".into());
        names.push("Tr[rho^3]".into());
        for s in 0..dims.len() {
            let letter = SUBSYSTEM_LETTERS[s] as char;
            names.push(format!("Tr[rho_{letter}^2]"));
            names.push(format!("Tr[rho_{letter}^3]"));
        }
        Ok(Self {
            kind: SchemaKind::EntanglementDiagMoments,
            dims: dims.to_vec(),
            names,
        })
    }

    /// Schema for a system studied with the given measure family.
    pub fn for_system(kind: SchemaKind, dims: &[usize]) -> Result<Self> {
        match kind {
            SchemaKind::CoherenceZPatterns => {
                if dims.iter().any(|&d| d != 2) {
                    return Err(Error::WrongSystem {
                        what: "coherence features",
                        dims: dims.to_vec(),
                    });
                }
                Self::coherence(dims.len())
            }
            SchemaKind::EntanglementDiagMoments => Self::entanglement(dims),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Stable identifier stored in dataset records and models.
    pub fn id(&self) -> String {
        let kind = match self.kind {
            SchemaKind::CoherenceZPatterns => "coherence-z",
            SchemaKind::EntanglementDiagMoments => "entanglement-diag",
        };
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        format!("{kind}/{}", dims.join("x"))
    }

    pub fn entry_kind(&self, index: usize) -> EntryKind {
        let d: usize = self.dims.iter().product();
        match self.kind {
            SchemaKind::CoherenceZPatterns if index + 2 < self.len() => EntryKind::ZPattern,
            SchemaKind::EntanglementDiagMoments if index < d => EntryKind::Projector,
            _ => EntryKind::Moment,
        }
    }
}

impl fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema: FeatureSchema,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(schema: FeatureSchema, values: Vec<f64>) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} values for {}", schema.len(), schema.id()),
                got: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        Ok(Self { schema, values })
    }
}

/// `Σ_k (-1)^{popcount(k on slots)} p_k`; qubit 0 is the most significant bit.
fn z_expectation(probs: &[f64], n: usize, slots: &[usize]) -> f64 {
    let mask: usize = slots.iter().map(|&s| 1usize << (n - 1 - s)).sum();
    probs
        .iter()
        .enumerate()
        .map(|(k, p)| if (k & mask).count_ones().is_multiple_of(2) { *p } else { -*p })
        .sum()
}

pub fn coherence_features(rho: &DensityMatrix) -> Result<FeatureVector> {
    let dims = rho.dims();
    if dims.iter().any(|&d| d != 2) {
        return Err(Error::WrongSystem {
            what: "coherence features",
            dims: dims.to_vec(),
        });
    }
    let schema = FeatureSchema::coherence(dims.len())?;
    let n = dims.len();
    let probs = rho.diagonal_probs();
    let mut values: Vec<f64> = z_patterns(n).iter().map(|p| z_expectation(&probs, n, p)).collect();
    values.push(trace_power(rho, 2));
    values.push(trace_power(rho, 3));
    FeatureVector::new(schema, values)
}

pub fn entanglement_features(rho: &DensityMatrix) -> Result<FeatureVector> {
    let schema = FeatureSchema::entanglement(rho.dims())?;
    let mut values = rho.diagonal_probs();
    values.push(trace_power(rho, 2));
    values.push(trace_power(rho, 3));
    for s in 0..rho.dims().len() {
        let reduced = partial_trace(rho, &[s])?;
        values.push(trace_power(&reduced, 2));
        values.push(trace_power(&reduced, 3));
    }
    FeatureVector::new(schema, values)
}

/// Features for the schema kind matching `dims` and the measure family.
pub fn extract(kind: SchemaKind, rho: &DensityMatrix) -> Result<FeatureVector> {
    match kind {
        SchemaKind::CoherenceZPatterns => coherence_features(rho),
        SchemaKind::EntanglementDiagMoments => entanglement_features(rho),
    }
}

/// Multiplies every entry by `1 + u`, `u ~ U[-level, level]`, then clips to the entry's range.
pub fn perturb_features(fv: &FeatureVector, level: f64, seed: u64) -> Result<FeatureVector> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::ParamOutOfRange {
            name: "level",
            value: level,
            range: "[0, inf)",
        });
    }
    let mut rng = rng_from_seed(seed);
    let values = fv
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let u = if level > 0.0 { rng.random_range(-level..=level) } else { 0.0 };
            let p = v * (1.0 + u);
            match fv.schema.entry_kind(i) {
                EntryKind::ZPattern => p.clamp(-1.0, 1.0),
                EntryKind::Projector => p.clamp(0.0, 1.0),
                EntryKind::Moment => p.clamp(f64::MIN_POSITIVE, 1.0),
            }
        })
        .collect();
    FeatureVector::new(fv.schema.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::PureState;
    use crate::states::{max_entangled, random_mixed};

    #[test]
    fn pattern_counts_and_order() {
        let counts: Vec<usize> = (2..=5).map(|n| z_patterns(n).len()).collect();
        assert_eq!(counts, vec![3, 7, 14, 25]);
        let p3 = z_patterns(3);
        assert_eq!(p3[0], vec![0]);
        assert_eq!(p3[3], vec![0, 1]);
        assert_eq!(p3[6], vec![0, 1, 2]);
        let names = FeatureSchema::coherence(5).unwrap().names;
        assert_eq!(names.first().unwrap(), "<ZIIII>");
        assert_eq!(names[24], "<IIZZZ>");
        assert_eq!(names.len(), 27);
    }

    #[test]
    fn schema_lengths() {
        let lens: Vec<usize> = (2..=5).map(|n| FeatureSchema::coherence(n).unwrap().len()).collect();
        assert_eq!(lens, vec![5, 9, 16, 27]);
        assert_eq!(FeatureSchema::entanglement(&[3, 3]).unwrap().len(), 15);
        assert_eq!(FeatureSchema::entanglement(&[4, 4]).unwrap().len(), 22);
        assert_eq!(FeatureSchema::entanglement(&[2, 2, 2, 2]).unwrap().len(), 26);
        assert!(FeatureSchema::entanglement(&[2, 3]).is_err());
        assert!(FeatureSchema::coherence(6).is_err());
    }

    #[test]
    fn coherence_examples() {
        let zero = PureState::basis(0, vec![2, 2]).unwrap().to_density();
        assert_eq!(coherence_features(&zero).unwrap().values, vec![1.0; 5]);
        let flat = coherence_features(&DensityMatrix::maximally_mixed(vec![2, 2])).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.25, 0.0625];
        for (a, b) in flat.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(coherence_features(&DensityMatrix::maximally_mixed(vec![3])).is_err());
    }

    #[test]
    fn entanglement_examples() {
        let fv = entanglement_features(&max_entangled(3).to_density()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((fv.values[3 * i + j] - expected).abs() < 1e-14);
            }
        }
        let tail = &fv.values[9..];
        let expected = [1.0, 1.0, 1.0 / 3.0, 1.0 / 9.0, 1.0 / 3.0, 1.0 / 9.0];
        for (a, b) in tail.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let flat = entanglement_features(&DensityMatrix::maximally_mixed(vec![3, 3])).unwrap();
        assert!((flat.values[0] - 1.0 / 9.0).abs() < 1e-15);
        assert!((flat.values[9] - 1.0 / 9.0).abs() < 1e-15);
        assert!((flat.values[11] - 1.0 / 3.0).abs() < 1e-14);
        let product = PureState::basis(5, vec![2, 2, 2, 2]).unwrap().to_density();
        let fv = entanglement_features(&product).unwrap();
        assert!(fv.values[16..].iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn perturbation_bounds_and_determinism() {
        let rho = random_mixed(&[2, 2, 2], 6, 4).unwrap();
        let fv = coherence_features(&rho).unwrap();
        assert_eq!(perturb_features(&fv, 0.0, 1).unwrap(), fv);
        let a = perturb_features(&fv, 0.02, 9).unwrap();
        assert_eq!(a, perturb_features(&fv, 0.02, 9).unwrap());
        assert_ne!(a, perturb_features(&fv, 0.02, 10).unwrap());
        for (p, v) in a.values.iter().zip(&fv.values) {
            assert!((p - v).abs() <= 0.02 * v.abs() + 1e-15);
        }
        assert!(perturb_features(&fv, -0.1, 1).is_err());
    }

    #[test]
    fn moments_clip_to_unit_interval() {
        let pure = PureState::basis(0, vec![2, 2]).unwrap().to_density();
        let fv = coherence_features(&pure).unwrap();
        for seed in 0..20 {
            let p = perturb_features(&fv, 0.5, seed).unwrap();
            assert!(p.values.iter().all(|v| (-1.0..=1.0).contains(v)));
            assert!(p.values[3] > 0.0 && p.values[4] > 0.0);
        }
    }
}
