use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{sha256_hex, write_atomic};
use crate::error::{Error, Result};
use crate::features::{extract, SchemaKind};
use crate::measures::{LabelMethod, Measure};
use crate::states::{rng_from_seed, Family, StateRecipe};

pub const TRAIN_FRACTION: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub id: String,
    pub recipe: StateRecipe,
    pub schema: String,
    pub features: Vec<f64>,
    pub measure: Option<Measure>,
    pub label: Option<f64>,
    pub method: Option<LabelMethod>,
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub split: Split,
}

impl LabeledRecord {
    pub fn from_recipe(recipe: StateRecipe, kind: SchemaKind, split: Split) -> Result<Self> {
        let rho = recipe.build()?;
        let fv = extract(kind, &rho)?;
        Ok(Self {
            id: recipe_id(&recipe)?,
            recipe,
            schema: fv.schema.id(),
            features: fv.values,
            measure: None,
            label: None,
            method: None,
            tolerance: None,
            error: None,
            split,
        })
    }
}

/// Truncated SHA-256 of the recipe's canonical JSON.
pub fn recipe_id(recipe: &StateRecipe) -> Result<String> {
    let json = serde_json::to_string(recipe)?;
    Ok(sha256_hex(json.as_bytes())[..16].to_string())
}

/// Which family mix a generated dataset follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Suite {
    /// Mixtures, pure states and pure/diagonal blends of n qubits.
    Coherence,
    /// Two-qutrit training class: Werner, isotropic, pure, noisy φ₁/φ₂, noisy pure, half in local-unitary orbits.
    Class1,
    Class1General,
    Class1Werner,
    Class1Isotropic,
    Class1NoisyPure,
    /// Pure states mixed with random separable states.
    Mixture,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Coherence,
        Suite::Class1,
        Suite::Class1General,
        Suite::Class1Werner,
        Suite::Class1Isotropic,
        Suite::Class1NoisyPure,
        Suite::Mixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Coherence => "coherence",
            Suite::Class1 => "class1",
            Suite::Class1General => "class1-general",
            Suite::Class1Werner => "class1-werner",
            Suite::Class1Isotropic => "class1-isotropic",
            Suite::Class1NoisyPure => "class1-noisy-pure",
            Suite::Mixture => "mixture",
        }
    }

    pub fn schema_kind(self) -> SchemaKind {
        match self {
            Suite::Coherence => SchemaKind::CoherenceZPatterns,
            _ => SchemaKind::EntanglementDiagMoments,
        }
    }

    /// Fixed split for suites that are wholly training or wholly test data.
    fn fixed_split(self) -> Option<Split> {
        match self {
            Suite::Class1 => Some(Split::Train),
            Suite::Class1General | Suite::Class1Werner | Suite::Class1Isotropic | Suite::Class1NoisyPure => {
                Some(Split::Test)
            }
            _ => None,
        }
    }

    pub fn check_dims(self, dims: &[usize]) -> Result<()> {
        let ok = match self {
            Suite::Coherence => (2..=5).contains(&dims.len()) && dims.iter().all(|&d| d == 2),
            Suite::Mixture => matches!(dims, [3, 3] | [4, 4] | [2, 2, 2, 2]),
            _ => dims == [3, 3],
        };
        if ok {
            Ok(())
        } else {
            Err(Error::WrongSystem {
                what: "dataset suite",
                dims: dims.to_vec(),
            })
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub suite: Suite,
    pub dims: Vec<usize>,
    pub count: usize,
    pub seed: u64,
}

/// Mixture component count for an n-qubit coherence dataset.
pub fn coherence_components(n: usize) -> usize {
    match n {
        2 => 8,
        3 => 6,
        4 => 35,
        _ => 50,
    }
}

/// Splits `count` into shares proportional to `weights`, remainders to the first entries.
fn apportion(count: usize, weights: &[usize]) -> Vec<usize> {
    let total: usize = weights.iter().sum();
    let mut out: Vec<usize> = weights.iter().map(|w| count * w / total).collect();
    let mut rest = count - out.iter().sum::<usize>();
    for slot in out.iter_mut() {
        if rest == 0 {
            break;
        }
        *slot += 1;
        rest -= 1;
    }
    out
}

fn stream_seed(spec: &GenSpec) -> u64 {
    let tag = format!("{}:{}:{:?}", spec.seed, spec.suite.name(), spec.dims);
    let digest = sha256_hex(tag.as_bytes());
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

fn class1_recipe<R: Rng>(family_index: usize, orbit: bool, rng: &mut R) -> StateRecipe {
    let dims = vec![3, 3];
    let seed = rng.next_u64();
    let base = match family_index {
        0 => StateRecipe::new(Family::Werner, dims, seed).with_param("f", rng.random_range(-1.0..=1.0)),
        1 => StateRecipe::new(Family::Isotropic, dims, seed).with_param("F", rng.random_range(0.0..=1.0)),
        2 => StateRecipe::new(Family::HaarPure, dims, seed),
        3 | 4 => {
            let family = if family_index == 3 { Family::Phi1Noisy } else { Family::Phi2Noisy };
            StateRecipe::new(family, dims, seed)
                .with_param("alpha", rng.random_range(0.0..std::f64::consts::TAU))
                .with_param("p", rng.random_range(0.0..=1.0))
        }
        _ => StateRecipe::new(Family::PureNoisy, dims, seed).with_param("p", rng.random_range(0.0..=1.0)),
    };
    if orbit {
        StateRecipe::wrap(Family::LocalUnitaryOrbit, base, rng.next_u64())
    } else {
        base
    }
}

fn recipes(spec: &GenSpec) -> Vec<StateRecipe> {
    let mut rng = rng_from_seed(stream_seed(spec));
    let dims = spec.dims.clone();
    let mut out = Vec::with_capacity(spec.count);
    match spec.suite {
        Suite::Coherence => {
            let k = coherence_components(dims.len()) as f64;
            let shares = apportion(spec.count, &[3, 1, 1]);
            for _ in 0..shares[0] {
                out.push(StateRecipe::new(Family::ConvexMixture, dims.clone(), rng.next_u64()).with_param("k", k));
            }
            for _ in 0..shares[1] {
                out.push(StateRecipe::new(Family::HaarPure, dims.clone(), rng.next_u64()));
            }
            for _ in 0..shares[2] {
                let seed = rng.next_u64();
                let lambda = rng.random_range(0.0..=1.0);
                out.push(StateRecipe::new(Family::PureDiagMix, dims.clone(), seed).with_param("lambda", lambda));
            }
        }
        Suite::Class1 | Suite::Class1General => {
            for (family, n) in apportion(spec.count, &[1; 6]).into_iter().enumerate() {
                for i in 0..n {
                    out.push(class1_recipe(family, i % 2 == 1, &mut rng));
                }
            }
        }
        Suite::Class1Werner => out.extend((0..spec.count).map(|_| class1_recipe(0, false, &mut rng))),
        Suite::Class1Isotropic => out.extend((0..spec.count).map(|_| class1_recipe(1, false, &mut rng))),
        Suite::Class1NoisyPure => out.extend((0..spec.count).map(|_| class1_recipe(5, false, &mut rng))),
        Suite::Mixture => {
            for _ in 0..spec.count {
                let seed = rng.next_u64();
                let lambda = rng.random_range(0.0..=1.0);
                out.push(StateRecipe::new(Family::SeparableMix, dims.clone(), seed).with_param("lambda", lambda));
            }
        }
    }
    out
}

/// Canonical 75/25 assignment: records sorted by `sha256(split_seed, id)`, the first
/// `round(0.75 N)` go to training.
pub fn assign_splits(records: &mut [LabeledRecord], split_seed: u64) {
    let mut keyed: Vec<(String, usize)> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (sha256_hex(format!("{split_seed}:{}", r.id).as_bytes()), i))
        .collect();
    keyed.sort();
    let n_train = (TRAIN_FRACTION * records.len() as f64).round() as usize;
    for (rank, (_, i)) in keyed.into_iter().enumerate() {
        records[i].split = if rank < n_train { Split::Train } else { Split::Test };
    }
}

/// Unlabeled records with features, sorted by id.
pub fn generate(spec: &GenSpec) -> Result<Vec<LabeledRecord>> {
    spec.suite.check_dims(&spec.dims)?;
    let kind = spec.suite.schema_kind();
    let split = spec.suite.fixed_split().unwrap_or(Split::Train);
    let mut records = recipes(spec)
        .into_iter()
        .map(|r| LabeledRecord::from_recipe(r, kind, split))
        .collect::<Result<Vec<_>>>()?;
    if spec.suite.fixed_split().is_none() {
        assign_splits(&mut records, spec.seed);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

pub fn write_dataset(path: &Path, records: &[LabeledRecord]) -> Result<()> {
    let mut buf = String::new();
    for r in records {
        buf.push_str(&serde_json::to_string(r)?);
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

pub fn read_dataset(path: &Path) -> Result<Vec<LabeledRecord>> {
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
