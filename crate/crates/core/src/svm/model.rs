use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::scaler::StandardScaler;
use super::smo::{solve_dual, DualSpec};
use crate::error::{Error, Result};

/// Kernel rows kept in memory during training.
const CACHE_BYTES: usize = 256 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Svr,
    Svqr,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    /// Tube half-width; ignored by SVQR.
    pub epsilon: f64,
    /// Target quantile for SVQR.
    pub delta: Option<f64>,
    pub kernel: KernelSpec,
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    /// Iteration cap, in multiples of the number of dual variables.
    pub max_passes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            epsilon: 0.01,
            delta: None,
            kernel: KernelSpec::Rbf { tau: 1.0 },
            tol: 1e-3,
            max_passes: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::ParamOutOfRange {
                name: "C",
                value: self.c,
                range: "(0, inf)",
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::ParamOutOfRange {
                name: "tol",
                value: self.tol,
                range: "(0, inf)",
            });
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidInput("max_passes must be positive".into()));
        }
        self.kernel.validate()?;
        match kind {
            ModelKind::Svr if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) => Err(Error::ParamOutOfRange {
                name: "epsilon",
                value: self.epsilon,
                range: "[0, inf)",
            }),
            ModelKind::Svqr => match self.delta {
                Some(d) if d > 0.0 && d < 1.0 => Ok(()),
                other => Err(Error::ParamOutOfRange {
                    name: "delta",
                    value: other.unwrap_or(f64::NAN),
                    range: "(0, 1)",
                }),
            },
            _ => Ok(()),
        }
    }

    /// `(upper bound on α, upper bound on α*)`.
    fn boxes(&self, kind: ModelKind) -> (f64, f64) {
        match kind {
            ModelKind::Svr => (self.c, self.c),
            ModelKind::Svqr => {
                let d = self.delta.expect("validated");
                (self.c * d, self.c * (1.0 - d))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub iterations: usize,
    /// Minimized dual objective `½ zᵀQz + pᵀz`.
    pub dual_objective: f64,
    pub violation: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kind: ModelKind,
    pub kernel: KernelSpec,
    pub scaler: StandardScaler,
    pub n_features: usize,
    /// Standardized support vectors, row-major.
    pub support_vectors: Vec<f64>,
    pub beta: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
    pub schema: Option<String>,
    pub train_manifest_hash: Option<String>,
    pub stats: TrainStats,
}

fn check_xy(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} rows vs {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("training needs at least two samples".into()));
    }
    let p = x[0].len();
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return Err(Error::DimensionMismatch("ragged or empty feature rows".into()));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite training data".into()));
    }
    Ok(p)
}

pub fn train(kind: ModelKind, x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<SvrModel> {
    cfg.validate(kind)?;
    let p = check_xy(x, y)?;
    let scaler = StandardScaler::fit(x)?;
    let xs: Vec<Vec<f64>> = x.iter().map(|r| scaler.transform(r)).collect();
    let (upper_alpha, upper_alpha_star) = cfg.boxes(kind);
    let epsilon = if kind == ModelKind::Svr { cfg.epsilon } else { 0.0 };
    let sol = solve_dual(&DualSpec {
        x: &xs,
        y,
        kernel: cfg.kernel,
        epsilon,
        upper_alpha,
        upper_alpha_star,
        tol: cfg.tol,
        max_iter: cfg.max_passes.saturating_mul(2 * x.len()),
        cache_bytes: CACHE_BYTES,
    });
    let mut support_vectors = Vec::new();
    let mut beta = Vec::new();
    for (row, &b) in xs.iter().zip(&sol.beta) {
        if b != 0.0 {
            support_vectors.extend_from_slice(row);
            beta.push(b);
        }
    }
    let model = SvrModel {
        kind,
        kernel: cfg.kernel,
        scaler,
        n_features: p,
        support_vectors,
        beta,
        bias: sol.bias,
        config: *cfg,
        schema: None,
        train_manifest_hash: None,
        stats: TrainStats {
            iterations: sol.iterations,
            dual_objective: sol.objective,
            violation: sol.violation,
            converged: sol.converged,
        },
    };
    model.check_dual_feasibility()?;
    Ok(model)
}

/// ε-insensitive support vector regression.
pub fn train_svr(x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<SvrModel> {
    train(ModelKind::Svr, x, y, cfg)
}

/// Support vector quantile regression at quantile `cfg.delta` (pinball loss).
pub fn train_svqr(x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<SvrModel> {
    train(ModelKind::Svqr, x, y, cfg)
}

impl SvrModel {
    pub fn num_support(&self) -> usize {
        self.beta.len()
    }

    pub fn support_vector(&self, k: usize) -> &[f64] {
        &self.support_vectors[k * self.n_features..(k + 1) * self.n_features]
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::SchemaMismatch {
                expected: format!("{} features", self.n_features),
                got: format!("{} features", x.len()),
            });
        }
        let z = self.scaler.transform(x);
        let mut f = self.bias;
        for (k, b) in self.beta.iter().enumerate() {
            f += b * self.kernel.eval(self.support_vector(k), &z);
        }
        Ok(f)
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// `Σβ = 0` and the box constraints of the dual.
    pub fn check_dual_feasibility(&self) -> Result<()> {
        let slack = 1e-9 * self.config.c.max(1.0);
        let total: f64 = self.beta.iter().sum();
        if total.abs() > slack * self.beta.len().max(1) as f64 {
            return Err(Error::InvalidInput(format!("dual coefficients sum to {total:e}")));
        }
        let (lo, hi) = match self.kind {
            ModelKind::Svr => (-self.config.c, self.config.c),
            ModelKind::Svqr => {
                let d = self.config.delta.unwrap_or(0.5);
                (-self.config.c * (1.0 - d), self.config.c * d)
            }
        };
        if let Some(b) = self.beta.iter().find(|&&b| b < lo - slack || b > hi + slack) {
            return Err(Error::InvalidInput(format!("dual coefficient {b} outside [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Fails with `NonConvergence` when training hit its iteration cap.
    pub fn ensure_converged(&self) -> Result<()> {
        if self.stats.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence {
                passes: self.config.max_passes,
                violation: self.stats.violation,
            })
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: SvrModel = serde_json::from_str(s)?;
        if m.support_vectors.len() != m.beta.len() * m.n_features || m.scaler.dim() != m.n_features {
            return Err(Error::InvalidInput("inconsistent model file".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::pipeline::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (Vec<Vec<f64>>, Vec<f64>) {
        (vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.0, 1.0, 2.0])
    }

    #[test]
    fn constant_target_gives_bias_only_model() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y = vec![0.7; 10];
        let cfg = TrainConfig {
            c: 1e3,
            epsilon: 0.01,
            ..Default::default()
        };
        let m = train_svr(&x, &y, &cfg).unwrap();
        assert_eq!(m.num_support(), 0);
        assert!((m.bias - 0.7).abs() <= 0.01 + 1e-9);
        for xi in &x {
            assert!((m.predict(xi).unwrap() - 0.7).abs() <= 0.01 + 1e-9);
        }
    }

    #[test]
    fn linear_fit_through_three_points() {
        let (x, y) = line();
        let cfg = TrainConfig {
            c: 1e3,
            epsilon: 1e-3,
            kernel: KernelSpec::Linear,
            tol: 1e-8,
            ..Default::default()
        };
        let m = train_svr(&x, &y, &cfg).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((m.predict(xi).unwrap() - yi).abs() < 2e-3);
        }
        assert!(m.stats.converged);
    }

    #[test]
    fn svqr_constant_target_is_exact() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y = vec![0.3; 8];
        let cfg = TrainConfig {
            delta: Some(0.02),
            ..Default::default()
        };
        let m = train_svqr(&x, &y, &cfg).unwrap();
        for xi in &x {
            assert!((m.predict(xi).unwrap() - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn config_validation() {
        let (x, y) = line();
        let bad = TrainConfig {
            c: 0.0,
            ..Default::default()
        };
        assert!(train_svr(&x, &y, &bad).is_err());
        assert!(train_svqr(&x, &y, &TrainConfig::default()).is_err());
        let svqr = TrainConfig {
            delta: Some(1.0),
            ..Default::default()
        };
        assert!(train_svqr(&x, &y, &svqr).is_err());
        assert!(train_svr(&x[..1], &y[..1], &TrainConfig::default()).is_err());
    }

    #[test]
    fn predict_checks_length_and_batch_matches() {
        let (x, y) = line();
        let m = train_svr(&x, &y, &TrainConfig::default()).unwrap();
        assert!(matches!(m.predict(&[1.0, 2.0]), Err(Error::SchemaMismatch { .. })));
        let batch = m.predict_batch(&x).unwrap();
        for (xi, b) in x.iter().zip(batch) {
            assert_eq!(m.predict(xi).unwrap(), b);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.37).sin(), i as f64 / 7.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 0.3 + r[1].cos() / 3.0).collect();
        let mut m = train_svr(&x, &y, &TrainConfig::default()).unwrap();
        m.schema = Some("coherence-z/2x2".into());
        let back = SvrModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        for xi in &x {
            assert_eq!(back.predict(xi).unwrap().to_bits(), m.predict(xi).unwrap().to_bits());
        }
    }
}
