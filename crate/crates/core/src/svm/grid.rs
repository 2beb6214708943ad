use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::metrics::pinball_loss;
use super::model::{train, ModelKind, TrainConfig};
use crate::error::{Error, Result};
use crate::states::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c: Vec<f64>,
    /// Ignored for SVQR, which has no tube.
    pub epsilon: Vec<f64>,
    pub tau: Vec<f64>,
    /// Fixed quantile used for SVQR cells.
    pub delta: f64,
    pub folds: usize,
    pub seed: u64,
    /// Cross-validate on a seeded subset of at most this many samples.
    pub subsample: Option<usize>,
    pub tol: f64,
    pub max_passes: usize,
    pub workers: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            c: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            epsilon: vec![0.001, 0.01, 0.05, 0.1],
            tau: vec![0.1, 0.5, 1.0, 2.0, 5.0],
            delta: 0.02,
            folds: 5,
            seed: 0,
            subsample: None,
            tol: 1e-3,
            max_passes: 1000,
            workers: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub config: TrainConfig,
    /// Mean over folds of MSE (SVR) or pinball loss (SVQR).
    pub score: f64,
}

fn cells(kind: ModelKind, grid: &GridSpec) -> Vec<TrainConfig> {
    let eps: Vec<f64> = match kind {
        ModelKind::Svr => grid.epsilon.clone(),
        ModelKind::Svqr => vec![0.0],
    };
    let mut out = Vec::new();
    for &c in &grid.c {
        for &epsilon in &eps {
            for &tau in &grid.tau {
                out.push(TrainConfig {
                    c,
                    epsilon,
                    delta: (kind == ModelKind::Svqr).then_some(grid.delta),
                    kernel: KernelSpec::Rbf { tau },
                    tol: grid.tol,
                    max_passes: grid.max_passes,
                });
            }
        }
    }
    out
}

fn cv_score(kind: ModelKind, x: &[Vec<f64>], y: &[f64], folds: &[usize], k: usize, cfg: &TrainConfig) -> Result<f64> {
    let mut total = 0.0;
    for fold in 0..k {
        let (mut xt, mut yt, mut xv, mut yv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, &f) in folds.iter().enumerate() {
            if f == fold {
                xv.push(x[i].clone());
                yv.push(y[i]);
            } else {
                xt.push(x[i].clone());
                yt.push(y[i]);
            }
        }
        let model = train(kind, &xt, &yt, cfg)?;
        let pred = model.predict_batch(&xv)?;
        total += match kind {
            ModelKind::Svr => yv.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / yv.len() as f64,
            ModelKind::Svqr => pinball_loss(&yv, &pred, cfg.delta.unwrap_or(0.5)),
        };
    }
    Ok(total / k as f64)
}

/// Exhaustive k-fold cross-validation over the RBF grid. Ties go to smaller C, then larger ε.
pub fn grid_search(kind: ModelKind, x: &[Vec<f64>], y: &[f64], grid: &GridSpec) -> Result<(TrainConfig, Vec<CvRow>)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} rows vs {} labels", x.len(), y.len())));
    }
    let configs = cells(kind, grid);
    if configs.is_empty() {
        return Err(Error::InvalidInput("empty hyperparameter grid".into()));
    }
    let mut rng = rng_from_seed(grid.seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut rng);
    if let Some(cap) = grid.subsample {
        order.truncate(cap);
    }
    if grid.folds < 2 || grid.folds > order.len() {
        return Err(Error::InvalidInput(format!(
            "need 2 <= folds <= samples, got {} folds for {} samples",
            grid.folds,
            order.len()
        )));
    }
    let xs: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let folds: Vec<usize> = (0..xs.len()).map(|i| i % grid.folds).collect();

    let workers = grid.workers.clamp(1, configs.len());
    let scores: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (configs, xs, ys, folds) = (&configs, &xs, &ys, &folds);
                scope.spawn(move || {
                    configs
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| i % workers == w)
                        .map(|(i, cfg)| (i, cv_score(kind, xs, ys, folds, grid.folds, cfg)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<(usize, Result<f64>)> = handles
            .into_iter()
            .flat_map(|h| h.join().expect("grid worker panicked"))
            .collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, s)| s).collect()
    });

    let mut table = Vec::with_capacity(configs.len());
    for (config, score) in configs.into_iter().zip(scores) {
        table.push(CvRow { config, score: score? });
    }
    let best = table
        .iter()
        .min_by(|a, b| {
            let tie = (a.score - b.score).abs() <= 1e-12 * a.score.abs().max(b.score.abs());
            if tie {
                a.config
                    .c
                    .total_cmp(&b.config.c)
                    .then(b.config.epsilon.total_cmp(&a.config.epsilon))
            } else {
                a.score.total_cmp(&b.score)
            }
        })
        .expect("nonempty table")
        .config;
    Ok((best, table))
}
