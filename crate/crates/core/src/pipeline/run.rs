use serde::{Deserialize, Serialize};

use super::dataset::{LabeledRecord, Split};
use super::sha256_hex;
use crate::error::{Error, Result};
use crate::features::{perturb_features, FeatureSchema, FeatureVector, SchemaKind};
use crate::measures::Measure;
use crate::svm::{evaluate, grid_search, train, CvRow, EvalReport, GridSpec, ModelKind, SvrModel, TrainConfig};

/// Labeled records in `split` (all splits when `None`); failed records are skipped.
pub fn select_split(records: &[LabeledRecord], split: Option<Split>) -> Vec<&LabeledRecord> {
    records
        .iter()
        .filter(|r| r.label.is_some() && split.is_none_or(|s| r.split == s))
        .collect()
}

/// Feature rows and labels for records sharing one schema and one measure.
pub fn training_matrix(records: &[&LabeledRecord]) -> Result<(Vec<Vec<f64>>, Vec<f64>, String, Measure)> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidInput("no labeled records".into()))?;
    let schema = first.schema.clone();
    let measure = first
        .measure
        .ok_or_else(|| Error::InvalidInput(format!("record {} has no measure", first.id)))?;
    let mut x = Vec::with_capacity(records.len());
    let mut y = Vec::with_capacity(records.len());
    for r in records {
        if r.schema != schema {
            return Err(Error::SchemaMismatch {
                expected: schema,
                got: r.schema.clone(),
            });
        }
        if r.measure != Some(measure) {
            return Err(Error::InvalidInput(format!(
                "mixed measures in one dataset: {measure} and {:?}",
                r.measure
            )));
        }
        let label = r
            .label
            .ok_or_else(|| Error::InvalidInput(format!("record {} is unlabeled", r.id)))?;
        x.push(r.features.clone());
        y.push(label);
    }
    Ok((x, y, schema, measure))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: SvrModel,
    pub best: TrainConfig,
    pub cv: Vec<CvRow>,
    pub n_train: usize,
}

/// Grid search on the training split, then a final fit with the winning cell.
pub fn train_on_records(records: &[LabeledRecord], kind: ModelKind, grid: &GridSpec) -> Result<TrainOutcome> {
    let train_set = select_split(records, Some(Split::Train));
    let (x, y, schema, _) = training_matrix(&train_set)?;
    let (best, cv) = grid_search(kind, &x, &y, grid)?;
    let mut model = train(kind, &x, &y, &best)?;
    model.ensure_converged()?;
    model.schema = Some(schema);
    Ok(TrainOutcome {
        model,
        best,
        cv,
        n_train: x.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    #[serde(rename = "true")]
    pub truth: f64,
    pub predicted: f64,
    pub residual: f64,
}

fn schema_of(record: &LabeledRecord) -> Result<FeatureSchema> {
    let kind = if record.schema.starts_with("coherence-z/") {
        SchemaKind::CoherenceZPatterns
    } else {
        SchemaKind::EntanglementDiagMoments
    };
    let schema = FeatureSchema::for_system(kind, &record.recipe.dims)?;
    if schema.id() != record.schema {
        return Err(Error::SchemaMismatch {
            expected: schema.id(),
            got: record.schema.clone(),
        });
    }
    Ok(schema)
}

/// Per-record perturbation seed, independent of record order.
fn record_seed(seed: u64, id: &str) -> u64 {
    let h = sha256_hex(format!("{seed}:{id}").as_bytes());
    u64::from_str_radix(&h[..16], 16).expect("hex digest")
}

/// Predicts every record, optionally after perturbing its features by `(level, seed)`.
pub fn evaluate_model(
    model: &SvrModel,
    records: &[&LabeledRecord],
    perturb: Option<(f64, u64)>,
) -> Result<(EvalReport, Vec<PredictionRow>)> {
    if records.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate an empty dataset".into()));
    }
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        if let Some(expected) = &model.schema {
            if expected != &r.schema {
                return Err(Error::SchemaMismatch {
                    expected: expected.clone(),
                    got: r.schema.clone(),
                });
            }
        }
        let truth = r
            .label
            .ok_or_else(|| Error::InvalidInput(format!("record {} is unlabeled", r.id)))?;
        let features = match perturb {
            Some((level, seed)) => {
                let fv = FeatureVector::new(schema_of(r)?, r.features.clone())?;
                perturb_features(&fv, level, record_seed(seed, &r.id))?.values
            }
            None => r.features.clone(),
        };
        let predicted = model.predict(&features)?;
        rows.push(PredictionRow {
            id: r.id.clone(),
            truth,
            predicted,
            residual: truth - predicted,
        });
    }
    let truth: Vec<f64> = rows.iter().map(|r| r.truth).collect();
    let pred: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    Ok((evaluate(&truth, &pred)?, rows))
}
