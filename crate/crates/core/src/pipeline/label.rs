use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::dataset::{read_dataset, write_dataset, LabeledRecord};
use super::sibling;
use crate::error::{Error, Result};
use crate::measures::{
    c_geometric, c_l1, c_rel_ent, cg_pure_oracle, eg_isotropic_analytic, eg_lower, eg_pure_oracle,
    eg_werner_analytic, LabelMethod, Measure,
};
use crate::sdp::{default_bipartitions, DEFAULT_TOL};
use crate::states::{Family, StateRecipe};

/// Tolerance reported for labels computed in closed form.
const ANALYTIC_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelOptions {
    pub measure: Measure,
    pub tol: f64,
    pub workers: usize,
    /// Use closed forms (pure-state oracles, Werner/isotropic formulas) instead of the SDP when available.
    pub closed_forms: bool,
}

impl LabelOptions {
    pub fn new(measure: Measure) -> Self {
        Self {
            measure,
            tol: DEFAULT_TOL,
            workers: 1,
            closed_forms: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub total: usize,
    pub labeled: usize,
    pub failed: usize,
    /// Records taken from an earlier interrupted run.
    pub resumed: usize,
    /// `(id, error)` for each failed record.
    pub failures: Vec<(String, String)>,
}

/// Closed-form value for recipes whose family has one, ignoring local-unitary wrappers
/// where the measure is invariant under them.
fn closed_form(recipe: &StateRecipe, measure: Measure) -> Result<Option<(f64, LabelMethod)>> {
    match (measure, recipe.family) {
        (Measure::GeomCoherence, Family::HaarPure) => {
            let psi = recipe.build_pure()?.expect("pure family");
            Ok(Some((cg_pure_oracle(&psi), LabelMethod::PureOracle)))
        }
        (Measure::GeomEntanglement, Family::HaarPure) if recipe.dims.len() == 2 => {
            let psi = recipe.build_pure()?.expect("pure family");
            Ok(Some((eg_pure_oracle(&psi)?, LabelMethod::PureOracle)))
        }
        (Measure::GeomEntanglement, Family::Werner) => {
            let f = recipe.params["f"];
            // f ≥ 0 Werner states are separable
            let v = if f >= 0.0 { 0.0 } else { eg_werner_analytic(f)? };
            Ok(Some((v, LabelMethod::Analytic)))
        }
        (Measure::GeomEntanglement, Family::Isotropic) => {
            let d = recipe.dims[0];
            let fid = recipe.params["F"];
            let v = if fid <= 1.0 / d as f64 {
                0.0
            } else {
                eg_isotropic_analytic(d, fid)?
            };
            Ok(Some((v, LabelMethod::Analytic)))
        }
        (Measure::GeomEntanglement, Family::LocalUnitaryOrbit) => match &recipe.base {
            Some(base) => closed_form(base, measure),
            None => Ok(None),
        },
        _ => Ok(None),
    }
}

fn compute(recipe: &StateRecipe, opts: &LabelOptions) -> Result<(f64, LabelMethod, f64)> {
    if opts.closed_forms {
        if let Some((v, method)) = closed_form(recipe, opts.measure)? {
            return Ok((v, method, ANALYTIC_TOL));
        }
    }
    let rho = recipe.build()?;
    Ok(match opts.measure {
        Measure::L1Coherence => (c_l1(&rho), LabelMethod::Analytic, ANALYTIC_TOL),
        Measure::RelEntCoherence => (c_rel_ent(&rho), LabelMethod::Analytic, ANALYTIC_TOL),
        Measure::GeomCoherence => (c_geometric(&rho, opts.tol)?, LabelMethod::Sdp, opts.tol),
        Measure::GeomEntanglement => {
            let cuts = default_bipartitions(rho.dims().len());
            (eg_lower(&rho, &cuts, opts.tol)?, LabelMethod::Sdp, opts.tol)
        }
    })
}

/// Attaches a label to `record`; failures are stored in the record's `error` field.
pub fn label_record(record: &LabeledRecord, opts: &LabelOptions) -> LabeledRecord {
    let mut out = record.clone();
    out.measure = Some(opts.measure);
    match compute(&record.recipe, opts) {
        Ok((value, method, tol)) => {
            out.label = Some(value);
            out.method = Some(method);
            out.tolerance = Some(tol);
            out.error = None;
        }
        Err(e) => {
            out.label = None;
            out.method = None;
            out.tolerance = None;
            out.error = Some(e.to_string());
        }
    }
    out
}

fn check_measure(records: &[LabeledRecord], measure: Measure) -> Result<()> {
    if measure == Measure::GeomEntanglement {
        if let Some(r) = records.iter().find(|r| r.recipe.dims.len() < 2) {
            return Err(Error::WrongSystem {
                what: "entanglement labeling",
                dims: r.recipe.dims.clone(),
            });
        }
    }
    Ok(())
}

/// Labels records on `opts.workers` threads, handing each result to `sink` on the calling
/// thread in completion order.
fn label_streaming<F>(records: &[LabeledRecord], opts: &LabelOptions, mut sink: F) -> Result<()>
where
    F: FnMut(usize, LabeledRecord) -> Result<()>,
{
    let workers = opts.workers.clamp(1, records.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= records.len() {
                    break;
                }
                if tx.send((i, label_record(&records[i], opts))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, rec) in rx {
            if let Err(e) = sink(i, rec) {
                // stop handing out work; workers exit once the receiver is gone
                next.store(records.len(), Ordering::Relaxed);
                return Err(e);
            }
        }
        Ok(())
    })
}

fn summarize(records: &[LabeledRecord], resumed: usize) -> LabelSummary {
    let failures: Vec<(String, String)> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| (r.id.clone(), e.clone())))
        .collect();
    LabelSummary {
        total: records.len(),
        labeled: records.len() - failures.len(),
        failed: failures.len(),
        resumed,
        failures,
    }
}

/// Labels every record in memory; output keeps input order.
pub fn label_records(records: &[LabeledRecord], opts: &LabelOptions) -> Result<(Vec<LabeledRecord>, LabelSummary)> {
    check_measure(records, opts.measure)?;
    let mut out: Vec<Option<LabeledRecord>> = vec![None; records.len()];
    label_streaming(records, opts, |i, rec| {
        out[i] = Some(rec);
        Ok(())
    })?;
    let out: Vec<LabeledRecord> = out.into_iter().map(|r| r.expect("every record labeled")).collect();
    let summary = summarize(&out, 0);
    Ok((out, summary))
}

fn read_partial(path: &Path) -> Result<HashMap<String, LabeledRecord>> {
    let mut done = HashMap::new();
    let Ok(f) = fs::File::open(path) else {
        return Ok(done);
    };
    for line in BufReader::new(f).lines() {
        let line = line?;
        // a torn final line from an interrupted write is simply redone
        if let Ok(rec) = serde_json::from_str::<LabeledRecord>(&line) {
            done.insert(rec.id.clone(), rec);
        }
    }
    Ok(done)
}

/// Labels a dataset file into `output`, checkpointing each record to `<output>.partial` so an
/// interrupted run resumes where it stopped.
pub fn label_file(input: &Path, output: &Path, opts: &LabelOptions) -> Result<LabelSummary> {
    let records = read_dataset(input)?;
    check_measure(&records, opts.measure)?;
    let partial = sibling(output, ".partial");
    let mut done = read_partial(&partial)?;
    done.retain(|id, rec| rec.measure == Some(opts.measure) && records.iter().any(|r| &r.id == id));
    let resumed = done.len();
    let pending: Vec<LabeledRecord> = records.iter().filter(|r| !done.contains_key(&r.id)).cloned().collect();

    if let Some(dir) = partial.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut log = OpenOptions::new().create(true).append(true).open(&partial)?;
    // start on a fresh line in case the previous run died mid-record
    log.write_all(b"\n")?;
    label_streaming(&pending, opts, |_, rec| {
        let mut line = serde_json::to_string(&rec)?;
        line.push('\n');
        log.write_all(line.as_bytes())?;
        log.flush()?;
        done.insert(rec.id.clone(), rec);
        Ok(())
    })?;
    drop(log);

    let mut labeled: Vec<LabeledRecord> = records
        .iter()
        .map(|r| {
            let mut rec = done.remove(&r.id).expect("every record labeled");
            rec.split = r.split;
            rec
        })
        .collect();
    labeled.sort_by(|a, b| a.id.cmp(&b.id));
    write_dataset(output, &labeled)?;
    fs::remove_file(&partial)?;
    Ok(summarize(&labeled, resumed))
}
