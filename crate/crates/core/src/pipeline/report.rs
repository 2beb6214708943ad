use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::svm::{EvalReport, ModelKind};

pub const REPORT_SUFFIX: &str = ".report.json";

/// What `eval` and `perturb-eval` leave behind for the report stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub model_kind: ModelKind,
    pub schema: String,
    pub measure: Measure,
    /// File name of the evaluated dataset.
    pub dataset: String,
    pub split: Option<String>,
    /// Relative feature perturbation level, absent for clean evaluation.
    pub perturbation: Option<f64>,
    pub metrics: EvalReport,
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(&path, out)?;
        } else if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(REPORT_SUFFIX)) {
            out.push(path);
        }
    }
    Ok(())
}

fn fmt_opt_pct(v: Option<f64>) -> String {
    v.map(|m| format!("{:.2}%", 100.0 * m)).unwrap_or_else(|| "n/a".into())
}

fn kind_name(k: ModelKind) -> &'static str {
    match k {
        ModelKind::Svr => "SVR",
        ModelKind::Svqr => "SVQR",
    }
}

/// Markdown and CSV summaries of every `*.report.json` under `run_dir`.
pub fn render_report(run_dir: &Path) -> Result<(String, String)> {
    let mut paths = Vec::new();
    if run_dir.is_dir() {
        collect(run_dir, &mut paths)?;
    }
    if paths.is_empty() {
        return Err(Error::MissingArtifacts(vec![format!(
            "{}/*{REPORT_SUFFIX}",
            run_dir.display()
        )]));
    }
    let mut rows: Vec<EvalArtifact> = paths
        .iter()
        .map(|p| Ok(serde_json::from_str(&fs::read_to_string(p)?)?))
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| {
        (&a.schema, a.measure, kind_name(a.model_kind), &a.dataset)
            .cmp(&(&b.schema, b.measure, kind_name(b.model_kind), &b.dataset))
            .then(a.perturbation.unwrap_or(0.0).total_cmp(&b.perturbation.unwrap_or(0.0)))
    });

    let mut md = String::from("# Evaluation summary\n\n");
    md.push_str("| system | measure | model | dataset | noise | n | MSE | MAPE | R² | P_over |\n");
    md.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    let mut csv = String::from("system,measure,model,dataset,noise,n,mse,mape,r2,p_over\n");
    for r in &rows {
        let m = &r.metrics;
        let noise = r.perturbation.unwrap_or(0.0);
        writeln!(
            md,
            "| {} | {} | {} | {} | {:.0}% | {} | {:.3e} | {} | {:.4} | {:.2}% |",
            r.schema,
            r.measure,
            kind_name(r.model_kind),
            r.dataset,
            100.0 * noise,
            m.n,
            m.mse,
            fmt_opt_pct(m.mape),
            m.r2,
            100.0 * m.p_over
        )
        .expect("write to string");
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.schema,
            r.measure,
            kind_name(r.model_kind),
            r.dataset,
            noise,
            m.n,
            m.mse,
            m.mape.map(|v| v.to_string()).unwrap_or_default(),
            m.r2,
            m.p_over
        )
        .expect("write to string");
    }
    Ok((md, csv))
}
