//! Dataset generation, labeling, training and evaluation with on-disk artifacts.

pub mod cli;
mod dataset;
mod label;
mod manifest;
mod report;
mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub use dataset::{
    assign_splits, coherence_components, generate, read_dataset, write_dataset, GenSpec, LabeledRecord, Split, Suite,
    TRAIN_FRACTION,
};
pub use label::{label_file, label_record, label_records, LabelOptions, LabelSummary};
pub use manifest::RunManifest;
pub use report::{render_report, EvalArtifact};
pub use run::{evaluate_model, select_split, train_on_records, training_matrix, PredictionRow, TrainOutcome};

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> crate::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = sibling(path, ".tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> crate::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}
