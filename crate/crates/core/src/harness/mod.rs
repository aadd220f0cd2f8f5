//! Experiment harness: configs, seeded sweeps, summaries and predictions.

pub mod config;
pub mod predict;
pub mod summary;
pub mod sweep;

pub use config::{BackendSpec, CostSpec, SweepConfig, SweepMode};
pub use predict::{predict, Prediction, PredictionRow};
pub use summary::{mean_std, summarize, Summary, SummaryRow};
pub use sweep::{evaluate_trial, execute_sweep, run_sweep, SweepOptions, SweepResult, SweepRow, TrialOutcome};

use std::path::{Path, PathBuf};

/// `<stem>_summary.csv` next to a sweep CSV.
pub fn summary_path(sweep_csv: &Path) -> PathBuf {
    let stem = sweep_csv.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    sweep_csv.with_file_name(format!("{stem}_summary.csv"))
}
