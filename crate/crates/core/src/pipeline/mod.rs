//! Run orchestration: config, the per-task loop, sweeps, and reports.

mod config;
mod report;
mod run;

pub use config::{validate_config, ClassOrder, DatasetKind, KPolicy, ReplayMode, RunConfig};
pub use report::{
    write_latents_csv, EvalReport, FlaggedCluster, MeanStd, SweepReport, SweepRow, TaskReport, ThresholdRecord,
};
pub use run::{encode_all, load_dataset, run_pipeline, run_sweep, Pipeline};
