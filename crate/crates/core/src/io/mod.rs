//! Configuration, batch orchestration and result files.

mod batch;
mod config;
mod csv;

pub use batch::{run_batch, BatchSummary, JobOutcome, Manifest};
pub use config::{load_config, parse_config, RunConfig, Sweep, SweepParameter};
pub use csv::{emit_csv, emit_ensemble_csv, read_csv, snapshot_file_name, EnsembleMean};
