//! Sweeps, scaling studies, peak detection and plotting.

pub mod checks;
pub mod config;
pub mod peak;
pub mod scaling;
pub mod stats;
pub mod svg;
pub mod sweep;

pub use checks::{encoding_checks, ff_encoding_checks, EncodingCheck};
pub use config::{ExperimentConfig, Grid, Mode, Outputs, ScalingKind, ScalingSpec};
pub use peak::{detect_peak, Peak};
pub use scaling::{run_scaling_study, ScalingResult, ScalingRow};
pub use sweep::{rows_from_csv, rows_to_csv, prepare_point, run_sweep, sweep_rows, SweepOutcome, SweepRow};
