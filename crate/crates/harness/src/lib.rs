//! Experiment harness for the cooperative random-beamforming simulator:
//! configuration, multi-threaded sweeps, CSV output and run manifests.

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
mod error;
pub mod exec;
pub mod experiments;
pub mod output;

pub use config::{Experiment, ExperimentConfig, Settings};
pub use error::HarnessError;
pub use exec::Threaded;
pub use experiments::{run, run_alpha_sweep, run_corr_sweep, run_single_point, run_snr_sweep};
pub use output::{Report, RunManifest};
