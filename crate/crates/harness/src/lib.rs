//! Experiment runner for watermark robustness studies.
//!
//! An [`ExperimentConfig`] names datasets, codecs and attacks. A robustness
//! grid reads every codec under every attack with all images marked; a
//! mixing study marks only `⌈p·n⌉` images per dataset and reports
//! accuracy on the marked subset, the unmarked subset and overall.

pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiment::{run_mixing_experiment, run_robustness_grid};
pub use report::{emit_report, ExperimentReport, Format};
