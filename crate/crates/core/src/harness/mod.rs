//! Experiment runner: config parsing, datasets, batch execution, paired
//! curve comparison and report emission.

pub mod config;
pub mod curves;
pub mod dataset;
pub mod experiment;

pub use config::{ConfigFile, ExperimentSpec, ImageSource, MethodSpec, PriorSource};
pub use curves::{compare_curves, Curve, RatioCurve, CURVE_COLUMNS};
pub use experiment::{run_experiment, write_outputs, ExperimentData, ExperimentReport, SummaryRow};
