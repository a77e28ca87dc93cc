//! Experiment runner for the `paradiag` solvers.
//!
//! Each experiment reads an [`ExperimentConfig`], runs at desk scale, and
//! returns an [`ExperimentOutput`]: a [`ResultTable`] (written as CSV), an
//! optional per-iteration history, scalar metrics and an SVG chart.
//!
//! ```
//! use paradiag_harness::{run_experiment, Experiment, ExperimentConfig};
//!
//! let cfg = ExperimentConfig::resolve(Experiment::CondStudy, None, &["nts=8, 16, 32".to_string()]).unwrap();
//! let out = run_experiment(&cfg).unwrap();
//! assert_eq!(out.table.len(), 3);
//! assert!(out.metric("cond_slope").is_some());
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod table;

pub use config::{Experiment, ExperimentConfig, WaveScheme};
pub use error::{ConfigError, HarnessError};
pub use experiments::{loglog_slope, run_and_write, run_experiment, scaling_bench, ExperimentOutput};
pub use table::{ResultTable, Value};
