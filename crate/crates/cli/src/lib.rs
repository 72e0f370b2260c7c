//! Experiment harness around `vmlab-core`: configuration parsing, parallel
//! sweeps, CSV outputs with a manifest, and empirical rate reports.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod harness;
pub mod output;
pub mod rates;

pub use config::{parse_config, parse_str, ConfigError, ExperimentConfig};
pub use harness::{run_figure, run_figure_in, run_integrate_in, FigureId, HarnessError, RunManifest};
pub use rates::{report_rates, RatesReport};
