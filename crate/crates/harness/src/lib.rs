//! Monte Carlo evaluation of tests and intervals: replicated data sets,
//! several methods per replication, coverage/length or rejection-rate
//! summaries written as CSV and JSON.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod seeds;

pub use config::{DesignSpec, ExperimentConfig, ExperimentKind, Method, ModelConfig, SideConfig};
pub use error::{HarnessError, Result};
pub use report::{rate_se, ReportRow, SimReport, SkippedReplication};
pub use run::{run_ci_experiment, run_experiment, run_test_experiment, try_design, Draw};
pub use seeds::SeedPlan;
