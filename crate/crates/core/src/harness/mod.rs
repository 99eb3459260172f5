//! Experiment harness: configuration files, verification suites and the
//! `solve`, `norm` and `report` commands.

pub mod config;
pub mod expr;
pub mod norm;
pub mod report;
pub mod solve;
pub mod verify;

pub use config::{Experiment, ExperimentConfig};
pub use expr::Expr;
pub use norm::{cmd_norm, field_norm, norm_table, NormReport};
pub use report::{cmd_report, report_table, Report};
pub use solve::{cmd_solve, summary_table, Mode, SolveOptions, SolveRun, Summary};
pub use verify::{run_suite, Suite, VerificationReport, VerifyOptions};
