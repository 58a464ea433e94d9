//! Library side of the `gausslab` command-line tool: configuration parsing,
//! the subcommands, and the report types they emit.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{cmd_analyze, cmd_convergence, cmd_estimates, cmd_gen, parse_levels};
pub use config::{AnalysisConfig, RawConfig};
pub use report::{ConvergenceTable, RunReport, SCHEMA_VERSION};
