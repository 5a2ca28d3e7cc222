//! Batch driver for the transmission solver: configuration files with an
//! expression language for coefficients and data, campaigns, and text
//! artifacts.

pub mod campaign;
pub mod config;
pub mod expr;
pub mod output;
pub mod problem;

pub use campaign::{run_campaign, CliError, Outcome};
pub use config::{parse_config, validate, Campaign, ConfigError, RawConfig, RunConfig};
pub use expr::{EvalError, Expr, ParseError};
