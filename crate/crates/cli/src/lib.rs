//! Command-line surface of `cvtomo`: TOML configuration, CSV tables and the
//! validation suites.

pub mod commands;
pub mod config;
pub mod table;
pub mod validate;

pub use commands::{figure, mse, scrb_table, Figure};
pub use config::ExperimentConfig;
pub use table::Table;
pub use validate::Suite;
