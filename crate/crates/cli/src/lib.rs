//! Command-line front end for `crn-core`: sample generation, NB fitting,
//! metrics and the benchmark experiments.

pub mod commands;
pub mod error;
pub mod experiments;
pub mod settings;
pub mod table;

pub use commands::ExperimentKind;
pub use error::{CliError, CliResult};
pub use settings::Settings;
pub use table::TidyTable;
