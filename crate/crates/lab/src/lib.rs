//! Scenario runner around `bdlab-core`: a rayon executor, flat config files,
//! CSV/JSON writers and one function per subcommand.

pub mod cli;
pub mod commands;
pub mod config;
pub mod exec;
pub mod output;

pub use commands::{run, Command, Failure, Outcome};
pub use config::{ScenarioConfig, Settings};
pub use exec::Parallel;
