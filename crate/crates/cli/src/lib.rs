//! Command-line front end: config ingestion, the solve / baseline / sweep /
//! simulate / oracle commands, and CSV/JSON result emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, RunSpec, Subcommand};
pub use config::FileConfig;
pub use error::AppError;
