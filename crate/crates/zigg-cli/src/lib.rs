//! Library half of the `zigg` binary: experiment configuration, file
//! formats, and the batch runner. Kept as a library so integration tests
//! can drive the exact code paths the binary uses.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod runner;

pub use error::CliError;
