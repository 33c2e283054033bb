//! Files, experiment configs, the theorem suite runner and the command line
//! on top of `concavereg-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod suite;

pub use error::{AppError, AppResult};
