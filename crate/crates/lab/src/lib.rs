//! Standard-library side of the HBT laboratory: event files, run
//! configuration, the parallel simulate/correlate pipeline, report tables and
//! the `hbt` command line. The numerics live in [`hbt_core`].

pub mod cli;
pub mod config;
pub mod demo;
pub mod error;
pub mod events;
pub mod oracle;
pub mod pipeline;
pub mod report;

pub use config::RunConfig;
pub use error::{LabError, Result};
