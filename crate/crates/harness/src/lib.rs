//! Data loading, synthetic generation, experiment drivers and the command
//! layer behind the `igm` binary.

pub mod commands;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod synth;

pub use error::{HarnessError, Result};
