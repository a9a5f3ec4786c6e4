//! Experiment harness: declarative sweep configs, CSV tables, SVG figures,
//! and dataset conversion.

pub mod aggregate;
pub mod config;
pub mod convert;
pub mod error;
pub mod plot;
pub mod run;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind, Scaling};
pub use error::{HarnessError, Result};
pub use run::{run, RunOutput};
