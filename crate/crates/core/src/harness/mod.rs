//! Scenario-driven verification runs.

pub mod catalog;
pub mod checks;
pub mod report;
pub mod runner;
pub mod sampling;
pub mod scenario;

use thiserror::Error;

pub use catalog::{bundled, list_catalog, BUNDLED};
pub use checks::Record;
pub use report::Report;
pub use runner::{run_file, run_str, ExitStatus, RunOptions, RunOutcome};
pub use scenario::{CheckId, Scenario};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HarnessError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("metric {metric}, point {point} (x = {x:?}, y = {y:?}): {message}")]
    Domain { metric: usize, point: usize, x: Vec<f64>, y: Vec<f64>, message: String },
}

impl HarnessError {
    pub fn domain(metric: usize, point: usize, x: &[f64], y: &[f64], message: String) -> Self {
        HarnessError::Domain { metric, point, x: x.to_vec(), y: y.to_vec(), message }
    }
}
