//! Scenario files, experiment runners, report writers and the acceptance
//! suite behind the `glab` command.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod suite;

pub use error::{LabError, Status};
pub use report::{Format, Outcome};
