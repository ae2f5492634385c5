//! The multiplicativity defect of a groupoid map, the averaging operator
//! `phi -> phi-hat`, its iteration to a homomorphism, and extraction of
//! the linearizing action from the limit.
//!
//! Averaging integrates over target fibres `t^-1(x) = {(h, h^-1 x)}` with a
//! Haar rule on the group. [`AveragedMap`] evaluates one step lazily with any
//! rule. [`IteratedMap`] evaluates `phi_n` for any `n` exactly at every arrow
//! when the rule is a finite subgroup, because then the arrows needed by the
//! recursion close up into one orbit table per base point.

mod defect;
mod engine;
mod extract;
mod gkr;
mod iterate;
mod iterated;
mod step;

pub use defect::{
    all_pairs, cocycle, defect, defect_on_pairs, loglog_slope, pair_defect, DefectReport,
};
pub use extract::{
    extract_action, AxiomDeviation, ExtractedAction, ExtractionSettings, OrbitComparison,
};
pub use gkr::{gkr_average, winding_number, GkrOutcome, NodeMap};
pub use iterate::{iterate, ConvergenceReport, ConvergenceStatus, IterationSettings};
pub use iterated::IteratedMap;
pub use step::{average_step, AveragedMap, AveragingForm};

use alloc::boxed::Box;
use alloc::string::String;

use crate::groupoid::GroupoidError;
use crate::lie::LieError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AveragingError {
    #[error("initial defect {defect:e} exceeds the start threshold {limit:e}")]
    DefectTooLarge { defect: f64, limit: f64 },
    #[error("iteration stalled at defect {:e} after {} steps", .0.defects.last().copied().unwrap_or(f64::NAN), .0.iterations)]
    Stalled(Box<ConvergenceReport>),
    #[error("map is not invertible on the sampled domain: {0}")]
    NotInvertible(String),
    #[error("quadrature rule does not fit the map: {0}")]
    RuleMismatch(String),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error(transparent)]
    Lie(#[from] LieError),
}
