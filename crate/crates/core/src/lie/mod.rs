//! Compact matrix Lie groups: elements, Lie algebra vectors, exponential and
//! logarithm, the scaled Ad-invariant metric, and Haar quadrature rules.
//!
//! The metric on every group is `kappa * |X|_F` on the Lie algebra (the
//! Euclidean norm of the angle-rate vector for tori). With the default
//! `kappa = 1/pi` the injectivity radius of `exp` is at least one on every
//! supported factor, so "inside the unit ball" is a literal number.

mod group;
mod haar;
pub mod quaternion;

pub use group::{AlgebraVector, CompactGroup, GroupElement, GroupKind, DEFAULT_METRIC_SCALE};
pub use haar::{
    haar_nodes, monte_carlo_rule, subgroup_rule, HaarQuadrature, SubgroupSpec, SubgroupTable,
};

use alloc::string::String;

/// Distance returned when `g^-1 h` has no logarithm in the chart.
pub const SATURATED_DISTANCE: f64 = 2.0;

/// Eigenvalues closer than this to the branch point `-1` are refused by `log`.
pub const CUT_LOCUS_TOLERANCE: f64 = 1e-6;

/// Tolerance for the element and algebra invariants.
pub const INVARIANT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("malformed algebra vector: {0}")]
    MalformedAlgebraVector(String),
    #[error("malformed group element: {0}")]
    MalformedGroupElement(String),
    #[error("element is on the cut locus: an eigenvalue is {distance:e} from -1")]
    CutLocus { distance: f64 },
    #[error("principal logarithm leaves the Lie algebra (trace {trace:e})")]
    LogBranch { trace: f64 },
    #[error("unsupported group for this operation: {0}")]
    UnsupportedGroup(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
