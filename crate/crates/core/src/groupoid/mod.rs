//! Action groupoids `G x| B` over a ball with a fixed point, their arrows,
//! maps into the group, and samplers of composable pairs.

mod action;
mod map;
mod sampler;

pub use action::{
    ActionGroupoid, ActionSpec, AxiomReport, LinearRep, Twist, COMPOSE_TOLERANCE,
    ORBIT_CONTAINMENT_FACTOR,
};
pub use map::{
    base_monomials, feature_count, group_features, identity_restriction_check, monomial_count,
    BandLimitedField, GroupoidMap, PerturbedMap, ProjectionMap, RestrictionReport, MAX_BASE_DEGREE,
};
pub use sampler::{lattice_in_ball, ComposablePairSampler, SamplingStrategy};

pub(crate) use action::{dist as point_dist, norm as point_norm};

use alloc::string::String;
use smallvec::SmallVec;

use crate::lie::{GroupElement, LieError};

/// A point of the base.
pub type Point = SmallVec<[f64; 4]>;

/// The arrow `(g, x)` from `x` to `g . x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    pub g: GroupElement,
    pub x: Point,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroupoidError {
    #[error("arrows are not composable: |s(p) - t(q)| = {gap:e}")]
    NotComposable { gap: f64 },
    #[error("action is not invertible on the sampled domain: {0}")]
    ActionNotInvertible(String),
    #[error("invalid groupoid specification: {0}")]
    InvalidSpec(String),
    #[error("value left the logarithm chart (distance {distance:e} from the cut locus)")]
    OutOfChart { distance: f64 },
    #[error(transparent)]
    Lie(#[from] LieError),
}
