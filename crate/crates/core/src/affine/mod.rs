//! Integral affine cell complexes: validation, the developing map, and
//! local and global convexity of its image.
//!
//! Cells are convex polytopes in `R^k` given by vertices; gluings identify a
//! facet of one cell with a facet of another through `x -> A x + b` with
//! `A` integral of determinant `+-1`.

mod complex;
mod convexity;
pub mod corpus;
mod develop;

pub use complex::{AffineComplex, Cell, Gluing, Transition, GEOMETRY_TOLERANCE};
pub use convexity::{
    certify, check_local_convexity, fibonacci_directions, global_convexity, star_propagate,
    Certification, CollisionWitness, ConeWitness, ConvexityMode, ConvexitySettings,
    ConvexityVerdict, ExhaustionLevel, LocalConvexityReport, Rejection, Segment, StarReport,
    StarSettings, COVERAGE_TOLERANCE,
};
pub use develop::{develop, Chart, DevelopingMap, Holonomy};

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AffineError {
    #[error("malformed complex: {0}")]
    MalformedComplex(String),
    #[error("nontrivial holonomy {d:e} around gluing {g}", d = .0.deviation, g = .0.gluing)]
    Monodromy(Holonomy),
    #[error("developing map folds at cell {cell}")]
    NotLocallyInjective { cell: usize, gluing: Option<usize> },
    #[error("segment in direction {direction:?} never leaves the complex")]
    OpenEscape { direction: Vec<f64> },
}
