//! Momentum-map experiments: action integrals of planar Hamiltonians,
//! cylinder integrals of the symplectic form, sampled momentum images of
//! torus actions, projection to Weyl chambers, symplectic spectra of
//! quadratic Hamiltonians, and the sum set of frequency tuples.

mod action;
mod cylinder;
mod image;
mod phi;
mod weyl;
mod williamson;

pub use action::{
    action_integral, ActionIntegralProblem, ActionSettings, ActionValue, FnHamiltonian, Oscillator,
    PlanarHamiltonian, QuarticWell,
};
pub use cylinder::{
    cylinder_period, CotangentTorus, CylinderFamily, CylinderIntegral, CylinderSettings, OrbitPath,
    SymplecticModel,
};
pub use image::{
    momentum_image, ComplexProjectiveSpace, MomentumImage, ProductSystem, Sphere,
    ToricHamiltonianSystem,
};
pub use phi::{phi_set, PhiSetReport, PhiSettings, SliceGap};
pub use weyl::{pfaffian, weyl_project, CoadjointElement};
pub use williamson::{
    random_symplectic, symplectic_form, symplectic_spectrum, FrequencyTuple, QuadraticHamiltonian,
};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MomentumError {
    #[error("level {energy} did not close within arc length {arc_length}")]
    LevelNotClosed { energy: f64, arc_length: f64 },
    #[error("energy {energy} is outside the problem's range")]
    EnergyOutOfRange { energy: f64 },
    #[error("cylinder surface could not be meshed: {0}")]
    SurfaceMeshFailure(String),
    #[error("wrong shape: {0}")]
    WrongShape(String),
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("invalid frequency tuple: {0}")]
    InvalidTuple(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
