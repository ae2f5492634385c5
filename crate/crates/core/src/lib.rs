#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod affine;
pub mod averager;
pub mod groupoid;
pub mod lie;
pub mod linalg;
pub mod momentum;
pub mod planar;
pub mod quadrature;
pub mod rng;
