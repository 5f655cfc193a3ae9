//! Numerics for harmonically weighted Dirichlet spaces `D(μ)` on the unit
//! disc: Poisson integrals and squared-distance potentials of measures on
//! the circle, Dirichlet energies, the arc and point capacity estimator, the
//! arc-family uniqueness criterion, and the explicit measures and Cantor sets
//! used to test them.
//!
//! Integrals over the circle are normalized by `dm = dθ/2π` throughout.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod constructions;
pub mod error;
pub mod geometry;
pub mod holomorphic;
pub mod measures;
pub mod quad;
pub mod summation;
pub mod uniqueness;
pub mod verify;

pub use capacity::{arc_capacity, mass_lower_bound, point_capacity, stolz_bound, CapacityEstimate};
pub use error::{Error, Result};
pub use geometry::{pairwise_disjoint, Arc, CirclePoint};
pub use holomorphic::BoundaryFunction;
pub use measures::{Atom, Density, Measure};
pub use num_complex::Complex64;
pub use quad::{Estimate, Tolerance};
pub use uniqueness::{km_criterion, poincare_probe, Classification, DivergenceReport};
