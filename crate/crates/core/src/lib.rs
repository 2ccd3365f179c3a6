//! Numerical laboratory for the singular Lane-Emden-Fowler equation
//!
//! ```text
//!     -Δu = f(X) u^(-γ)   in Ω,     u = φ on ∂Ω,
//! ```
//!
//! on planar Lipschitz graph domains, sectors and axisymmetric cones.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] domain shapes (graph domains, cylinders, sectors, the bumpy curve)
//! * [`spectral`] first Dirichlet eigenpairs of spherical domains and criticality
//! * [`mesh`] finite-difference meshes, Laplacians and sparse linear solvers
//! * [`ode_lab`] one-dimensional oracles (flat, annulus and angular profiles)
//! * [`slef`] the regularised Newton continuation solver and its invariants
//! * [`analysis`] growth fits, recursions, ratio probes and the counterexample run

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod ode_lab;
pub mod slef;
pub mod spectral;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];
