//! Curvature cones and surgery-stable deformations.
//!
//! The crate represents algebraic curvature operators on Λ²ℝⁿ, curvature
//! conditions as signed-margin predicates, rotationally symmetric model
//! geometries with closed-form curvature, and the constructive deformations
//! that preserve cone conditions: tube bending around a submanifold,
//! vertical rescaling of Riemannian submersions, and conformal surgery at a
//! point. Every closed-form curvature path is cross-checked against an
//! independent finite-difference oracle.

pub mod bending;
pub mod conditions;
pub mod conformal;
pub mod curvop;
pub mod error;
pub mod geometry;
pub mod submersion;
mod util;

pub use error::{CurvError, Result};
