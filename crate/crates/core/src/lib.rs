//! Discrete-velocity laboratory for the ellipsoidal BGK (ES-BGK) relaxation
//! model.
//!
//! The crate samples distributions on a truncated velocity grid, builds the
//! ellipsoidal Gaussian `M_nu(f)`, integrates the relaxation dynamics and
//! evaluates the entropy functionals whose inequalities govern them.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certify;
pub mod cli;
pub mod ensemble;
pub mod entropy;
pub mod error;
pub mod gaussian;
pub mod linearized;
pub mod moments;
pub mod solver;
pub mod vgrid;

pub use error::{Error, Result};
pub use gaussian::{EllipsoidalGaussian, TemperatureTensor, VelocityDensity};
pub use moments::{extract_moments, MacroState, SymMat3};
pub use vgrid::{DistributionFunction, Vec3, VelocityGrid};
