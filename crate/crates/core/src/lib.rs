//! Numerical laboratory for the p-Euler and p-Navier-Stokes systems in two
//! dimensions: discrete calculus, the p-momentum algebra, a p-Laplacian
//! elliptic solver, transport, time steppers, exact solutions and
//! conservation diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod exactsol;
pub mod fields;
pub mod interp;
pub mod par;
pub mod plaplacian;
pub mod pmomentum;
pub mod presets;
pub mod quadrature;
pub mod spectral;
pub mod steppers;
pub mod transport;

pub use error::{Error, Result};

/// Version of this crate.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use fields::{Boundary, Grid2D, ScalarField, TensorField2, VectorField2};
pub use pmomentum::PExponent;
