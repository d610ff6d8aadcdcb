//! Finite-size form factors of the massless XXZ chain and their large-size asymptotics.

pub mod asymptotic;
pub mod bethe;
pub mod ed;
pub mod error;
pub mod finite_ff;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod special;
pub mod thermo;

pub use error::{Error, Result};
