// `!(x > 0.0)` is used on purpose so that NaN fails the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod cli;
pub mod coords;
pub mod error;
pub mod integrator;
pub mod intersections;
pub mod model;
pub mod quadrature;
pub mod roots;
pub mod stability;

pub use error::{Error, Result};
pub use model::{Nonlinearity, ProblemConfig};
