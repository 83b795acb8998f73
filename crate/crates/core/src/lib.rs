//! Stochastic Bihari-LaSalle bounds, path-dependent Euler schemes with Lévy
//! noise, and Monte Carlo verification of the resulting moment inequalities.

// Negated comparisons are how NaN inputs get rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod ext;
pub mod gtransform;
pub mod levy;
pub mod montecarlo;
pub mod nonlinearity;
pub mod path;
pub mod quadrature;
pub mod rng;
pub mod sde;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use gtransform::GTransform;
pub use nonlinearity::{EtaKind, EtaSpec};
pub use path::CadlagPath;
