//! Discrete nonlinear Schrödinger and Klein-Gordon flows on periodic
//! truncations of `hℤ^d`, with the spectral machinery and bound diagnostics
//! used to check their `l^p` estimates numerically.

pub mod bounds;
pub mod dkg;
pub mod dnls;
pub mod duhamel;
pub mod error;
pub mod fourier;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod oracle;
pub mod potentials;
pub mod random;
pub mod report;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{inner, lp_norm, Exponent, Field, LatticeField, LatticeSpec, RealField, Scalar};
pub use report::{BoundReport, Param};
