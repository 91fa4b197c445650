//! Linear surrogates for the time-dependent Schrödinger evolution operator.
//!
//! The crate is organised around one idea: the evolution operator is linear,
//! so it can be reconstructed column by column by asking a reference solver
//! how each basis function (a Fourier mode on the torus, a spherical harmonic
//! on the sphere) evolves. The pieces are
//!
//! * [`grid`]: torus grids, fields, Fourier coefficients and Sobolev norms;
//! * [`potentials`]: the potential catalog evaluated on torus grids;
//! * [`solver`]: the Strang split-step pseudospectral reference solver;
//! * [`sphere`]: spherical harmonics, transforms and the solver on S²;
//! * [`estimator`]: probing, fitting, applying and persisting the estimator;
//! * [`bounds`]: evaluators for the error bounds and the adversarial
//!   constructions that saturate them;
//! * [`harness`]: reproducible experiment protocols emitting CSV tables.

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod field;
pub mod grid;
pub mod harness;
pub mod io;
pub mod potentials;
pub mod rng;
pub mod solver;
pub mod sphere;

pub use error::{Error, Result};
pub use field::GridFunction;
pub use num_complex::Complex64 as C64;
