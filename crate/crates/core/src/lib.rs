//! Numerical laboratory for the constructive side of non-asymptotic random
//! matrix theory.
//!
//! The crate is split by subject:
//!
//! * [`ensembles`]: seedable scalar and matrix distributions, Haar samplers,
//!   subgaussian moment constants.
//! * [`spectra`]: singular values, distances to spans, random normals.
//! * [`nets`]: ε-nets on spheres, volumetric bounds, lattice level-set nets.
//! * [`concentration`]: Lévy concentration functions, exact and estimated.
//! * [`structure`]: exact and essential LCD, compressibility, spread sets.
//! * [`geometry`]: exact ℓ1 minimisation on the sphere, octahedron sections,
//!   short Khinchin constants.
//! * [`perturbation`]: tails of `s_n(D + U)` under Haar `U`.
//! * [`harness`]: config files, experiment dispatch, statistics and CSV.
//!
//! Every Monte Carlo loop is data-parallel through [`par`]; with the
//! `parallel` feature disabled the same code runs sequentially and produces
//! bit-identical output.

pub mod concentration;
pub mod ensembles;
mod error;
pub mod geometry;
pub mod harness;
pub mod nets;
pub mod par;
pub mod perturbation;
pub mod spectra;
pub mod stats;
pub mod structure;

pub use error::{Error, Result};

/// Dense real matrix.
pub type RealMatrix = nalgebra::DMatrix<f64>;
/// Dense complex matrix.
pub type ComplexMatrix = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense real column vector.
pub type RealVector = nalgebra::DVector<f64>;
