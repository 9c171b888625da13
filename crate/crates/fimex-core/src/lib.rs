//! Fully-implicit-explicit (FIMEX) polynomial block methods built on Radau IIA
//! collocation nodes.
//!
//! The crate provides:
//!
//! - construction of the block node set (`-1` plus the right-Radau points) and
//!   generic polynomial quadrature weights ([`nodes`]),
//! - propagator and iterator coefficient matrices for the FIMEX-Radau and
//!   FIMEX-Radau* families, together with their general-linear-method
//!   embedding and coefficient export ([`tableaux`]),
//! - a composite time-stepping engine (one propagator application followed by
//!   `kappa` iterator applications per macro step) with Newton and
//!   diagonal-linear implicit solvers ([`integrator`]),
//! - partitioned-Dahlquist amplification matrices and linear stability region
//!   scans ([`stability`]),
//! - the test problems used throughout: partitioned Dahlquist, Van der Pol
//!   with two splittings, and a pseudospectral Korteweg-de Vries
//!   discretization ([`problems`]).

pub mod error;
pub mod fft;
pub mod integrator;
pub mod linalg;
pub mod nodes;
pub mod problems;
pub mod stability;
pub mod tableaux;

pub use error::Error;
pub use linalg::{CMat, Mat, RMat, Scalar};

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
