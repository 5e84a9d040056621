//! Projection-free constrained optimization and rate-distortion relevance attribution.
//!
//! The crate is organised bottom-up:
//!
//! - [`regions`]: feasible sets (k-sparse, non-negative k-sparse, Birkhoff) and
//!   their exact linear minimization oracles.
//! - [`solvers`]: Frank-Wolfe variants (vanilla, away-step, lazified, lazified
//!   away-step, stochastic with momentum) over any [`regions::FeasibleRegion`].
//! - [`classifier`]: dense feedforward networks, the Gaussian noise model and the
//!   assumed-density-filtering distortion objective with analytic gradients.
//! - [`rde`]: single-rate, multi-rate and ordering attribution pipelines plus the
//!   gradient-magnitude baseline.
//! - [`evaluation`]: the relevance-ordering (pixel-flipping) comparison test.
//! - [`io`]: file formats shared with the command-line tool.

pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod linalg;
pub mod rde;
pub mod regions;
pub mod solvers;
pub mod synthetic;

pub use error::{Error, Result};
