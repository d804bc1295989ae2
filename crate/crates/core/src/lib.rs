//! Robust marginal Bayesian variable selection for gene-environment
//! interaction scans.
//!
//! The library fits one small hierarchical model per genetic variant:
//! the response on the environment and clinical covariates, the
//! variant's main effect, and its interactions with each environment
//! factor. Four Gibbs samplers are provided — a robust LAD Bayesian
//! lasso with spike-and-slab priors (LADBLSS), its non-sparse variant
//! (LADBL), and Gaussian-likelihood counterparts (BLSS, BL) — plus a
//! simulation engine, identification metrics (inclusion probabilities,
//! AUC, top-k), Gelman-Rubin convergence diagnostics, and a parallel
//! whole-panel scan with deterministic per-gene random streams.

pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod scan;
pub mod simulate;

pub use error::{Error, Result};
