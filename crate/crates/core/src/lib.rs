//! Precision-matrix estimation under banded Gaussian graphical models.
//!
//! The crate provides the graphical maximum-likelihood estimator, Bayes
//! estimators under a G-Wishart prior, a reference-prior estimator and a
//! banded modified-Cholesky comparator, together with exact marginal
//! likelihoods for bandwidth selection, a posterior sampler, the simulation
//! models used for benchmarking and a replication harness.

pub mod band;
pub mod error;
pub mod estimators;
pub mod gwishart;
pub mod harness;
pub mod matrix;
pub mod scenarios;

pub use band::BandModel;
pub use error::{Error, Result};
pub use estimators::{EstimatorKind, PriorSpec, SampleStats};
pub use gwishart::{BandPosterior, PriorOverK};
pub use matrix::{Cholesky, IndexSet, NormKind, SymMatrix};
pub use scenarios::{Observations, Scenario, ScenarioKind};
