//! Finite-element beam model updating from measured modal data.
//!
//! Two updating routes share one model and one objective:
//!
//! * Bayesian: random-walk Metropolis sampling of the posterior over the
//!   updating parameters ([`sampler`]), summarized through the posterior
//!   predictive distribution of frequencies and MAC values.
//! * Maximum likelihood: a real-coded genetic algorithm on the likelihood
//!   alone ([`ga`]).
//!
//! The model chain is [`beam`] (assembly) → [`guyan`] (condensation onto the
//! measured translations) → [`modal`] (eigen-solution, MAC, pairing), and
//! [`objective`] turns the modal residual into log-likelihood and log-prior.

pub mod beam;
pub mod config;
pub mod data;
pub mod error;
pub mod ga;
pub mod guyan;
pub mod modal;
pub mod objective;
pub mod predict;
pub mod report;
pub mod sampler;
pub mod workflow;

pub use beam::{assemble, element_matrices, BeamGeometry, ElementMatrices, FullSystem, UpdatingParameters};
pub use config::{load_config, RunConfig};
pub use error::{Error, Result};
pub use ga::{ga_optimize, GaConfig, GaResult};
pub use guyan::{expand, reduce, ReducedSystem};
pub use modal::{mac, mac_table, pair_modes, solve_modes, MacTable, ModalSet, Normalization};
pub use objective::{
    error_matrix, log_likelihood, log_posterior, log_prior, residual_matrix, BeamPosterior, LogDensity,
    LogPosteriorValue, MeasuredModalData, PriorSpec, ResidualForm,
};
pub use predict::{predict, SamplePrediction};
pub use sampler::{accept, posterior_predictive, propose, run_chain, Chain, ChainConfig, PredictiveStats};
