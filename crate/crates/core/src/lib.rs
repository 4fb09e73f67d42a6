//! Failure-informed adaptive collocation for residual-trained neural PDE
//! solvers.
//!
//! The crate trains a small dense tanh network against PDE and boundary
//! residual losses, estimates a residual-defined failure probability, and
//! enriches the collocation set by self-adaptive importance sampling with
//! truncated-Gaussian (or Gaussian-mixture) proposals until the failure
//! probability falls below tolerance. Uniform and residual-ranked (RAR)
//! enrichment baselines, a PDE problem catalog, and a benchmark CLI harness
//! sit on top of that loop.

pub mod adaptive;
pub mod distributions;
pub mod domain;
pub mod error;
pub mod failure;
pub mod harness;
pub mod linalg;
pub mod network;
pub mod problems;
pub mod rng;
pub mod training;

pub use adaptive::{run_fi_pinn, AdaptiveConfig, AdaptiveTrace, Enrichment, PointBudget};
pub use distributions::Proposal;
pub use domain::DomainSpec;
pub use error::{Error, Result};
pub use failure::{pf_is, pf_mc, sais, LimitState, SaisConfig, SaisResult};
pub use harness::{run_comparison, run_experiment, ExperimentConfig, MetricsReport};
pub use network::{Jet2, JetAdjoint, JetHess, JetMode, JetTape, Network};
pub use problems::PdeProblem;
pub use training::{causal_weights, loss, train_adam, train_lbfgs, TrainingSet};
