//! Sparse system identification with RLS-family adaptive filters.
//!
//! The crate provides:
//!
//! - [`signal`]: sparse ground-truth systems and seeded Gaussian sample streams,
//!   plus a CSV format for recorded sample sets;
//! - [`penalty`]: sparsity measures (p-norm-like, exponential l0 surrogate) and
//!   their subgradients;
//! - [`thresholding`]: the piecewise shrinkage operator used in the EM M-step,
//!   in closed form for p = 0, 0 < p < 1 and p = 1;
//! - [`filters`]: the adaptive estimators (RLS, convex-regularized RLS, and the
//!   EM p-norm-like RLS with a support-restricted E-step) behind one trait;
//! - [`harness`]: the Monte-Carlo experiment runner, steady-state MSE, gamma
//!   sweeps and the alpha-condition diagnostic;
//! - [`config`] / [`report`]: experiment configuration files and the stable
//!   curve/sweep output schemas consumed by the `sparsid` CLI.
//!
//! Trials in the harness are data-parallel. With the default `parallel`
//! feature they run on a rayon pool; without it the crate falls back to a
//! purely sequential runner with identical output.

pub mod config;
pub mod error;
pub mod filters;
pub mod harness;
pub mod penalty;
pub mod report;
pub mod signal;
pub mod thresholding;

pub use config::{AlgorithmConfig, ExperimentConfig, IdentifyConfig};
pub use error::{Error, Result};
pub use filters::{AdaptiveFilter, EmPnormRls, Rls, StepOutput};
pub use harness::{
    check_alpha_condition, run_experiment, run_experiment_sequential, steady_state_mse,
    sweep_gamma, AlphaConditionReport, LearningCurve, SweepResult,
};
pub use penalty::PenaltyKind;
pub use signal::{generate_sparse_system, SamplePair, SampleStream, SignalConfig, SparseSystem};
pub use thresholding::ThresholdSpec;
