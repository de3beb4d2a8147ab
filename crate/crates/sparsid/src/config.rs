//! Experiment and algorithm configuration.
//!
//! Experiments are described by a TOML file with top-level signal/run
//! settings and one `[[algorithms]]` table per estimator:
//!
//! ```toml
//! m = 100
//! r_true = 10
//! noise_variance = 0.005
//! lambda = 0.999
//! n_iters = 2000
//! n_trials = 20
//! seed = 42
//!
//! [[algorithms]]
//! kind = "rls"
//!
//! [[algorithms]]
//! kind = "cr_rls"
//! penalty = "l1"
//! gamma = 0.19
//!
//! [[algorithms]]
//! kind = "em_pnorm"
//! p = 0.5
//! gamma = 0.28
//! ```
//!
//! Defaults: `input_variance = 1/m`, `rho = 2/m`, EM `sigma2` equals the
//! experiment `noise_variance`, `alpha = sigma/4`, `delta = 0.2`, `beta = 5`,
//! `k_iters = 1`. Gammas are experiment-tuned and therefore mandatory for
//! every regularized algorithm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{AdaptiveFilter, EmPnormRls, Rls};
use crate::penalty::PenaltyKind;
use crate::thresholding::{self, ThresholdSpec, DEFAULT_BETA, DEFAULT_DELTA, DEFAULT_K_ITERS};

/// Full description of a Monte-Carlo experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Filter length M.
    pub m: usize,
    /// Number of nonzero taps in each drawn system.
    pub r_true: usize,
    /// Observation-noise variance sigma^2 of the generated streams.
    pub noise_variance: f64,
    /// Per-sample input variance; defaults to 1/m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_variance: Option<f64>,
    /// Forgetting factor, shared by all algorithms.
    pub lambda: f64,
    /// Samples per trial.
    pub n_iters: usize,
    /// Independent trials to average over.
    pub n_trials: usize,
    /// Master seed; trial t uses substreams 2t and 2t+1.
    pub seed: u64,
    /// Worker threads for the trial runner; None uses the ambient pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub algorithms: Vec<AlgorithmConfig>,
}

impl ExperimentConfig {
    pub fn input_variance_or_default(&self) -> f64 {
        self.input_variance.unwrap_or(1.0 / self.m as f64)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        if self.r_true < 1 || self.r_true > self.m {
            return Err(Error::Config(format!(
                "r_true must satisfy 1 <= r_true <= m, got {}",
                self.r_true
            )));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::Config(format!(
                "noise_variance must be >= 0, got {}",
                self.noise_variance
            )));
        }
        if let Some(iv) = self.input_variance {
            if !(iv > 0.0) {
                return Err(Error::Config(format!(
                    "input_variance must be > 0, got {iv}"
                )));
            }
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Config(format!(
                "lambda must lie in (0, 1], got {}",
                self.lambda
            )));
        }
        if self.n_iters == 0 {
            return Err(Error::Config("n_iters must be >= 1".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::Config("threads must be >= 1 when set".into()));
            }
        }
        let mut ids: Vec<String> = self.algorithms.iter().map(|a| a.id()).collect();
        ids.sort();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::Config(format!(
                    "duplicate algorithm id `{}`; set distinct `id` fields",
                    pair[0]
                )));
            }
        }
        // Building each filter validates all per-algorithm parameters.
        let ctx = self.build_context();
        for algo in &self.algorithms {
            algo.build(&ctx)?;
        }
        Ok(())
    }

    pub fn build_context(&self) -> BuildContext {
        BuildContext {
            m: self.m,
            lambda: self.lambda,
            default_sigma2: Some(self.noise_variance).filter(|v| *v > 0.0),
        }
    }
}

/// Parameters an algorithm config needs from its surroundings to build a
/// filter.
#[derive(Debug, Clone, Copy)]
pub struct BuildContext {
    pub m: usize,
    pub lambda: f64,
    /// Fallback assumed noise variance for EM algorithms that do not carry
    /// their own `sigma2`; None when the experiment is noiseless.
    pub default_sigma2: Option<f64>,
}

/// Penalty selector for convex-regularized RLS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrPenalty {
    L1,
    L0,
}

/// One estimator entry of an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmConfig {
    /// Classic RLS.
    Rls {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        /// P(0) = (1/rho) I; defaults to 2/m.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
    },
    /// Convex-regularized RLS with an l1 or exponential-l0 penalty.
    CrRls {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
        gamma: f64,
        penalty: CrPenalty,
        /// Steepness of the l0 surrogate; only used with `penalty = "l0"`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    /// EM p-norm-like RLS.
    EmPnorm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        p: f64,
        gamma: f64,
        /// Auxiliary-noise scale; defaults to sigma/4.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        /// Assumed noise variance; defaults to the experiment's
        /// noise_variance and must be supplied when that is zero.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_iters: Option<usize>,
    },
}

impl AlgorithmConfig {
    /// Column label in curve outputs. Defaults identify the family and its
    /// main parameter.
    pub fn id(&self) -> String {
        match self {
            AlgorithmConfig::Rls { id, .. } => id.clone().unwrap_or_else(|| "rls".into()),
            AlgorithmConfig::CrRls { id, penalty, .. } => {
                id.clone().unwrap_or_else(|| match penalty {
                    CrPenalty::L1 => "cr-rls-l1".into(),
                    CrPenalty::L0 => "cr-rls-l0".into(),
                })
            }
            AlgorithmConfig::EmPnorm { id, p, .. } => {
                id.clone().unwrap_or_else(|| format!("em-p{p}"))
            }
        }
    }

    /// Copy of this config with the regularization weight replaced; used by
    /// gamma sweeps. Plain RLS has no gamma.
    pub fn with_gamma(&self, new_gamma: f64) -> Result<AlgorithmConfig> {
        let mut copy = self.clone();
        match &mut copy {
            AlgorithmConfig::Rls { .. } => {
                return Err(Error::InvalidArgument(
                    "algorithm `rls` has no gamma parameter to sweep".into(),
                ));
            }
            AlgorithmConfig::CrRls { gamma, .. } => *gamma = new_gamma,
            AlgorithmConfig::EmPnorm { gamma, .. } => *gamma = new_gamma,
        }
        Ok(copy)
    }

    /// The EM threshold parameters resolved against the context, if this is
    /// an EM algorithm: (alpha, sigma2).
    pub fn em_noise_params(&self, ctx: &BuildContext) -> Option<Result<(f64, f64)>> {
        match self {
            AlgorithmConfig::EmPnorm { alpha, sigma2, .. } => {
                let sigma2 = match sigma2.or(ctx.default_sigma2) {
                    Some(v) => v,
                    None => {
                        return Some(Err(Error::Config(format!(
                            "algorithm `{}` needs an explicit sigma2 > 0 \
                             (experiment noise_variance is zero)",
                            self.id()
                        ))));
                    }
                };
                let alpha = alpha.unwrap_or_else(|| thresholding::default_alpha(sigma2));
                Some(Ok((alpha, sigma2)))
            }
            _ => None,
        }
    }

    /// Instantiates a fresh filter for one trial.
    pub fn build(&self, ctx: &BuildContext) -> Result<Box<dyn AdaptiveFilter>> {
        match self {
            AlgorithmConfig::Rls { rho, .. } => {
                let rho = rho.unwrap_or(2.0 / ctx.m as f64);
                Ok(Box::new(Rls::plain(ctx.m, ctx.lambda, rho)?))
            }
            AlgorithmConfig::CrRls {
                rho,
                gamma,
                penalty,
                beta,
                ..
            } => {
                let rho = rho.unwrap_or(2.0 / ctx.m as f64);
                let kind = match penalty {
                    CrPenalty::L1 => PenaltyKind::L1,
                    CrPenalty::L0 => PenaltyKind::L0Approx {
                        beta: beta.unwrap_or(DEFAULT_BETA),
                    },
                };
                Ok(Box::new(Rls::new(ctx.m, ctx.lambda, rho, *gamma, kind)?))
            }
            AlgorithmConfig::EmPnorm {
                p,
                gamma,
                delta,
                beta,
                k_iters,
                ..
            } => {
                let (alpha, sigma2) = self
                    .em_noise_params(ctx)
                    .expect("EmPnorm always has noise params")?;
                let spec = ThresholdSpec::new(
                    *p,
                    alpha,
                    sigma2,
                    *gamma,
                    delta.unwrap_or(DEFAULT_DELTA),
                    beta.unwrap_or(DEFAULT_BETA),
                )?;
                Ok(Box::new(EmPnormRls::new(
                    ctx.m,
                    spec,
                    ctx.lambda,
                    k_iters.unwrap_or(DEFAULT_K_ITERS),
                )?))
            }
        }
    }
}

/// Configuration for running a single filter over a recorded sample file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyConfig {
    pub lambda: f64,
    /// Assumed noise variance, used as the EM default and by the
    /// alpha-condition diagnostic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    pub algorithm: AlgorithmConfig,
}

impl IdentifyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: IdentifyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !(cfg.lambda > 0.0 && cfg.lambda <= 1.0) {
            return Err(Error::Config(format!(
                "lambda must lie in (0, 1], got {}",
                cfg.lambda
            )));
        }
        if let Some(s) = cfg.sigma2 {
            if !(s > 0.0) {
                return Err(Error::Config(format!("sigma2 must be > 0, got {s}")));
            }
        }
        Ok(cfg)
    }

    pub fn build_context(&self, m: usize) -> BuildContext {
        BuildContext {
            m,
            lambda: self.lambda,
            default_sigma2: self.sigma2,
        }
    }
}
