//! Monte-Carlo experiment runner.
//!
//! Each trial draws a fresh sparse system and sample stream from its own
//! substreams of the master seed, runs every configured algorithm over the
//! identical stream, and records the squared estimation error
//! `|w_hat(n) - w|^2` per iteration. Curves are averaged over trials with a
//! fixed, trial-ordered reduction, so results are identical whether the
//! trials ran sequentially or on a rayon pool (and at any thread count).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::config::{AlgorithmConfig, ExperimentConfig, IdentifyConfig};
use crate::error::{Error, Result};
use crate::signal::{
    generate_sparse_system, substream_seed, SamplePair, SampleStream, SignalConfig,
};

/// Trial-averaged squared-error trajectory of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningCurve {
    pub algorithm_id: String,
    /// `mse[n]` is the average of `|w_hat(n+1) - w|^2` over trials.
    pub mse: Vec<f64>,
    pub trials: usize,
}

/// Result of a gamma sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub gamma_grid: Vec<f64>,
    pub steady_mse: Vec<f64>,
    /// Grid value attaining the minimum steady-state MSE; ties break toward
    /// the smaller gamma.
    pub best_gamma: f64,
}

/// Outcome of the positive-semidefiniteness diagnostic for alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaConditionReport {
    /// Whether `alpha^2 <= sigma^2 / s1`.
    pub satisfied: bool,
    /// Largest eigenvalue of the weighted sample Gram matrix.
    pub s1: f64,
    pub alpha2: f64,
    /// The admissible bound `sigma^2 / s1`.
    pub bound: f64,
}

/// Runs the experiment, parallelizing over trials when the `parallel`
/// feature is enabled.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<LearningCurve>> {
    cfg.validate()?;
    #[cfg(feature = "parallel")]
    let per_trial: Result<Vec<Vec<Vec<f64>>>> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let per_trial: Result<Vec<Vec<Vec<f64>>>> =
        (0..cfg.n_trials).map(|t| run_trial(cfg, t)).collect();
    Ok(aggregate(cfg, per_trial?))
}

/// Reference sequential runner; always available and identical in output to
/// [`run_experiment`].
pub fn run_experiment_sequential(cfg: &ExperimentConfig) -> Result<Vec<LearningCurve>> {
    cfg.validate()?;
    let per_trial: Result<Vec<Vec<Vec<f64>>>> =
        (0..cfg.n_trials).map(|t| run_trial(cfg, t)).collect();
    Ok(aggregate(cfg, per_trial?))
}

/// One trial: fresh system and stream, all algorithms fed the same samples.
/// Returns `sq_err[algo][iter]`.
fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<Vec<f64>>> {
    let system = generate_sparse_system(
        cfg.m,
        cfg.r_true,
        substream_seed(cfg.seed, 2 * trial as u64),
    )?;
    let signal = SignalConfig {
        m: cfg.m,
        input_variance: cfg.input_variance_or_default(),
        noise_variance: cfg.noise_variance,
        seed: substream_seed(cfg.seed, 2 * trial as u64 + 1),
    };
    let mut stream = SampleStream::new(&system, &signal)?;

    let ctx = cfg.build_context();
    let mut filters = Vec::with_capacity(cfg.algorithms.len());
    for algo in &cfg.algorithms {
        filters.push(algo.build(&ctx)?);
    }

    let mut sq_err = vec![vec![0.0; cfg.n_iters]; filters.len()];
    for n in 0..cfg.n_iters {
        let sample = stream.next_sample();
        for (a, filter) in filters.iter_mut().enumerate() {
            let out = filter.step(&sample).map_err(|e| Error::Trial {
                algorithm: cfg.algorithms[a].id(),
                trial,
                source: Box::new(e),
            })?;
            let mut diff = out.w_hat;
            diff -= system.taps();
            sq_err[a][n] = diff.norm_squared();
        }
    }
    Ok(sq_err)
}

/// Trial-ordered average of the per-trial squared errors.
fn aggregate(cfg: &ExperimentConfig, per_trial: Vec<Vec<Vec<f64>>>) -> Vec<LearningCurve> {
    let n_algos = cfg.algorithms.len();
    let mut sums = vec![vec![0.0f64; cfg.n_iters]; n_algos];
    for trial in &per_trial {
        for (a, errs) in trial.iter().enumerate() {
            for (s, e) in sums[a].iter_mut().zip(errs.iter()) {
                *s += *e;
            }
        }
    }
    let scale = 1.0 / cfg.n_trials as f64;
    cfg.algorithms
        .iter()
        .zip(sums)
        .map(|(algo, sum)| LearningCurve {
            algorithm_id: algo.id(),
            mse: sum.into_iter().map(|s| s * scale).collect(),
            trials: cfg.n_trials,
        })
        .collect()
}

/// Mean of the final `window` MSE values.
pub fn steady_state_mse(curve: &LearningCurve, window: usize) -> Result<f64> {
    if window == 0 || window > curve.mse.len() {
        return Err(Error::InvalidArgument(format!(
            "window must lie in [1, {}], got {window}",
            curve.mse.len()
        )));
    }
    let tail = &curve.mse[curve.mse.len() - window..];
    Ok(tail.iter().sum::<f64>() / window as f64)
}

/// Runs the experiment once per grid value with identical seeds (common
/// random numbers) and locates the gamma minimizing the steady-state MSE.
pub fn sweep_gamma(
    cfg: &ExperimentConfig,
    algorithm: &AlgorithmConfig,
    gamma_grid: &[f64],
    window: usize,
) -> Result<SweepResult> {
    if gamma_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "gamma grid must be non-empty".into(),
        ));
    }
    for &g in gamma_grid {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma grid values must be finite and >= 0, got {g}"
            )));
        }
    }
    let mut steady = Vec::with_capacity(gamma_grid.len());
    for &gamma in gamma_grid {
        let mut point_cfg = cfg.clone();
        point_cfg.algorithms = vec![algorithm.with_gamma(gamma)?];
        let curves = run_experiment(&point_cfg)?;
        steady.push(steady_state_mse(&curves[0], window)?);
    }
    let mut best = (steady[0], gamma_grid[0]);
    for (&mse, &gamma) in steady.iter().zip(gamma_grid).skip(1) {
        if mse < best.0 || (mse == best.0 && gamma < best.1) {
            best = (mse, gamma);
        }
    }
    Ok(SweepResult {
        gamma_grid: gamma_grid.to_vec(),
        steady_mse: steady,
        best_gamma: best.1,
    })
}

/// Checks `alpha^2 <= sigma^2 / s1` over a recorded sample set, where `s1`
/// is the largest eigenvalue of the forgetting-weighted Gram matrix.
///
/// Offline diagnostic only: the condition needs the full data matrix, so the
/// filters do not check it online.
pub fn check_alpha_condition(
    samples: &[SamplePair],
    lambda: f64,
    alpha: f64,
    sigma2: f64,
) -> Result<AlphaConditionReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("sample set is empty".into()));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma2 must be > 0, got {sigma2}"
        )));
    }
    let n = samples.len();
    let m = samples[0].x.len();
    for (i, s) in samples.iter().enumerate() {
        if s.x.len() != m {
            return Err(Error::Format(format!(
                "sample {i} has {} entries, expected {m}",
                s.x.len()
            )));
        }
    }

    // L^{1/2} X X' L^{1/2} (n x n) and X' L X (m x m) share their nonzero
    // spectrum; build whichever is smaller.
    let s1 = if n <= m {
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            let wi = lambda.powi((n - 1 - i) as i32).sqrt();
            for j in i..n {
                let wj = lambda.powi((n - 1 - j) as i32).sqrt();
                let v = wi * wj * samples[i].x.dot(&samples[j].x);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k.symmetric_eigenvalues().max()
    } else {
        let mut gram = DMatrix::zeros(m, m);
        for (i, s) in samples.iter().enumerate() {
            gram.ger(lambda.powi((n - 1 - i) as i32), &s.x, &s.x, 1.0);
        }
        gram.symmetric_eigenvalues().max()
    };

    let alpha2 = alpha * alpha;
    let bound = sigma2 / s1;
    Ok(AlphaConditionReport {
        satisfied: alpha2 <= bound,
        s1,
        alpha2,
        bound,
    })
}

/// Result of streaming a recorded sample set through one filter.
#[derive(Debug, Clone)]
pub struct IdentifyOutcome {
    pub algorithm_id: String,
    pub w_hat: DVector<f64>,
    /// Indices of the exactly nonzero weight estimates.
    pub support: Vec<usize>,
    pub xi_trace: Vec<f64>,
    /// Present for EM algorithms, which carry alpha and sigma2.
    pub alpha_condition: Option<AlphaConditionReport>,
}

/// Streams recorded samples through the configured filter.
pub fn identify(samples: &[SamplePair], cfg: &IdentifyConfig) -> Result<IdentifyOutcome> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "sample set is empty; nothing to identify".into(),
        ));
    }
    let m = samples[0].x.len();
    let ctx = cfg.build_context(m);
    let mut filter = cfg.algorithm.build(&ctx)?;
    let mut xi_trace = Vec::with_capacity(samples.len());
    for sample in samples {
        let out = filter.step(sample).map_err(|e| Error::Trial {
            algorithm: cfg.algorithm.id(),
            trial: 0,
            source: Box::new(e),
        })?;
        xi_trace.push(out.xi);
    }
    let w_hat = filter.weights().clone();
    let support = w_hat
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    let alpha_condition = match cfg.algorithm.em_noise_params(&ctx) {
        Some(params) => {
            let (alpha, sigma2) = params?;
            Some(check_alpha_condition(samples, cfg.lambda, alpha, sigma2)?)
        }
        None => None,
    };
    Ok(IdentifyOutcome {
        algorithm_id: cfg.algorithm.id(),
        w_hat,
        support,
        xi_trace,
        alpha_condition,
    })
}
