//! Adaptive estimators behind one step-wise interface.
//!
//! All of them consume one [`SamplePair`] per step and report the a-priori
//! error `xi(n) = d(n) - x'(n) w(n-1)` together with the posterior estimate
//! `w(n)`; the harness treats them uniformly through [`AdaptiveFilter`]
//! trait objects, so adding an estimator needs no harness change.

mod em;
mod rls;

pub use em::{em_iterate, EmPnormRls};
pub use rls::Rls;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::signal::SamplePair;

/// Per-step output: a-priori error and posterior weight estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub xi: f64,
    pub w_hat: DVector<f64>,
}

/// Step-wise estimator interface. State is single-owner and mutated only
/// through `step`; instances may move between threads between steps.
pub trait AdaptiveFilter: Send {
    /// Consumes one sample and advances the state.
    fn step(&mut self, sample: &SamplePair) -> Result<StepOutput>;

    /// Current weight estimate.
    fn weights(&self) -> &DVector<f64>;

    /// Number of samples consumed so far.
    fn steps_taken(&self) -> usize;
}

/// Averages a matrix with its transpose in place. The rank-one recursions
/// drift asymmetrically in finite precision; both P and B are re-symmetrized
/// every step.
pub(crate) fn symmetrize(mat: &mut DMatrix<f64>) {
    let n = mat.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (mat[(i, j)] + mat[(j, i)]);
            mat[(i, j)] = avg;
            mat[(j, i)] = avg;
        }
    }
}

pub(crate) fn check_step_finite(step: usize, xi: f64, w: &DVector<f64>) -> Result<()> {
    if !xi.is_finite() {
        return Err(Error::NonFinite {
            step,
            detail: format!("a-priori error xi = {xi}"),
        });
    }
    if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            step,
            detail: format!("weight w[{i}] = {v}"),
        });
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, sample: &SamplePair) -> Result<()> {
    if sample.x.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "sample has {} entries, filter expects {expected}",
            sample.x.len()
        )));
    }
    Ok(())
}
