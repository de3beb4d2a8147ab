//! Exponentially weighted recursive least squares, with an optional convex
//! sparsity penalty applied as a subgradient correction (CR-RLS). Plain RLS
//! is the gamma = 0 case of the same recursion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::penalty::{subgradient, PenaltyKind};
use crate::signal::SamplePair;

use super::{check_dim, check_step_finite, symmetrize, AdaptiveFilter, StepOutput};

/// RLS / CR-RLS state: weight estimate and inverse-correlation matrix.
///
/// Starts from `w(0) = 0`, `P(0) = (1/rho) I`. Each step computes the gain
/// `k(n) = P(n-1) x(n) / (lambda + x'(n) P(n-1) x(n))`, the a-priori error
/// `xi(n)`, the P update
/// `P(n) = (P(n-1) - k(n) x'(n) P(n-1)) / lambda`, and
/// `w(n) = w(n-1) + k(n) xi(n) - gamma (1-lambda) P(n) g(w(n-1))` where `g`
/// is a subgradient of the penalty. With gamma = 0 the penalty path is
/// skipped entirely, making this bit-for-bit the classic RLS recursion.
#[derive(Debug, Clone)]
pub struct Rls {
    w_hat: DVector<f64>,
    p_mat: DMatrix<f64>,
    lambda: f64,
    gamma: f64,
    penalty: PenaltyKind,
    steps: usize,
}

impl Rls {
    pub fn new(m: usize, lambda: f64, rho: f64, gamma: f64, penalty: PenaltyKind) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be positive".into()));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in (0, 1], got {lambda}"
            )));
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rho must be > 0, got {rho}"
            )));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        penalty.validate()?;
        Ok(Self {
            w_hat: DVector::zeros(m),
            p_mat: DMatrix::identity(m, m) / rho,
            lambda,
            gamma,
            penalty,
            steps: 0,
        })
    }

    /// Classic RLS: the gamma = 0 path.
    pub fn plain(m: usize, lambda: f64, rho: f64) -> Result<Self> {
        Self::new(m, lambda, rho, 0.0, PenaltyKind::L1)
    }

    pub fn p_mat(&self) -> &DMatrix<f64> {
        &self.p_mat
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl AdaptiveFilter for Rls {
    fn step(&mut self, sample: &SamplePair) -> Result<StepOutput> {
        check_dim(self.w_hat.len(), sample)?;
        let x = &sample.x;

        let px = &self.p_mat * x;
        let denom = self.lambda + x.dot(&px);
        let xi = sample.d - x.dot(&self.w_hat);
        let k = &px / denom;

        // P(n) = (P(n-1) - k (P(n-1) x)') / lambda, then re-symmetrize.
        self.p_mat.ger(-1.0, &k, &px, 1.0);
        self.p_mat /= self.lambda;
        symmetrize(&mut self.p_mat);

        // Subgradient is taken at w(n-1), the correction uses P(n).
        let correction = if self.gamma > 0.0 && self.lambda < 1.0 {
            let g = subgradient(&self.w_hat, self.penalty)?;
            Some(&self.p_mat * g * (self.gamma * (1.0 - self.lambda)))
        } else {
            None
        };

        self.w_hat.axpy(xi, &k, 1.0);
        if let Some(c) = correction {
            self.w_hat -= c;
        }

        self.steps += 1;
        check_step_finite(self.steps, xi, &self.w_hat)?;
        Ok(StepOutput {
            xi,
            w_hat: self.w_hat.clone(),
        })
    }

    fn weights(&self) -> &DVector<f64> {
        &self.w_hat
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}
