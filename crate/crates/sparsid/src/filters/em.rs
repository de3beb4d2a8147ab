//! EM-based p-norm-like regularized RLS.
//!
//! The filter keeps two auxiliary quantities with rank-one update rules,
//! `B(n) = lambda B(n-1) - c x(n) x'(n) + (1-lambda) I` and
//! `u(n) = lambda u(n-1) + c d(n) x(n)` with `c = alpha^2 / sigma^2`, which
//! for the samples seen so far equal `I - c X' L X` and `c X' L d` (L the
//! forgetting-factor weights). Each step then runs K iterations of
//!
//! ```text
//! r = B w + u        (E-step, restricted to the support of w)
//! w = S(r)           (M-step, element-wise shrinkage)
//! ```
//!
//! The support restriction is exact, not an approximation: off-support
//! entries of `w` are literal zeros, so their columns contribute nothing.
//! Components zeroed by the dead zone are exact 0.0, which is what makes the
//! restriction (and exact-sparsity accounting) valid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::signal::SamplePair;
use crate::thresholding::ThresholdSpec;

use super::{check_dim, check_step_finite, symmetrize, AdaptiveFilter, StepOutput};

/// State of the EM p-norm-like RLS filter.
///
/// The first sample initializes `B(1) = I - c x x'`, `u(1) = c d x` and keeps
/// `w(1) = 0`; EM iterations start with the second sample.
#[derive(Debug, Clone)]
pub struct EmPnormRls {
    w_hat: DVector<f64>,
    b_mat: DMatrix<f64>,
    u_vec: DVector<f64>,
    lambda: f64,
    spec: ThresholdSpec,
    k_iters: usize,
    steps: usize,
}

impl EmPnormRls {
    /// Creates a filter that initializes itself from the first sample fed to
    /// [`step`](AdaptiveFilter::step).
    pub fn new(m: usize, spec: ThresholdSpec, lambda: f64, k_iters: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be positive".into()));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in (0, 1], got {lambda}"
            )));
        }
        if k_iters == 0 {
            return Err(Error::InvalidArgument("k_iters must be >= 1".into()));
        }
        Ok(Self {
            w_hat: DVector::zeros(m),
            b_mat: DMatrix::identity(m, m),
            u_vec: DVector::zeros(m),
            lambda,
            spec,
            k_iters,
            steps: 0,
        })
    }

    /// Builds the state directly from the first sample.
    pub fn from_first_sample(
        sample: &SamplePair,
        spec: ThresholdSpec,
        lambda: f64,
        k_iters: usize,
    ) -> Result<Self> {
        let mut filter = Self::new(sample.x.len(), spec, lambda, k_iters)?;
        filter.step(sample)?;
        Ok(filter)
    }

    pub fn b_mat(&self) -> &DMatrix<f64> {
        &self.b_mat
    }

    pub fn u_vec(&self) -> &DVector<f64> {
        &self.u_vec
    }

    pub fn spec(&self) -> &ThresholdSpec {
        &self.spec
    }

    /// Indices of the exactly nonzero weight estimates.
    pub fn support(&self) -> Vec<usize> {
        self.w_hat
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    fn update_b_u(&mut self, sample: &SamplePair, first: bool) {
        let c = self.spec.alpha2_over_sigma2();
        let x = &sample.x;
        if !first {
            self.b_mat *= self.lambda;
            let one_minus_lambda = 1.0 - self.lambda;
            for i in 0..self.b_mat.nrows() {
                self.b_mat[(i, i)] += one_minus_lambda;
            }
        }
        // From B(0) = I, u(0) = 0 the same rank-one terms produce the
        // first-sample values B(1) = I - c x x', u(1) = c d x.
        self.b_mat.ger(-c, x, x, 1.0);
        symmetrize(&mut self.b_mat);
        if !first {
            self.u_vec *= self.lambda;
        }
        self.u_vec.axpy(c * sample.d, x, 1.0);
    }
}

impl AdaptiveFilter for EmPnormRls {
    fn step(&mut self, sample: &SamplePair) -> Result<StepOutput> {
        check_dim(self.w_hat.len(), sample)?;
        let xi = sample.d - sample.x.dot(&self.w_hat);
        let first = self.steps == 0;
        self.update_b_u(sample, first);
        if !first {
            self.w_hat = em_iterate(
                &self.b_mat,
                &self.u_vec,
                &self.w_hat,
                self.k_iters,
                &self.spec,
            );
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

/// Runs K E/M iterations from `w_start` and returns the final iterate.
///
/// The E-step product `B w` touches only the columns of `B` indexed by the
/// support of the current iterate; since every off-support entry is exactly
/// zero this equals the dense product.
pub fn em_iterate(
    b_mat: &DMatrix<f64>,
    u_vec: &DVector<f64>,
    w_start: &DVector<f64>,
    k_iters: usize,
    spec: &ThresholdSpec,
) -> DVector<f64> {
    let mut w = w_start.clone();
    let mut r = DVector::zeros(u_vec.len());
    for _ in 0..k_iters {
        r.copy_from(u_vec);
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                r.axpy(wj, &b_mat.column(j), 1.0);
            }
        }
        for (wi, &ri) in w.iter_mut().zip(r.iter()) {
            *wi = spec.apply(ri);
        }
    }
    w
}
