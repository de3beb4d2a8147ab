//! Sparsity measures and their subgradients.
//!
//! Three measures are supported: the p-norm-like sum `Σ |w_i|^p` for
//! `0 <= p <= 1` (with the convention `|0|^0 = 0`, so p = 0 is the exact
//! nonzero count and p = 1 the l1 norm), the exponential l0 surrogate
//! `Σ (1 - exp(-beta |w_i|))`, and the subgradient vectors consumed by the
//! convex-regularized RLS update.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Regularization floor for the 0 < p < 1 subgradient singularity at 0.
/// That subgradient exists for API completeness only; the EM filter goes
/// through the thresholding operator instead.
pub const PNORM_SUBGRADIENT_REG: f64 = 1e-8;

/// sgn with sgn(0) = 0, a valid subgradient choice for |.| at the origin.
/// Keeps exact zeros attracted to zero rather than perturbed.
pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Which sparsity measure a convex-regularized filter penalizes with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyKind {
    /// `Σ |w_i|^p`, 0 <= p <= 1.
    PNormLike { p: f64 },
    /// `Σ |w_i|` (sign-vector subgradient).
    L1,
    /// `Σ (1 - exp(-beta |w_i|))`, beta > 0.
    L0Approx { beta: f64 },
}

impl PenaltyKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PenaltyKind::PNormLike { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidArgument(format!(
                        "p must lie in [0, 1], got {p}"
                    )));
                }
            }
            PenaltyKind::L1 => {}
            PenaltyKind::L0Approx { beta } => {
                if !(beta > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "beta must be > 0, got {beta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Penalty value at `w`.
    pub fn evaluate(&self, w: &DVector<f64>) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            PenaltyKind::PNormLike { p } => p_norm_like(w, p)?,
            PenaltyKind::L1 => w.iter().map(|v| v.abs()).sum(),
            PenaltyKind::L0Approx { beta } => l0_exp_approx(w, beta)?,
        })
    }
}

/// `Σ |w_i|^p` with `|0|^0 = 0`.
pub fn p_norm_like(w: &DVector<f64>, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "p must lie in [0, 1], got {p}"
        )));
    }
    if p == 0.0 {
        return Ok(w.iter().filter(|v| **v != 0.0).count() as f64);
    }
    if p == 1.0 {
        return Ok(w.iter().map(|v| v.abs()).sum());
    }
    Ok(w.iter().map(|v| v.abs().powf(p)).sum())
}

/// `Σ (1 - exp(-beta |w_i|))`; tends to the nonzero count as beta grows.
pub fn l0_exp_approx(w: &DVector<f64>, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be > 0, got {beta}"
        )));
    }
    Ok(w.iter().map(|v| 1.0 - (-beta * v.abs()).exp()).sum())
}

/// Element-wise subgradient of the chosen measure, with sgn(0) = 0.
///
/// - `L1`: `sgn(w_i)`
/// - `L0Approx(beta)`: `beta * sgn(w_i) * exp(-beta |w_i|)`
/// - `PNormLike(p)`, 0 < p < 1: `p * sgn(w_i) / (|w_i| + reg)^(1-p)` with
///   `reg =` [`PNORM_SUBGRADIENT_REG`]; p = 0 and p = 1 reduce to the exact
///   endpoint formulas.
pub fn subgradient(w: &DVector<f64>, kind: PenaltyKind) -> Result<DVector<f64>> {
    kind.validate()?;
    let g = match kind {
        PenaltyKind::L1 => w.map(sgn),
        PenaltyKind::L0Approx { beta } => w.map(|v| beta * sgn(v) * (-beta * v.abs()).exp()),
        PenaltyKind::PNormLike { p } => {
            w.map(|v| p * sgn(v) / (v.abs() + PNORM_SUBGRADIENT_REG).powf(1.0 - p))
        }
    };
    Ok(g)
}
