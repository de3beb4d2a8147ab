//! The element-wise shrinkage operator of the EM M-step.
//!
//! [`ThresholdSpec`] bundles the penalty exponent p with the scale
//! `alpha^2 / sigma^2`, the regularization weight gamma and the shape
//! parameters delta (for 0 < p < 1) and beta (for p = 0), and precomputes the
//! breakpoints of the piecewise map:
//!
//! - `|x| <= t_lower`: dead zone, output exactly 0;
//! - `t_lower < |x| < t_upper`: linear shrinkage
//!   `sgn(x) (|x| - t_lower) / slope_den`;
//! - `|x| >= t_upper`: identity (p = 1 has no identity region; its middle
//!   branch `sgn(x)(|x| - t_lower)` extends to infinity).
//!
//! Breakpoints per regime:
//!
//! - p = 1: `t_lower = gamma alpha^2 / sigma^2`, `t_upper = inf`,
//!   `slope_den = 1`;
//! - 0 < p < 1: `t_lower = (alpha^2 gamma p / sigma^2) delta^(p-1)`,
//!   `t_upper = delta / (1-p)`,
//!   `slope_den = 1 - (alpha^2 gamma p (1-p) / sigma^2) delta^(p-2)`;
//! - p = 0: `t_lower = alpha^2 gamma beta / sigma^2`, `t_upper = 1 / beta`,
//!   `slope_den = 1 - alpha^2 gamma beta^2 / sigma^2`.
//!
//! Parameter combinations with `slope_den <= 0` or `t_lower >= t_upper` are
//! rejected at construction: a non-monotone map would corrupt the M-step
//! silently.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::penalty::sgn;

/// Default l0-surrogate steepness.
pub const DEFAULT_BETA: f64 = 5.0;
/// Default linearization width for 0 < p < 1; equals `1 / DEFAULT_BETA` so
/// the p -> 0 attraction range matches the p = 0 regime.
pub const DEFAULT_DELTA: f64 = 0.2;
/// Default number of EM iterations per sample.
pub const DEFAULT_K_ITERS: usize = 1;

/// Default auxiliary-noise scale: `alpha = sigma / 4`.
pub fn default_alpha(sigma2: f64) -> f64 {
    sigma2.sqrt() / 4.0
}

/// Validated, immutable shrinkage-map parameters with precomputed breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    p: f64,
    alpha2_over_sigma2: f64,
    gamma: f64,
    delta: f64,
    beta: f64,
    t_lower: f64,
    t_upper: f64,
    slope_den: f64,
}

impl ThresholdSpec {
    /// Validates the parameters and computes the breakpoints for the regime
    /// selected by `p`.
    pub fn new(p: f64, alpha: f64, sigma2: f64, gamma: f64, delta: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "p must lie in [0, 1], got {p}"
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma2 must be > 0, got {sigma2}"
            )));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be > 0, got {delta}"
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be > 0, got {beta}"
            )));
        }

        let a2s2 = alpha * alpha / sigma2;
        let (t_lower, t_upper, slope_den) = if p == 1.0 {
            (a2s2 * gamma, f64::INFINITY, 1.0)
        } else if p == 0.0 {
            (
                a2s2 * gamma * beta,
                1.0 / beta,
                1.0 - a2s2 * gamma * beta * beta,
            )
        } else {
            (
                a2s2 * gamma * p * delta.powf(p - 1.0),
                delta / (1.0 - p),
                1.0 - a2s2 * gamma * p * (1.0 - p) * delta.powf(p - 2.0),
            )
        };

        if !(slope_den > 0.0) {
            return Err(Error::IllPosedThreshold(format!(
                "slope_den = {slope_den} violates slope_den > 0 \
                 (alpha^2 gamma / sigma^2 too large for this p)"
            )));
        }
        if !(t_lower < t_upper) {
            return Err(Error::IllPosedThreshold(format!(
                "t_lower = {t_lower} violates t_lower < t_upper = {t_upper}"
            )));
        }

        Ok(Self {
            p,
            alpha2_over_sigma2: a2s2,
            gamma,
            delta,
            beta,
            t_lower,
            t_upper,
            slope_den,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha2_over_sigma2(&self) -> f64 {
        self.alpha2_over_sigma2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Dead-zone breakpoint: magnitudes at or below it map to exact zero.
    pub fn t_lower(&self) -> f64 {
        self.t_lower
    }

    /// Identity-region breakpoint: magnitudes at or above it pass unchanged
    /// (infinite for p = 1).
    pub fn t_upper(&self) -> f64 {
        self.t_upper
    }

    /// Denominator of the linear shrinkage branch.
    pub fn slope_den(&self) -> f64 {
        self.slope_den
    }

    /// Forward map S'(x) whose (piecewise-linearized) inverse is [`apply`].
    ///
    /// For 0 < p < 1 the nonlinear term `(a2s2 gamma p) sgn(x) /
    /// (|x| + delta)^(1-p)` is kept exactly inside `|x| < t_upper` and
    /// treated as zero beyond it, matching the linearization under which the
    /// closed-form inverse is derived; only the identity tail and the origin
    /// invert exactly in that regime. The p = 0 map is piecewise linear and
    /// [`apply`] is its exact inverse everywhere, as it is for p = 1.
    ///
    /// [`apply`]: ThresholdSpec::apply
    pub fn forward(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        if self.p == 1.0 {
            return x + self.t_lower * sgn(x);
        }
        let ax = x.abs();
        if ax >= self.t_upper {
            return x;
        }
        if self.p == 0.0 {
            let c = self.alpha2_over_sigma2 * self.gamma;
            x + c * (self.beta * sgn(x) - self.beta * self.beta * x)
        } else {
            let c = self.alpha2_over_sigma2 * self.gamma * self.p;
            x + c * sgn(x) / (ax + self.delta).powf(1.0 - self.p)
        }
    }

    /// The shrinkage map S(x): zero on the dead zone, linear in between,
    /// identity beyond `t_upper`.
    pub fn apply(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.t_lower {
            0.0
        } else if ax >= self.t_upper {
            x
        } else {
            sgn(x) * (ax - self.t_lower) / self.slope_den
        }
    }

    /// Element-wise [`apply`](ThresholdSpec::apply).
    pub fn apply_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| self.apply(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec_p1() -> ThresholdSpec {
        // alpha^2/sigma^2 = 1/16, gamma = 0.19
        ThresholdSpec::new(1.0, 0.25, 1.0, 0.19, DEFAULT_DELTA, DEFAULT_BETA).unwrap()
    }

    fn spec_p05() -> ThresholdSpec {
        ThresholdSpec::new(0.5, 0.25, 1.0, 0.28, 0.2, DEFAULT_BETA).unwrap()
    }

    fn spec_p0() -> ThresholdSpec {
        ThresholdSpec::new(0.0, 0.25, 1.0, 0.07, DEFAULT_DELTA, 5.0).unwrap()
    }

    #[test]
    fn breakpoints_p1() {
        let s = spec_p1();
        assert_relative_eq!(s.t_lower(), 0.011875, max_relative = 1e-12);
        assert!(s.t_upper().is_infinite());
        assert_eq!(s.slope_den(), 1.0);
    }

    #[test]
    fn breakpoints_p05() {
        let s = spec_p05();
        assert_relative_eq!(s.t_lower(), 0.019565594803123164, max_relative = 1e-12);
        assert_relative_eq!(s.t_upper(), 0.4, max_relative = 1e-12);
        assert_relative_eq!(s.slope_den(), 0.9510860129921921, max_relative = 1e-12);
    }

    #[test]
    fn breakpoints_p0() {
        let s = spec_p0();
        assert_relative_eq!(s.t_lower(), 0.021875, max_relative = 1e-12);
        assert_relative_eq!(s.t_upper(), 0.2, max_relative = 1e-12);
        assert_relative_eq!(s.slope_den(), 0.890625, max_relative = 1e-12);
    }

    #[test]
    fn forward_examples() {
        assert_eq!(spec_p1().forward(0.0), 0.0);
        assert_eq!(spec_p05().forward(0.0), 0.0);
        // p = 0, |x| >= 1/beta: identity branch
        assert_eq!(spec_p0().forward(0.5), 0.5);
        assert_relative_eq!(
            spec_p05().forward(0.1),
            0.11597524126056735,
            max_relative = 1e-12
        );
    }

    #[test]
    fn apply_examples() {
        let p1 = spec_p1();
        assert_eq!(p1.apply(0.005), 0.0);
        assert_relative_eq!(p1.apply(0.5), 0.488125, max_relative = 1e-12);

        assert_relative_eq!(
            spec_p05().apply(0.1),
            0.08457111564896619,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spec_p0().apply(-0.1),
            -0.08771929824561403,
            max_relative = 1e-12
        );
        // identity branch at |x| = t_upper
        assert_eq!(spec_p05().apply(0.4), 0.4);
    }

    #[test]
    fn apply_vec_is_element_wise() {
        let s = spec_p05();
        let zero = DVector::zeros(4);
        assert_eq!(s.apply_vec(&zero), zero);

        let sub = DVector::from_row_slice(&[0.01, -0.015, 0.019, -0.0001]);
        assert_eq!(s.apply_vec(&sub), DVector::zeros(4));

        let mixed = DVector::from_row_slice(&[0.0, 0.1, -0.1, 0.5, -0.003]);
        let out = s.apply_vec(&mixed);
        for (o, x) in out.iter().zip(mixed.iter()) {
            assert_eq!(*o, s.apply(*x));
        }
        for (i, o) in out.iter().enumerate() {
            assert_eq!(*o != 0.0, mixed[i].abs() > s.t_lower());
        }
    }

    #[test]
    fn ill_posed_combinations_rejected() {
        // p = 0 with alpha^2 gamma beta^2 / sigma^2 >= 1
        let err = ThresholdSpec::new(0.0, 1.0, 1.0, 1.0, 0.2, 5.0).unwrap_err();
        assert!(matches!(err, Error::IllPosedThreshold(_)));
        assert!(err.to_string().contains("slope_den"));
        // 0 < p < 1 with a huge gamma
        assert!(matches!(
            ThresholdSpec::new(0.5, 1.0, 0.01, 10.0, 0.2, 5.0),
            Err(Error::IllPosedThreshold(_))
        ));
    }

    #[test]
    fn gamma_zero_is_identity() {
        for p in [0.0, 0.5, 1.0] {
            let s = ThresholdSpec::new(p, 0.25, 1.0, 0.0, 0.2, 5.0).unwrap();
            assert_eq!(s.t_lower(), 0.0);
            assert_eq!(s.slope_den(), 1.0);
            for x in [-2.0, -0.1, 0.0, 1e-6, 0.3, 5.0] {
                assert_eq!(s.apply(x), x);
            }
        }
    }

    #[test]
    fn p1_matches_plus_operator_everywhere() {
        let s = spec_p1();
        let thr = s.t_lower();
        let mut x = -1.0;
        while x <= 1.0 {
            let direct = sgn(x) * (x.abs() - thr).max(0.0);
            assert_eq!(s.apply(x), direct, "x = {x}");
            x += 0.001;
        }
    }

    #[test]
    fn near_inverse_on_exactly_invertible_regimes() {
        // p = 1 and p = 0 forward maps are piecewise linear; apply inverts
        // them exactly on every branch.
        for s in [spec_p1(), spec_p0()] {
            let mut x = -0.6;
            while x <= 0.6 {
                let y = s.forward(x);
                let back = s.apply(y);
                assert_relative_eq!(back, x, max_relative = 1e-12, epsilon = 1e-15);
                x += 0.0017;
            }
        }
        // 0 < p < 1 keeps the exact nonlinear term inside the middle region,
        // so only the identity tail and the origin invert exactly.
        let s = spec_p05();
        assert_eq!(s.apply(s.forward(0.0)), 0.0);
        for x in [0.4, -0.5, 1.0, -2.0] {
            assert_eq!(s.apply(s.forward(x)), x);
        }
    }

    #[test]
    fn continuity_at_breakpoints() {
        for s in [spec_p05(), spec_p0()] {
            // middle branch evaluated at the breakpoints
            let at_lower = (s.t_lower() - s.t_lower()) / s.slope_den();
            assert_eq!(at_lower, 0.0);
            let at_upper = (s.t_upper() - s.t_lower()) / s.slope_den();
            assert_relative_eq!(at_upper, s.t_upper(), max_relative = 1e-12);
        }
    }

    #[test]
    fn regime_p_to_zero_attraction_range_converges() {
        // With delta = 1/beta, t_upper of the 0 < p < 1 spec converges to the
        // p = 0 value 1/beta. The other breakpoints do not converge (the
        // p-norm-like subgradient vanishes pointwise as p -> 0), so only the
        // attraction range is asserted here.
        let beta = 5.0;
        let delta = 1.0 / beta;
        let p0 = ThresholdSpec::new(0.0, 0.25, 1.0, 0.07, delta, beta).unwrap();
        let near0 = ThresholdSpec::new(1e-6, 0.25, 1.0, 0.07, delta, beta).unwrap();
        assert_relative_eq!(near0.t_upper(), p0.t_upper(), max_relative = 1e-4);
    }

    proptest! {
        #[test]
        fn apply_is_odd_monotone_and_shrinking(
            p_idx in 0usize..5,
            alpha_frac in 0.05f64..0.5,
            gamma in 0.0f64..0.3,
            delta in 0.05f64..0.5,
            beta in 1.0f64..10.0,
            xs in proptest::collection::vec(-3.0f64..3.0, 2..40),
        ) {
            let p = [0.0, 0.3, 0.5, 0.8, 1.0][p_idx];
            let sigma2: f64 = 0.5;
            let alpha = alpha_frac * sigma2.sqrt();
            let spec = match ThresholdSpec::new(p, alpha, sigma2, gamma, delta, beta) {
                Ok(s) => s,
                Err(Error::IllPosedThreshold(_)) => return Ok(()),
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            };
            let mut xs = xs;
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut prev = f64::NEG_INFINITY;
            for &x in &xs {
                let y = spec.apply(x);
                // odd
                prop_assert_eq!(spec.apply(-x), -y);
                // shrinkage
                prop_assert!(y.abs() <= x.abs() + 1e-15);
                // monotone nondecreasing
                prop_assert!(y >= prev);
                prev = y;
            }
        }
    }
}
