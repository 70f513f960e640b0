//! Scalar functions of the bifurcation analysis: the vertical frequencies
//! `theta_k = |alpha + xi k^2|^{1/2}`, the starred trigonometric functions
//! that switch between `sin`/`sinh` depending on the sign of `alpha + xi k^2`,
//! and both sides of the bifurcation condition
//!
//! ```text
//! theta_k cot*(theta_k) = 1 / (mu^2 theta_0^2 sin^2 lambda) + theta_0 cot lambda.
//! ```

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative width of the band around `alpha + xi k^2 = 0` treated as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Radius around `n * pi` (n >= 1) inside which `theta cot theta` is a pole.
pub const POLE_GUARD: f64 = 1e-9;
/// Above this `coth` is 1 to double precision.
const COTH_CUTOFF: f64 = 20.0;
/// Below this the Taylor series of `theta cot* theta` is used.
const SERIES_CUTOFF: f64 = 1e-4;

/// The parameter quadruple `(mu, alpha, lambda, xi)`: laminar amplitude,
/// vorticity coefficient, phase and squared wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub xi: f64,
}

impl Params {
    /// Builds a parameter set, rejecting anything outside
    /// `{mu != 0, alpha < 0, sin(lambda) != 0, xi > 0}`.
    pub fn new(mu: f64, alpha: f64, lambda: f64, xi: f64) -> Result<Self> {
        let p = Params { mu, alpha, lambda, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Params { mu, alpha, lambda, xi } = *self;
        if ![mu, alpha, lambda, xi].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite entry in {self:?}")));
        }
        if mu == 0.0 {
            return Err(Error::InvalidParams("mu must be nonzero".into()));
        }
        if alpha >= 0.0 {
            return Err(Error::InvalidParams(format!("alpha must be negative, got {alpha}")));
        }
        if lambda.sin().abs() < 1e-14 {
            return Err(Error::InvalidParams(format!("sin(lambda) vanishes at lambda = {lambda}")));
        }
        if xi <= 0.0 {
            return Err(Error::InvalidParams(format!("xi must be positive, got {xi}")));
        }
        Ok(())
    }

    /// `t = |alpha|`.
    pub fn t(&self) -> f64 {
        self.alpha.abs()
    }

    /// `theta_0 = |alpha|^{1/2}`.
    pub fn theta0(&self) -> f64 {
        self.alpha.abs().sqrt()
    }
}

/// Sign of `xi k^2 + alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `xi k^2 + alpha < 0`: vertical profile `sin(theta s)`.
    Trigonometric,
    /// `xi k^2 + alpha > 0`: vertical profile `sinh(theta s)`.
    Hyperbolic,
    /// `xi k^2 + alpha = 0`: vertical profile `s`.
    Degenerate,
}

impl Regime {
    /// The `+-*` sign of the starred functions.
    pub fn sign(self) -> f64 {
        match self {
            Regime::Trigonometric => -1.0,
            Regime::Hyperbolic => 1.0,
            Regime::Degenerate => 0.0,
        }
    }
}

/// `theta_k` together with the regime it was computed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub k: u32,
    pub theta: f64,
    pub regime: Regime,
}

impl ThetaValue {
    /// `theta_k` for raw `(alpha, xi)`; `alpha` may be any real here.
    pub fn from_alpha_xi(alpha: f64, xi: f64, k: u32) -> Self {
        let xk2 = xi * f64::from(k) * f64::from(k);
        let d = alpha + xk2;
        let scale = alpha.abs().max(xk2);
        let regime = if d.abs() < DEGENERATE_TOL * scale {
            Regime::Degenerate
        } else if d < 0.0 {
            Regime::Trigonometric
        } else {
            Regime::Hyperbolic
        };
        let theta = if regime == Regime::Degenerate { 0.0 } else { d.abs().sqrt() };
        ThetaValue { k, theta, regime }
    }

    /// `sin*(theta s) / theta`, read as `s` in the degenerate regime.
    pub fn profile(&self, s: f64) -> f64 {
        match self.regime {
            Regime::Degenerate => s,
            _ if self.theta == 0.0 => s,
            Regime::Trigonometric => (self.theta * s).sin() / self.theta,
            Regime::Hyperbolic => (self.theta * s).sinh() / self.theta,
        }
    }

    /// `d/ds [sin*(theta s) / theta] = cos*(theta s)`.
    pub fn profile_s(&self, s: f64) -> f64 {
        match self.regime {
            Regime::Degenerate => 1.0,
            Regime::Trigonometric => (self.theta * s).cos(),
            Regime::Hyperbolic => (self.theta * s).cosh(),
        }
    }

    /// `sin*(theta)`.
    pub fn sin_star(&self) -> f64 {
        sin_star(self.regime, self.theta)
    }

    /// `cos*(theta)`.
    pub fn cos_star(&self) -> f64 {
        cos_star(self.regime, self.theta)
    }
}

pub fn sin_star(regime: Regime, x: f64) -> f64 {
    match regime {
        Regime::Trigonometric => x.sin(),
        Regime::Hyperbolic => x.sinh(),
        Regime::Degenerate => x,
    }
}

pub fn cos_star(regime: Regime, x: f64) -> f64 {
    match regime {
        Regime::Trigonometric => x.cos(),
        Regime::Hyperbolic => x.cosh(),
        Regime::Degenerate => 1.0,
    }
}

/// `theta_k = |alpha + xi k^2|^{1/2}` with its regime.
pub fn theta(params: &Params, k: u32) -> ThetaValue {
    ThetaValue::from_alpha_xi(params.alpha, params.xi, k)
}

/// `theta cot(theta)` on the trigonometric branch.
///
/// Fails inside the pole guard around `n pi`, `n >= 1`.
pub fn theta_cot(theta: f64) -> Result<f64> {
    let n = (theta / PI).round();
    if n >= 1.0 && (theta - n * PI).abs() < POLE_GUARD {
        return Err(Error::Pole { theta });
    }
    if theta.abs() < SERIES_CUTOFF {
        let t2 = theta * theta;
        return Ok(1.0 - t2 / 3.0 - t2 * t2 / 45.0);
    }
    Ok(theta / theta.tan())
}

/// `theta coth(theta)`, evaluated without overflow.
pub fn theta_coth(theta: f64) -> f64 {
    let x = theta.abs();
    if x < SERIES_CUTOFF {
        let t2 = x * x;
        1.0 + t2 / 3.0 - t2 * t2 / 45.0
    } else if x > COTH_CUTOFF {
        x
    } else {
        x * (1.0 + 2.0 / (2.0 * x).exp_m1())
    }
}

/// `theta cot*(theta)`: `theta cot theta`, `theta coth theta`, or 1.
pub fn theta_cot_star(tv: &ThetaValue) -> Result<f64> {
    match tv.regime {
        Regime::Degenerate => Ok(1.0),
        Regime::Trigonometric => theta_cot(tv.theta),
        Regime::Hyperbolic => Ok(theta_coth(tv.theta)),
    }
}

/// Right-hand side of the bifurcation condition,
/// `1/(mu^2 theta_0^2 sin^2 lambda) + theta_0 cot lambda`.
pub fn bifurcation_rhs(params: &Params) -> f64 {
    let th0 = params.theta0();
    let s = params.lambda.sin();
    1.0 / (params.mu * params.mu * th0 * th0 * s * s) + th0 / params.lambda.tan()
}

/// `theta_k cot*(theta_k) - rhs`; zero exactly when mode `k` is in the kernel.
pub fn kernel_condition_residual(params: &Params, k: u32) -> Result<f64> {
    Ok(theta_cot_star(&theta(params, k))? - bifurcation_rhs(params))
}

/// Positive `mu` for which the bifurcation right-hand side equals `a`.
pub fn recover_mu(a: f64, theta0: f64, lambda: f64) -> Result<f64> {
    let margin = a - theta0 / lambda.tan();
    if !(margin > 0.0) {
        return Err(Error::InfeasiblePhase { margin });
    }
    Ok(1.0 / (theta0 * lambda.sin().abs() * margin.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn example() -> Params {
        Params::new(1.0, -69.9, FRAC_PI_2, 0.571).unwrap()
    }

    #[test]
    fn theta_zero_mode_of_the_example() {
        let tv = theta(&example(), 0);
        assert_eq!(tv.regime, Regime::Trigonometric);
        assert_relative_eq!(tv.theta, 69.9f64.sqrt(), max_relative = 1e-15);
        assert!((tv.theta - 8.3606).abs() < 1e-4);
    }

    #[test]
    fn theta_fifteen_is_hyperbolic() {
        let tv = theta(&example(), 15);
        assert_eq!(tv.regime, Regime::Hyperbolic);
        let expected = (0.571f64 * 225.0 - 69.9).sqrt();
        assert_relative_eq!(tv.theta, expected, max_relative = 1e-14);
        assert!((tv.theta - 7.654).abs() < 1e-3);
        assert_relative_eq!(tv.theta * tv.theta, (0.571 * 225.0 - 69.9f64).abs(), max_relative = 1e-12);
    }

    #[test]
    fn degenerate_mode() {
        for k in [1u32, 3, 7] {
            let xi = 0.37;
            let alpha = -xi * f64::from(k * k);
            let tv = ThetaValue::from_alpha_xi(alpha, xi, k);
            assert_eq!(tv.regime, Regime::Degenerate);
            assert_eq!(tv.theta, 0.0);
            assert_eq!(theta_cot_star(&tv).unwrap(), 1.0);
        }
    }

    #[test]
    fn cot_star_values() {
        let hyp = ThetaValue { k: 15, theta: 7.654, regime: Regime::Hyperbolic };
        // coth(x) = (e^{2x} + 1) / (e^{2x} - 1), evaluated from the definition
        let e = (2.0f64 * 7.654).exp();
        let oracle = 7.654 * (e + 1.0) / (e - 1.0);
        assert_relative_eq!(theta_cot_star(&hyp).unwrap(), oracle, max_relative = 1e-15);
        assert!((theta_cot_star(&hyp).unwrap() / 7.654 - 1.0) < 1e-6);

        let trig = ThetaValue { k: 1, theta: FRAC_PI_2, regime: Regime::Trigonometric };
        assert!(theta_cot_star(&trig).unwrap().abs() < 1e-15);
    }

    #[test]
    fn pole_is_reported() {
        for n in 1..5 {
            let tv = ThetaValue { k: 1, theta: n as f64 * PI + 1e-11, regime: Regime::Trigonometric };
            assert!(matches!(theta_cot_star(&tv), Err(Error::Pole { .. })));
        }
        // zero is the removable singularity, not a pole
        assert_eq!(theta_cot(0.0).unwrap(), 1.0);
    }

    #[test]
    fn coth_large_argument_does_not_overflow() {
        assert_eq!(theta_coth(800.0), 800.0);
        assert!(theta_coth(20.5).is_finite());
    }

    #[test]
    fn continuity_across_degenerate() {
        assert!((theta_cot(1e-6).unwrap() - 1.0).abs() < 1e-11);
        assert!((theta_coth(1e-6) - 1.0).abs() < 1e-11);
        // the series and closed forms agree at the switch-over point
        let x = SERIES_CUTOFF * 1.0001;
        assert_relative_eq!(theta_coth(x), x / x.tanh(), max_relative = 1e-15);
        assert_relative_eq!(theta_cot(x).unwrap(), x / x.tan(), max_relative = 1e-15);
    }

    #[test]
    fn rhs_examples() {
        let p = Params::new(1.0, -1.0, FRAC_PI_2, 1.0).unwrap();
        assert_relative_eq!(bifurcation_rhs(&p), 1.0, max_relative = 1e-15);

        let big = Params::new(1e12, -1.0, FRAC_PI_2, 1.0).unwrap();
        assert!(bifurcation_rhs(&big).abs() < 1e-15);

        for a in [0.5f64, 1.0, 7.65, 123.0] {
            let th0 = 8.3606f64;
            let mu = 1.0 / (th0 * a.sqrt());
            let p = Params::new(mu, -th0 * th0, FRAC_PI_2, 0.5).unwrap();
            assert_relative_eq!(bifurcation_rhs(&p), a, max_relative = 1e-13);
        }
    }

    #[test]
    fn recover_mu_examples() {
        let th0 = 69.9f64.sqrt();
        assert_relative_eq!(recover_mu(2.0, th0, FRAC_PI_2).unwrap(), 1.0 / (th0 * 2f64.sqrt()), max_relative = 1e-15);

        let mu = recover_mu(7.65, th0, FRAC_PI_2).unwrap();
        assert!((mu - 0.04325).abs() < 5e-5, "mu = {mu}");
        let p = Params::new(mu, -th0 * th0, FRAC_PI_2, 0.571).unwrap();
        assert_relative_eq!(bifurcation_rhs(&p), 7.65, max_relative = 1e-12);

        assert!(matches!(recover_mu(1.0, 1.0, PI / 4.0), Err(Error::InfeasiblePhase { .. })));
    }

    #[test]
    fn residual_is_zero_for_degenerate_mode_with_unit_rhs() {
        // theta_0 = 1, lambda = pi/2, mu = 1 gives rhs = 1; choose xi so that k = 2 is degenerate
        let p = Params::new(1.0, -1.0, FRAC_PI_2, 0.25).unwrap();
        assert_eq!(theta(&p, 2).regime, Regime::Degenerate);
        assert!(kernel_condition_residual(&p, 2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(Params::new(0.0, -1.0, 1.0, 1.0).is_err());
        assert!(Params::new(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(Params::new(1.0, -1.0, 0.0, 1.0).is_err());
        assert!(Params::new(1.0, -1.0, 1.0, 0.0).is_err());
        assert!(Params::new(f64::NAN, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn regime_flips_exactly_at_the_degenerate_point() {
        let xi = 0.5;
        let k = 3u32;
        let crit = -xi * 9.0;
        assert_eq!(ThetaValue::from_alpha_xi(crit * (1.0 + 1e-9), xi, k).regime, Regime::Trigonometric);
        assert_eq!(ThetaValue::from_alpha_xi(crit * (1.0 - 1e-9), xi, k).regime, Regime::Hyperbolic);
    }

    #[test]
    fn hyperbolic_branch_is_increasing_and_above_one() {
        let mut prev = 1.0;
        for i in 1..4000 {
            let th = i as f64 * 0.01;
            let v = theta_coth(th);
            assert!(v > 1.0 && v > prev, "theta = {th}");
            prev = v;
        }
    }

    #[test]
    fn trigonometric_branch_decreases_between_poles() {
        for n in 0..6 {
            let lo = n as f64 * PI;
            let mut prev = f64::INFINITY;
            for i in 1..1000 {
                let th = lo + PI * i as f64 / 1000.0;
                let v = theta_cot(th).unwrap();
                assert!(v < prev, "not decreasing at theta = {th}");
                prev = v;
            }
        }
    }
}
