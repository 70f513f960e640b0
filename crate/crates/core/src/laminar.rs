//! Laminar (flat-surface, shear) solutions `psi_0(s) = mu cos(theta_0 (s - 1) + lambda)`
//! and the constants they induce.

use serde::{Deserialize, Serialize};

use crate::dispersion::Params;

/// A laminar flow and its Bernoulli constant and streamfunction boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaminarFlow {
    pub params: Params,
    /// Bernoulli constant `mu^2 theta_0^2 sin^2(lambda) / 2`.
    #[serde(rename = "Q")]
    pub q: f64,
    /// Streamfunction on the bed.
    pub m0: f64,
    /// Streamfunction on the surface.
    pub m1: f64,
}

pub fn laminar_constants(params: &Params) -> LaminarFlow {
    let th0 = params.theta0();
    let s = params.lambda.sin();
    LaminarFlow {
        params: *params,
        q: 0.5 * params.mu * params.mu * th0 * th0 * s * s,
        m0: params.mu * (params.lambda - th0).cos(),
        m1: params.mu * params.lambda.cos(),
    }
}

impl LaminarFlow {
    fn phase(&self, s: f64) -> f64 {
        self.params.theta0() * (s - 1.0) + self.params.lambda
    }

    pub fn psi0(&self, s: f64) -> f64 {
        self.params.mu * self.phase(s).cos()
    }

    pub fn psi0_s(&self, s: f64) -> f64 {
        -self.params.mu * self.params.theta0() * self.phase(s).sin()
    }

    /// Equals `alpha * psi0(s)`.
    pub fn psi0_ss(&self, s: f64) -> f64 {
        let th0 = self.params.theta0();
        -self.params.mu * th0 * th0 * self.phase(s).cos()
    }
}

/// Shorthand for `laminar_constants(params).psi0(s)`.
pub fn psi0(params: &Params, s: f64) -> f64 {
    laminar_constants(params).psi0(s)
}
