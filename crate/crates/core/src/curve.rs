//! Initial log-forward curve `X_0` and the drift-generating curve `h_0`.

use serde::{Deserialize, Serialize};

use crate::basis::CurveFn;
use crate::error::{Error, Result};

/// Three-factor Nelson–Siegel curve, read as log-forwards in time to maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NelsonSiegelCurve {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub tau: f64,
}

impl Default for NelsonSiegelCurve {
    fn default() -> Self {
        Self { beta0: 0.05, beta1: -0.02, beta2: 0.01, tau: 2.0 }
    }
}

/// `(1 − e^{-z})/z` and its derivative in `z`, with series near zero.
fn loading(z: f64) -> (f64, f64) {
    if z.abs() < 1e-6 {
        (1.0 - z / 2.0 + z * z / 6.0, -0.5 + z / 3.0)
    } else {
        let e = (-z).exp();
        let l = -(-z).exp_m1() / z;
        (l, (e - l) / z)
    }
}

impl NelsonSiegelCurve {
    pub fn new(beta0: f64, beta1: f64, beta2: f64, tau: f64) -> Result<Self> {
        let c = Self { beta0, beta1, beta2, tau };
        c.validate()?;
        Ok(c)
    }

    /// Flat curve at level `beta0`.
    pub fn flat(level: f64) -> Self {
        Self { beta0: level, beta1: 0.0, beta2: 0.0, tau: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be positive, got {}", self.tau)));
        }
        for (name, v) in [("beta0", self.beta0), ("beta1", self.beta1), ("beta2", self.beta2)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// `X_0(x)`.
    pub fn log_forward(&self, x: f64) -> f64 {
        let z = x / self.tau;
        let (l, _) = loading(z);
        self.beta0 + self.beta1 * l + self.beta2 * (l - (-z).exp())
    }

    /// `F(0, T) = exp(X_0(T))`.
    pub fn forward_price(&self, t: f64) -> f64 {
        self.log_forward(t).exp()
    }
}

impl CurveFn for NelsonSiegelCurve {
    fn value(&self, x: f64) -> f64 {
        self.log_forward(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        let z = x / self.tau;
        let (_, dl) = loading(z);
        (self.beta1 * dl + self.beta2 * (dl + (-z).exp())) / self.tau
    }

    fn as_constant(&self) -> Option<f64> {
        (self.beta1 == 0.0 && self.beta2 == 0.0).then_some(self.beta0)
    }
}

/// The curve `h_0` entering the drift `Υ = −½ S*(ϑ) h_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum DriftCurve {
    Constant { value: f64 },
    NelsonSiegel(NelsonSiegelCurve),
}

impl Default for DriftCurve {
    fn default() -> Self {
        DriftCurve::Constant { value: 1.0 }
    }
}

impl CurveFn for DriftCurve {
    fn value(&self, x: f64) -> f64 {
        match self {
            DriftCurve::Constant { value } => *value,
            DriftCurve::NelsonSiegel(c) => c.value(x),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            DriftCurve::Constant { .. } => 0.0,
            DriftCurve::NelsonSiegel(c) => c.derivative(x),
        }
    }

    fn as_constant(&self) -> Option<f64> {
        match self {
            DriftCurve::Constant { value } => Some(*value),
            DriftCurve::NelsonSiegel(c) => c.as_constant(),
        }
    }
}
