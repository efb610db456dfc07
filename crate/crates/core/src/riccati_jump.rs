//! Closed-form Riccati solutions for the pure-jump Lévy and BNS models.
//!
//! All operators are diagonal in the basis, so `ψ₂(s, u)` is described by its
//! diagonal entries
//!
//! `⟨f_n, ψ₂(s,u) f_n⟩ = −½u² d_n Q_n(s) − σ u d_n K_n(s)`
//!
//! with `Q_n(s) = ∫_0^s e^{-2a_n(s-r)} f_n(r+ϑ)² dr`,
//! `K_n(s) = ∫_0^s e^{-2a_n(s-r)} f_n(r+ϑ) κ_n(r) dr` and `u = ν + iλ`.
//! The pair `(σ, κ)` is fixed by the [`DriftConvention`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, CurveFn};
use crate::curve::DriftCurve;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Node count of the time quadratures (outer `φ` integral and inner mode integrals).
pub const TIME_NODES: usize = 64;

/// How the HJM drift term enters the volatility Riccati equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftConvention {
    /// `Υ = −½ S*(ϑ+r) h_0` along the flow; for `h_0 ≡ 1` the forward price is
    /// an exact martingale and put–call parity holds.
    #[default]
    Martingale,
    /// Drift frozen at `c_n(ϑ)` with weight `+1`.
    FixedLag,
    /// No drift term.
    None,
}

impl DriftConvention {
    /// Weight `σ` multiplying `u·d_n·K_n`.
    pub fn sigma(self) -> f64 {
        match self {
            DriftConvention::Martingale => -0.5,
            DriftConvention::FixedLag => 1.0,
            DriftConvention::None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpModelParams {
    pub beta: f64,
    pub d_coeffs: Vec<f64>,
    /// Mean-reversion rates; all zero gives the Lévy model.
    pub a_coeffs: Vec<f64>,
    pub y0_coeffs: Vec<f64>,
    #[serde(default)]
    pub h0: DriftCurve,
    #[serde(default)]
    pub drift: DriftConvention,
}

impl JumpModelParams {
    /// Lévy model with `d_n = 1/(2n²)` and `Y_0 = D`.
    pub fn levy(n: usize, beta: f64) -> Self {
        let d: Vec<f64> = (1..=n).map(|k| 0.5 / (k * k) as f64).collect();
        Self {
            beta,
            a_coeffs: vec![0.0; n],
            y0_coeffs: d.clone(),
            d_coeffs: d,
            h0: DriftCurve::default(),
            drift: DriftConvention::default(),
        }
    }

    /// BNS model with `d_n = a_n = 1/(2n²)` and `Y_0 = D`.
    pub fn bns(n: usize, beta: f64) -> Self {
        let mut p = Self::levy(n, beta);
        p.a_coeffs = p.d_coeffs.clone();
        p
    }

    pub fn with_drift(mut self, drift: DriftConvention) -> Self {
        self.drift = drift;
        self
    }

    /// Truncation rank `N`.
    pub fn n(&self) -> usize {
        self.d_coeffs.len()
    }

    pub fn is_levy(&self) -> bool {
        self.a_coeffs.iter().all(|&a| a == 0.0)
    }

    /// Keeps the first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::invalid("N", format!("must be in 1..={}, got {n}", self.n())));
        }
        let mut p = self.clone();
        p.d_coeffs.truncate(n);
        p.a_coeffs.truncate(n);
        p.y0_coeffs.truncate(n);
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", format!("must be positive, got {}", self.beta)));
        }
        let n = self.n();
        if n == 0 {
            return Err(Error::invalid("N", "at least one mode is required"));
        }
        if self.a_coeffs.len() != n || self.y0_coeffs.len() != n {
            return Err(Error::invalid(
                "a_coeffs/y0_coeffs",
                format!(
                    "lengths {} and {} must match d_coeffs length {n}",
                    self.a_coeffs.len(),
                    self.y0_coeffs.len()
                ),
            ));
        }
        if let Some(d) = self.d_coeffs.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("d_coeffs", format!("entries must be positive, got {d}")));
        }
        if let Some(a) = self.a_coeffs.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(Error::invalid("a_coeffs", format!("entries must be nonnegative, got {a}")));
        }
        if let Some(y) = self.y0_coeffs.iter().find(|y| !(**y >= 0.0 && y.is_finite())) {
            return Err(Error::invalid("y0_coeffs", format!("entries must be nonnegative, got {y}")));
        }
        if let DriftCurve::NelsonSiegel(c) = &self.h0 {
            c.validate()?;
        }
        Ok(())
    }
}

/// A point `(ν, λ, ϑ, t)` on the Fourier strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPoint {
    pub nu: f64,
    pub lambda: f64,
    pub theta: f64,
    pub t: f64,
}

impl StripPoint {
    pub fn new(nu: f64, lambda: f64, theta: f64, t: f64) -> Self {
        Self { nu, lambda, theta, t }
    }

    /// `ν + iλ`.
    pub fn u(&self) -> Complex64 {
        Complex64::new(self.nu, self.lambda)
    }
}

/// `(φ, ⟨X_0, ψ₁⟩, ⟨Y_0, ψ₂⟩)` at one strip point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiEvaluation {
    pub phi: Complex64,
    pub x_pairing: Complex64,
    pub y_pairing: Complex64,
}

impl RiccatiEvaluation {
    /// `−φ + ⟨X_0, ψ₁⟩ − ⟨Y_0, ψ₂⟩`.
    pub fn exponent(&self) -> Complex64 {
        -self.phi + self.x_pairing - self.y_pairing
    }

    pub fn mgf(&self) -> Complex64 {
        self.exponent().exp()
    }
}

/// `(ν + iλ) X_0(t + ϑ)`.
pub fn x_pairing(p: &StripPoint, x0: &dyn CurveFn) -> Complex64 {
    p.u() * x0.value(p.t + p.theta)
}

/// Per-mode integrals `(Q_n(s), K_n(s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeIntegrals {
    pub quad: Vec<f64>,
    pub lin: Vec<f64>,
}

impl ModeIntegrals {
    /// `Σ_n weight_n ⟨f_n, ψ₂ f_n⟩` written as `−½u² A − σ u B`.
    fn coefficients(&self, weights: &[f64], d: &[f64]) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for n in 0..self.quad.len() {
            a += weights[n] * d[n] * self.quad[n];
            b += weights[n] * d[n] * self.lin[n];
        }
        (a, b)
    }
}

fn pairing_value(u: Complex64, sigma: f64, a: f64, b: f64) -> Complex64 {
    -0.5 * u * u * a - sigma * u * b
}

/// Evaluates `κ_n(r)` for all modes given `f_n(ϑ+r)` in `f`.
struct DriftCoefficients<'a> {
    basis: &'a BasisSystem,
    model: &'a JumpModelParams,
    theta: f64,
    fixed: Vec<f64>,
}

impl<'a> DriftCoefficients<'a> {
    fn new(basis: &'a BasisSystem, model: &'a JumpModelParams, theta: f64) -> Result<Self> {
        let n = model.n();
        let fixed = match model.drift {
            DriftConvention::FixedLag => (1..=n)
                .map(|k| basis.c_coefficient(k, theta, &model.h0))
                .collect::<Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        Ok(Self { basis, model, theta, fixed })
    }

    fn fill(&self, r: f64, f: &[f64], out: &mut [f64]) -> Result<()> {
        match self.model.drift {
            DriftConvention::None => out.iter_mut().for_each(|v| *v = 0.0),
            DriftConvention::FixedLag => out.copy_from_slice(&self.fixed),
            DriftConvention::Martingale => {
                if let Some(c) = self.model.h0.as_constant() {
                    for (o, fv) in out.iter_mut().zip(f) {
                        *o = c * fv;
                    }
                } else {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = self.basis.c_coefficient(k + 1, self.theta + r, &self.model.h0)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_rank(basis: &BasisSystem, model: &JumpModelParams) -> Result<()> {
    model.validate()?;
    if model.n() > basis.n_max() {
        return Err(Error::invalid(
            "N",
            format!("truncation {} exceeds basis n_max {}", model.n(), basis.n_max()),
        ));
    }
    Ok(())
}

fn mode_integrals_with(
    basis: &BasisSystem,
    model: &JumpModelParams,
    drift: &DriftCoefficients<'_>,
    rule: &GaussLegendre,
    theta: f64,
    s: f64,
) -> Result<ModeIntegrals> {
    let n = model.n();
    let mut quad = vec![0.0; n];
    let mut lin = vec![0.0; n];
    if s <= 0.0 {
        return Ok(ModeIntegrals { quad, lin });
    }
    let mut f = vec![0.0; n];
    let mut kappa = vec![0.0; n];
    for (r, w) in rule.mapped(0.0, s) {
        basis.fill_f(r + theta, &mut f);
        drift.fill(r, &f, &mut kappa)?;
        for k in 0..n {
            let kern = (-2.0 * model.a_coeffs[k] * (s - r)).exp();
            quad[k] += w * kern * f[k] * f[k];
            lin[k] += w * kern * f[k] * kappa[k];
        }
    }
    Ok(ModeIntegrals { quad, lin })
}

/// `(Q_n(s), K_n(s))` for every mode, by `TIME_NODES`-point Gauss–Legendre.
pub fn mode_integrals(
    basis: &BasisSystem,
    model: &JumpModelParams,
    theta: f64,
    s: f64,
) -> Result<ModeIntegrals> {
    check_rank(basis, model)?;
    let drift = DriftCoefficients::new(basis, model, theta)?;
    mode_integrals_with(basis, model, &drift, &GaussLegendre::new(TIME_NODES), theta, s)
}

/// λ-independent data for all Riccati evaluations at fixed `(ϑ, t)`.
#[derive(Debug, Clone)]
pub struct JumpRiccati {
    t: f64,
    theta: f64,
    beta: f64,
    sigma: f64,
    outer_weights: Vec<f64>,
    d_a: Vec<f64>,
    d_b: Vec<f64>,
    y_a: f64,
    y_b: f64,
    x0: f64,
}

impl JumpRiccati {
    pub fn new(
        basis: &BasisSystem,
        model: &JumpModelParams,
        x0: &dyn CurveFn,
        theta: f64,
        t: f64,
    ) -> Result<Self> {
        check_rank(basis, model)?;
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::invalid("theta", format!("must be nonnegative, got {theta}")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("must be nonnegative, got {t}")));
        }
        let rule = GaussLegendre::new(TIME_NODES);
        let drift = DriftCoefficients::new(basis, model, theta)?;
        let mut outer_weights = Vec::with_capacity(TIME_NODES);
        let mut d_a = Vec::with_capacity(TIME_NODES);
        let mut d_b = Vec::with_capacity(TIME_NODES);
        if t > 0.0 {
            for (s, w) in rule.mapped(0.0, t) {
                let m = mode_integrals_with(basis, model, &drift, &rule, theta, s)?;
                let (a, b) = m.coefficients(&model.d_coeffs, &model.d_coeffs);
                outer_weights.push(w);
                d_a.push(a);
                d_b.push(b);
            }
        }
        let m = mode_integrals_with(basis, model, &drift, &rule, theta, t)?;
        let (y_a, y_b) = m.coefficients(&model.y0_coeffs, &model.d_coeffs);
        Ok(Self {
            t,
            theta,
            beta: model.beta,
            sigma: model.drift.sigma(),
            outer_weights,
            d_a,
            d_b,
            y_a,
            y_b,
            x0: x0.value(t + theta),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `φ(t, u) = β ∫_0^t (1 − e^{-⟨D, ψ₂(s,u)⟩}) ds`.
    pub fn phi(&self, u: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.outer_weights.len() {
            let dp = pairing_value(u, self.sigma, self.d_a[j], self.d_b[j]);
            acc += self.outer_weights[j] * (1.0 - (-dp).exp());
        }
        self.beta * acc
    }

    /// `⟨Y_0, ψ₂(t, u)⟩`.
    pub fn y_pairing(&self, u: Complex64) -> Complex64 {
        pairing_value(u, self.sigma, self.y_a, self.y_b)
    }

    pub fn evaluate(&self, nu: f64, lambda: f64) -> RiccatiEvaluation {
        let u = Complex64::new(nu, lambda);
        RiccatiEvaluation { phi: self.phi(u), x_pairing: u * self.x0, y_pairing: self.y_pairing(u) }
    }
}

fn require_levy(model: &JumpModelParams) -> Result<()> {
    if model.is_levy() {
        Ok(())
    } else {
        Err(Error::invalid("a_coeffs", "the Lévy model requires all a_n = 0"))
    }
}

fn d_psi2_pairing(
    basis: &BasisSystem,
    p: &StripPoint,
    model: &JumpModelParams,
    s: f64,
) -> Result<Complex64> {
    let m = mode_integrals(basis, model, p.theta, s)?;
    let (a, b) = m.coefficients(&model.d_coeffs, &model.d_coeffs);
    Ok(pairing_value(p.u(), model.drift.sigma(), a, b))
}

fn y_pairing(basis: &BasisSystem, p: &StripPoint, model: &JumpModelParams) -> Result<Complex64> {
    let m = mode_integrals(basis, model, p.theta, p.t)?;
    let (a, b) = m.coefficients(&model.y0_coeffs, &model.d_coeffs);
    Ok(pairing_value(p.u(), model.drift.sigma(), a, b))
}

/// `⟨D, ψ₂(s, u)⟩` for the Lévy model.
pub fn d_psi2_pairing_levy(
    basis: &BasisSystem,
    p: &StripPoint,
    model: &JumpModelParams,
    s: f64,
) -> Result<Complex64> {
    require_levy(model)?;
    d_psi2_pairing(basis, p, model, s)
}

/// `⟨D, ψ₂(t, u)⟩` for the BNS model; each mode carries its own `e^{-2a_n(t-s)}` kernel.
pub fn d_psi2_pairing_bns(
    basis: &BasisSystem,
    p: &StripPoint,
    model: &JumpModelParams,
    t: f64,
) -> Result<Complex64> {
    d_psi2_pairing(basis, p, model, t)
}

/// `⟨Y_0, ψ₂(t, u)⟩` for the Lévy model.
pub fn y_pairing_levy(basis: &BasisSystem, p: &StripPoint, model: &JumpModelParams) -> Result<Complex64> {
    require_levy(model)?;
    y_pairing(basis, p, model)
}

/// `⟨Y_0, ψ₂(t, u)⟩` for the BNS model.
pub fn y_pairing_bns(basis: &BasisSystem, p: &StripPoint, model: &JumpModelParams) -> Result<Complex64> {
    y_pairing(basis, p, model)
}

/// `φ(t, u)` for the Lévy model.
pub fn phi_levy(basis: &BasisSystem, p: &StripPoint, model: &JumpModelParams) -> Result<Complex64> {
    require_levy(model)?;
    phi_bns(basis, p, model)
}

/// `φ(t, u)` for the BNS model.
pub fn phi_bns(basis: &BasisSystem, p: &StripPoint, model: &JumpModelParams) -> Result<Complex64> {
    let r = JumpRiccati::new(basis, model, &crate::basis::Constant(0.0), p.theta, p.t)?;
    Ok(r.phi(p.u()))
}

/// Full Riccati triple at `p`.
pub fn evaluate(
    basis: &BasisSystem,
    p: &StripPoint,
    model: &JumpModelParams,
    x0: &dyn CurveFn,
) -> Result<RiccatiEvaluation> {
    Ok(JumpRiccati::new(basis, model, x0, p.theta, p.t)?.evaluate(p.nu, p.lambda))
}
