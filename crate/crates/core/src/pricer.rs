//! Damped Fourier inversion for calls and puts on forwards.
//!
//! For damping `ν` (`ν > 1` calls, `ν < 0` puts) the price is
//! `(1/π) ∫_0^{λ_max} Re[g(λ) · MGF(ν + iλ)] dλ` with
//! `g(λ) = K^{-(ν-1+iλ)} / ((ν+iλ)(ν-1+iλ))`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, CurveFn};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::riccati_jump::{JumpModelParams, JumpRiccati, StripPoint};
use crate::riccati_wishart::{default_steps, CMatrix, WishartModelParams, WishartRiccati};

/// Absolute threshold below which negative Fourier prices are clipped to zero.
pub const NEGATIVE_CLIP: f64 = 1e-8;
/// Exercise times below this raise the instability warning.
pub const SHORT_MATURITY: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn default_nu(self) -> f64 {
        match self {
            OptionKind::Call => 2.0,
            OptionKind::Put => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    /// Exercise time `T_0`.
    pub t0: f64,
    /// Delivery lag `ϑ = T_1 − T_0`.
    pub theta: f64,
    pub strike: f64,
    pub kind: OptionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Levy(JumpModelParams),
    Bns(JumpModelParams),
    Wishart { params: WishartModelParams, steps: Option<usize> },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Levy(_) => "levy",
            ModelSpec::Bns(_) => "bns",
            ModelSpec::Wishart { .. } => "wishart",
        }
    }

    /// Truncation rank `N`.
    pub fn rank(&self) -> usize {
        match self {
            ModelSpec::Levy(p) | ModelSpec::Bns(p) => p.n(),
            ModelSpec::Wishart { params, .. } => params.rank(),
        }
    }

    /// The model restricted to its first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Ok(match self {
            ModelSpec::Levy(p) => ModelSpec::Levy(p.truncated(n)?),
            ModelSpec::Bns(p) => ModelSpec::Bns(p.truncated(n)?),
            ModelSpec::Wishart { params, steps } => {
                if n == 0 || n > params.rank() {
                    return Err(Error::invalid(
                        "N",
                        format!("must be in 1..={}, got {n}", params.rank()),
                    ));
                }
                let mut q = params.clone();
                q.q_coeffs.truncate(n);
                q.a_coeffs.truncate(n);
                q.d_coeffs.truncate(n);
                q.y0_eigs.truncate(n);
                ModelSpec::Wishart { params: q, steps: *steps }
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Levy(p) => {
                p.validate()?;
                if !p.is_levy() {
                    return Err(Error::invalid("a_coeffs", "the Lévy model requires all a_n = 0"));
                }
                Ok(())
            }
            ModelSpec::Bns(p) => p.validate(),
            ModelSpec::Wishart { params, steps } => {
                if *steps == Some(0) {
                    return Err(Error::invalid("steps", "must be at least 1"));
                }
                params.validate()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierGrid {
    pub lambda_max: f64,
    pub lambda_nodes: usize,
    pub panels: usize,
}

impl Default for FourierGrid {
    fn default() -> Self {
        Self { lambda_max: 200.0, lambda_nodes: 2048, panels: 32 }
    }
}

impl FourierGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_max > 0.0 && self.lambda_max.is_finite()) {
            return Err(Error::invalid(
                "lambda_max",
                format!("must be positive, got {}", self.lambda_max),
            ));
        }
        if self.panels == 0 || self.lambda_nodes < 2 * self.panels || !self.lambda_nodes.is_multiple_of(self.panels) {
            return Err(Error::invalid(
                "lambda_nodes",
                format!(
                    "must be a multiple of the panel count {} with at least two nodes per panel, got {}",
                    self.panels, self.lambda_nodes
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingRequest {
    pub model: ModelSpec,
    pub option: OptionSpec,
    /// Damping; `None` picks +2 for calls and −1 for puts.
    pub nu: Option<f64>,
    pub grid: FourierGrid,
}

impl PricingRequest {
    pub fn new(model: ModelSpec, option: OptionSpec) -> Self {
        Self { model, option, nu: None, grid: FourierGrid::default() }
    }

    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or_else(|| self.option.kind.default_nu())
    }

    pub fn validate(&self) -> Result<()> {
        let o = &self.option;
        if !(o.strike > 0.0 && o.strike.is_finite()) {
            return Err(Error::invalid("strike", format!("must be positive, got {}", o.strike)));
        }
        if !(o.t0 >= 0.0 && o.t0.is_finite()) {
            return Err(Error::invalid("t0", format!("must be nonnegative, got {}", o.t0)));
        }
        if !(o.theta >= 0.0 && o.theta.is_finite()) {
            return Err(Error::invalid("theta", format!("must be nonnegative, got {}", o.theta)));
        }
        let nu = self.nu();
        if nu == 0.0 || nu == 1.0 {
            return Err(Error::Pole { nu });
        }
        match o.kind {
            OptionKind::Call if !(nu > 1.0) => {
                return Err(Error::invalid("nu", format!("calls need nu > 1, got {nu}")))
            }
            OptionKind::Put if !(nu < 0.0) => {
                return Err(Error::invalid("nu", format!("puts need nu < 0, got {nu}")))
            }
            _ => {}
        }
        self.grid.validate()?;
        self.model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceResult {
    pub price: f64,
    /// `|g(λ_max) · MGF(ν + iλ_max)|`.
    pub integrand_tail: f64,
    /// `|C − P − (F(0,T_1) − K)|` when both legs were priced.
    pub parity_gap: Option<f64>,
    pub n_evals: usize,
    pub instability_warning: bool,
}

/// `g(λ) = K^{-(ν-1+iλ)} / ((ν+iλ)(ν-1+iλ))`.
pub fn payoff_transform(lambda: f64, nu: f64, strike: f64) -> Result<Complex64> {
    if nu == 0.0 || nu == 1.0 {
        return Err(Error::Pole { nu });
    }
    if !(strike > 0.0) {
        return Err(Error::invalid("strike", format!("must be positive, got {strike}")));
    }
    let z = Complex64::new(nu - 1.0, lambda);
    let num = (-z * strike.ln()).exp();
    Ok(num / (Complex64::new(nu, lambda) * z))
}

/// The affine exponent `−φ + ⟨X_0,ψ₁⟩ − ⟨Y_0,ψ₂⟩` as a function of `u`, with
/// all `u`-independent work done up front.
pub enum Exponent {
    Jump(JumpRiccati),
    Wishart { riccati: WishartRiccati, u2: CMatrix },
}

impl Exponent {
    pub fn new(
        basis: &BasisSystem,
        curve: &dyn CurveFn,
        model: &ModelSpec,
        theta: f64,
        t: f64,
    ) -> Result<Self> {
        match model {
            ModelSpec::Levy(p) | ModelSpec::Bns(p) => {
                Ok(Exponent::Jump(JumpRiccati::new(basis, p, curve, theta, t)?))
            }
            ModelSpec::Wishart { params, steps } => {
                let steps = steps.unwrap_or_else(|| default_steps(t));
                let riccati = WishartRiccati::new(basis, params, curve, theta, t, steps)?;
                let n = params.rank();
                Ok(Exponent::Wishart { riccati, u2: CMatrix::zeros(n, n) })
            }
        }
    }

    pub fn at(&self, u: Complex64) -> Result<Complex64> {
        match self {
            Exponent::Jump(r) => Ok(r.evaluate(u.re, u.im).exponent()),
            Exponent::Wishart { riccati, u2 } => riccati.exponent(u, u2),
        }
    }

    pub fn mgf(&self, u: Complex64) -> Result<Complex64> {
        Ok(self.at(u)?.exp())
    }
}

/// `E[exp(⟨X_t, u₁⟩ − ⟨Y_t, u₂⟩)]` at `u₁ = (ν+iλ) u_ϑ`, `u₂ = 0`.
pub fn mgf(basis: &BasisSystem, curve: &dyn CurveFn, model: &ModelSpec, p: &StripPoint) -> Result<Complex64> {
    model.validate()?;
    Exponent::new(basis, curve, model, p.theta, p.t)?.mgf(p.u())
}

struct RawIntegral {
    value: f64,
    tail: f64,
    n_evals: usize,
}

fn fourier_integral(exponent: &Exponent, nu: f64, strike: f64, grid: &FourierGrid) -> Result<RawIntegral> {
    let per_panel = grid.lambda_nodes / grid.panels;
    let rule = GaussLegendre::new(per_panel);
    let width = grid.lambda_max / grid.panels as f64;
    let nodes: Vec<(usize, f64, f64)> = (0..grid.panels)
        .flat_map(|p| {
            let lo = p as f64 * width;
            rule.mapped(lo, lo + width).map(move |(x, w)| (p, x, w)).collect::<Vec<_>>()
        })
        .collect();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|&(_, lambda, w)| {
            let g = payoff_transform(lambda, nu, strike)?;
            let e = exponent.mgf(Complex64::new(nu, lambda))?;
            Ok(w * (g * e).re)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut panel_sums = vec![0.0; grid.panels];
    for (&(p, _, _), v) in nodes.iter().zip(&values) {
        panel_sums[p] += v;
    }
    let total: f64 = panel_sums.iter().sum();
    if !total.is_finite() {
        return Err(Error::Divergence(format!(
            "non-finite integrand for nu = {nu}; the damping may lie outside the admissible strip"
        )));
    }
    // Compare the absolute mass of the last quarter of panels with the quarter
    // before it; oscillating but decaying tails pass, growing ones do not.
    let q = (grid.panels / 4).max(1);
    if grid.panels >= 2 * q {
        let mass = |r: std::ops::Range<usize>| panel_sums[r].iter().map(|v| v.abs()).sum::<f64>();
        let last = mass(grid.panels - q..grid.panels);
        let prev = mass(grid.panels - 2 * q..grid.panels - q);
        if last > prev && last > 1e-8 {
            return Err(Error::Divergence(format!(
                "tail panel mass grows ({prev:e} -> {last:e}) for nu = {nu}"
            )));
        }
    }
    let g = payoff_transform(grid.lambda_max, nu, strike)?;
    let tail = (g * exponent.mgf(Complex64::new(nu, grid.lambda_max))?).norm();
    Ok(RawIntegral { value: total / std::f64::consts::PI, tail, n_evals: nodes.len() + 1 })
}

fn clip(raw: f64) -> Result<f64> {
    if raw >= 0.0 {
        Ok(raw)
    } else if raw >= -NEGATIVE_CLIP {
        Ok(0.0)
    } else {
        Err(Error::NegativePrice { price: raw })
    }
}

fn price_with(exponent: &Exponent, req: &PricingRequest) -> Result<PriceResult> {
    let raw = fourier_integral(exponent, req.nu(), req.option.strike, &req.grid)?;
    Ok(PriceResult {
        price: clip(raw.value)?,
        integrand_tail: raw.tail,
        parity_gap: None,
        n_evals: raw.n_evals,
        instability_warning: req.option.t0 < SHORT_MATURITY,
    })
}

/// Prices a single call or put.
pub fn price_option(basis: &BasisSystem, curve: &dyn CurveFn, req: &PricingRequest) -> Result<PriceResult> {
    req.validate()?;
    let exponent = Exponent::new(basis, curve, &req.model, req.option.theta, req.option.t0)?;
    price_with(&exponent, req)
}

/// Prices the requested option and its parity partner (default damping), and
/// fills `parity_gap`.
pub fn price_with_parity(
    basis: &BasisSystem,
    curve: &dyn CurveFn,
    req: &PricingRequest,
) -> Result<PriceResult> {
    req.validate()?;
    let exponent = Exponent::new(basis, curve, &req.model, req.option.theta, req.option.t0)?;
    let mut main = price_with(&exponent, req)?;
    let mut other = req.clone();
    other.option.kind = match req.option.kind {
        OptionKind::Call => OptionKind::Put,
        OptionKind::Put => OptionKind::Call,
    };
    other.nu = None;
    // The partner only feeds the diagnostic, so it is used unclipped: a small
    // negative value shows up in the gap instead of failing the main price.
    let partner = fourier_integral(&exponent, other.nu(), other.option.strike, &other.grid)?;
    let (call, put) = match req.option.kind {
        OptionKind::Call => (main.price, partner.value),
        OptionKind::Put => (partner.value, main.price),
    };
    let forward = curve.value(req.option.t0 + req.option.theta).exp();
    main.parity_gap = Some((call - put - (forward - req.option.strike)).abs());
    main.n_evals += partner.n_evals;
    Ok(main)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Theta,
    Beta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub sweep: SweepKind,
    pub sweep_values: Vec<f64>,
    pub n_list: Vec<usize>,
    pub baseline_n: usize,
    /// `cells[i][j]`: relative difference in percent for `n_list[i]`, `sweep_values[j]`.
    pub cells: Vec<Vec<f64>>,
    /// Messages for cells that failed (stored as NaN).
    pub failures: Vec<String>,
}

/// Rounds half away from zero to two decimals, tolerating binary representation noise.
pub fn round_half_up_2(x: f64) -> f64 {
    let scaled = x * 100.0;
    let r = (scaled.abs() + 0.5 + 1e-9).floor();
    r.copysign(scaled) / 100.0
}

impl ConvergenceTable {
    /// Long-format CSV: `sweep_value,N,rel_diff_percent`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep_value,N,rel_diff_percent\n");
        for (j, s) in self.sweep_values.iter().enumerate() {
            for (i, n) in self.n_list.iter().enumerate() {
                let v = self.cells[i][j];
                let cell = if v.is_finite() { format!("{:.2}", round_half_up_2(v)) } else { "NaN".into() };
                out.push_str(&format!("{s},{n},{cell}\n"));
            }
        }
        out
    }

    /// The cell for `(n, sweep value)`, if present.
    pub fn cell(&self, n: usize, sweep_value: f64) -> Option<f64> {
        let i = self.n_list.iter().position(|&m| m == n)?;
        let j = self.sweep_values.iter().position(|&s| s == sweep_value)?;
        Some(self.cells[i][j])
    }
}

fn with_sweep(template: &PricingRequest, sweep: SweepKind, value: f64) -> Result<PricingRequest> {
    let mut req = template.clone();
    match sweep {
        SweepKind::Theta => req.option.theta = value,
        SweepKind::Beta => match &mut req.model {
            ModelSpec::Levy(p) | ModelSpec::Bns(p) => p.beta = value,
            ModelSpec::Wishart { .. } => {
                return Err(Error::invalid("sweep", "the Wishart model has no jump intensity beta"))
            }
        },
    }
    Ok(req)
}

/// Relative price differences `|P(N) − P(N_base)| / P(N_base)` in percent, with
/// `N_base = max(n_list)`.
pub fn convergence_table(
    basis: &BasisSystem,
    curve: &dyn CurveFn,
    template: &PricingRequest,
    n_list: &[usize],
    sweep: SweepKind,
    sweep_values: &[f64],
) -> Result<ConvergenceTable> {
    let baseline_n = *n_list
        .iter()
        .max()
        .ok_or_else(|| Error::invalid("N", "list must not be empty"))?;
    if sweep_values.is_empty() {
        return Err(Error::invalid("sweep", "at least one sweep value is required"));
    }
    // Fail fast on structural problems; numerical failures become NaN cells.
    with_sweep(template, sweep, sweep_values[0])?;
    template.model.truncated(baseline_n)?;
    let mut cells = vec![vec![f64::NAN; sweep_values.len()]; n_list.len()];
    let mut failures = Vec::new();
    for (j, &v) in sweep_values.iter().enumerate() {
        let base_req = with_sweep(template, sweep, v)?;
        let price_n = |n: usize| -> Result<f64> {
            let mut r = base_req.clone();
            r.model = base_req.model.truncated(n)?;
            Ok(price_option(basis, curve, &r)?.price)
        };
        let base = match price_n(baseline_n) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("{sweep:?}={v}, N={baseline_n}: {e}"));
                continue;
            }
        };
        for (i, &n) in n_list.iter().enumerate() {
            match price_n(n) {
                Ok(p) => cells[i][j] = (p - base).abs() / base * 100.0,
                Err(e) => failures.push(format!("{sweep:?}={v}, N={n}: {e}")),
            }
        }
    }
    Ok(ConvergenceTable {
        sweep,
        sweep_values: sweep_values.to_vec(),
        n_list: n_list.to_vec(),
        baseline_n,
        cells,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn transform_unit_strike() {
        let g = payoff_transform(0.7, 2.5, 1.0).unwrap();
        let want = 1.0 / (Complex64::new(2.5, 0.7) * Complex64::new(1.5, 0.7));
        assert!((g - want).norm() < 1e-15);
    }

    #[test]
    fn transform_at_e() {
        let g = payoff_transform(0.0, 2.0, std::f64::consts::E).unwrap();
        assert_abs_diff_eq!(g.re, (-1.0f64).exp() / 2.0, epsilon = 1e-15);
        assert_eq!(g.im, 0.0);
    }

    #[test]
    fn transform_poles() {
        assert_eq!(payoff_transform(1.0, 0.0, 1.0), Err(Error::Pole { nu: 0.0 }));
        assert_eq!(payoff_transform(1.0, 1.0, 1.0), Err(Error::Pole { nu: 1.0 }));
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up_2(0.625), 0.63);
        assert_eq!(round_half_up_2(0.004999), 0.0);
        assert_eq!(round_half_up_2(0.005), 0.01);
        assert_eq!(round_half_up_2(1.455), 1.46);
    }

    #[test]
    fn request_validation() {
        let opt = OptionSpec { t0: 1.0, theta: 1.0, strike: 1.0, kind: OptionKind::Call };
        let mut req = PricingRequest::new(ModelSpec::Levy(JumpModelParams::levy(3, 1.0)), opt);
        assert!(req.validate().is_ok());
        req.nu = Some(1.0);
        assert_eq!(req.validate(), Err(Error::Pole { nu: 1.0 }));
        req.nu = Some(0.5);
        assert!(req.validate().unwrap_err().is_validation());
        req.nu = None;
        req.option.strike = 0.0;
        assert!(req.validate().is_err());
        req.option.strike = 1.0;
        req.grid.lambda_nodes = 100;
        assert!(req.validate().is_err());
        req.grid = FourierGrid::default();
        req.model = ModelSpec::Levy(JumpModelParams::bns(3, 1.0));
        assert!(req.validate().is_err());
    }
}
