//! Monte Carlo oracles for the three volatility models.
//!
//! Only the scalar `Z_s = log F(s, T_1)` is simulated. Under diagonal
//! volatility `⟨D^{1/2} Y^{1/2} dW, u_{T_1-s}⟩` is Gaussian given the
//! volatility path, with variance rate `v(s) = Σ_n d_n y_n(s) f_n(T_1−s)²`
//! (jump models) or `bᵀ(s) Y(s) b(s)` (Wishart), so each Euler step adds an
//! exact Gaussian increment with the step-integrated variance.
//!
//! Each sampling unit (a path, or an antithetic pair) draws from its own
//! ChaCha8 stream `(seed, unit)`. Units are grouped into fixed-size chunks and
//! chunk sums are reduced in order, so results do not depend on the thread count.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, CurveFn};
use crate::error::{Error, Result};
use crate::pricer::{OptionKind, OptionSpec};
use crate::quadrature::GaussLegendre;
use crate::riccati_jump::{DriftConvention, JumpModelParams};
use crate::riccati_wishart::{CMatrix, WishartModelParams};
use crate::curve::DriftCurve;

const CHUNK: usize = 256;
const STEP_NODES: usize = 8;
/// Eigenvalues below `−PSD_TOL` count as a clipping event.
pub const PSD_TOL: f64 = 1e-8;
/// Largest tolerated share of clipped Wishart steps.
pub const MAX_CLIP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    #[serde(default = "yes")]
    pub antithetic: bool,
    /// Project the Wishart state onto the PSD cone after each step.
    #[serde(default = "yes")]
    pub clip_psd: bool,
}

fn yes() -> bool {
    true
}

impl McConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self { n_paths, n_steps, seed, antithetic: true, clip_psd: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(Error::invalid("n_paths", format!("must be at least 100, got {}", self.n_paths)));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::invalid(
                "n_paths",
                format!("must be even with antithetic sampling, got {}", self.n_paths),
            ));
        }
        if self.n_steps < 1 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        Ok(())
    }

    fn units(&self) -> usize {
        if self.antithetic {
            self.n_paths / 2
        } else {
            self.n_paths
        }
    }
}

/// Warning text when the Euler grid is coarse relative to the jump intensity.
pub fn jump_grid_warning(beta: f64, t0: f64, n_steps: usize) -> Option<String> {
    let load = beta * t0 / n_steps as f64;
    (load > 0.1).then(|| format!("beta*T0/n_steps = {load:.3} exceeds 0.1; refine the time grid"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Number of independent samples (antithetic pairs count once).
    pub n_effective: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMcEstimate {
    pub mean: Complex64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    pub n_effective: usize,
}

/// A Wishart estimate with the share of steps that needed PSD projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WishartMc<T> {
    pub estimate: T,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct UnitSample {
    re: f64,
    im: f64,
    clipped: u64,
    steps: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    re: f64,
    re2: f64,
    im: f64,
    im2: f64,
    clipped: u64,
    steps: u64,
    n: usize,
}

fn unit_rng(seed: u64, unit: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit as u64);
    rng
}

fn accumulate<F>(units: usize, seed: u64, sample: F) -> Result<Sums>
where
    F: Fn(&mut ChaCha8Rng) -> Result<UnitSample> + Sync,
{
    let chunks = units.div_ceil(CHUNK);
    let partial: Vec<Sums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = Sums::default();
            for unit in c * CHUNK..((c + 1) * CHUNK).min(units) {
                let x = sample(&mut unit_rng(seed, unit))?;
                s.re += x.re;
                s.re2 += x.re * x.re;
                s.im += x.im;
                s.im2 += x.im * x.im;
                s.clipped += x.clipped;
                s.steps += x.steps;
                s.n += 1;
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Sums::default();
    for s in partial {
        total.re += s.re;
        total.re2 += s.re2;
        total.im += s.im;
        total.im2 += s.im2;
        total.clipped += s.clipped;
        total.steps += s.steps;
        total.n += s.n;
    }
    Ok(total)
}

fn mean_se(sum: f64, sum2: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

impl Sums {
    fn real(&self) -> McEstimate {
        let (mean, std_error) = mean_se(self.re, self.re2, self.n);
        McEstimate { mean, std_error, n_effective: self.n }
    }

    fn complex(&self) -> ComplexMcEstimate {
        let (re, se_re) = mean_se(self.re, self.re2, self.n);
        let (im, se_im) = mean_se(self.im, self.im2, self.n);
        ComplexMcEstimate {
            mean: Complex64::new(re, im),
            std_error_re: se_re,
            std_error_im: se_im,
            n_effective: self.n,
        }
    }

    fn clip_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.clipped as f64 / self.steps as f64
        }
    }
}

fn payoff(kind: OptionKind, strike: f64, z: f64) -> f64 {
    match kind {
        OptionKind::Call => (z.exp() - strike).max(0.0),
        OptionKind::Put => (strike - z.exp()).max(0.0),
    }
}

fn check_option(option: &OptionSpec) -> Result<()> {
    if !(option.strike >= 0.0 && option.strike.is_finite()) {
        return Err(Error::invalid("strike", format!("must be nonnegative, got {}", option.strike)));
    }
    if !(option.t0 >= 0.0 && option.t0.is_finite()) {
        return Err(Error::invalid("t0", format!("must be nonnegative, got {}", option.t0)));
    }
    if !(option.theta >= 0.0 && option.theta.is_finite()) {
        return Err(Error::invalid("theta", format!("must be nonnegative, got {}", option.theta)));
    }
    Ok(())
}

/// `κ_n` as a function of calendar time `s`, given `f_n(T_1 − s)`.
struct Kappa {
    mode: KappaMode,
    n: usize,
}

enum KappaMode {
    Zero,
    Fixed(Vec<f64>),
    Proportional(f64),
    /// Values on the step grid, interpolated linearly.
    Table { h: f64, values: Vec<f64> },
}

impl Kappa {
    fn new(
        basis: &BasisSystem,
        drift: DriftConvention,
        h0: &DriftCurve,
        n: usize,
        t0: f64,
        theta: f64,
        steps: usize,
    ) -> Result<Self> {
        let mode = match drift {
            DriftConvention::None => KappaMode::Zero,
            DriftConvention::FixedLag => KappaMode::Fixed(
                (1..=n).map(|k| basis.c_coefficient(k, theta, h0)).collect::<Result<_>>()?,
            ),
            DriftConvention::Martingale => match h0.as_constant() {
                Some(c) => KappaMode::Proportional(c),
                None => {
                    let h = t0 / steps as f64;
                    let mut values = Vec::with_capacity((steps + 1) * n);
                    for k in 0..=steps {
                        let r = t0 - k as f64 * h;
                        for m in 1..=n {
                            values.push(basis.c_coefficient(m, theta + r.max(0.0), h0)?);
                        }
                    }
                    KappaMode::Table { h, values }
                }
            },
        };
        Ok(Self { mode, n })
    }

    fn fill(&self, s: f64, f: &[f64], out: &mut [f64]) {
        match &self.mode {
            KappaMode::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            KappaMode::Fixed(c) => out.copy_from_slice(c),
            KappaMode::Proportional(c) => {
                for (o, fv) in out.iter_mut().zip(f) {
                    *o = c * fv;
                }
            }
            KappaMode::Table { h, values } => {
                let steps = values.len() / self.n - 1;
                let pos = if *h > 0.0 { (s / h).clamp(0.0, steps as f64) } else { 0.0 };
                let k = (pos.floor() as usize).min(steps.saturating_sub(1));
                let w = pos - k as f64;
                for m in 0..self.n {
                    let lo = values[k * self.n + m];
                    let hi = values[((k + 1).min(steps)) * self.n + m];
                    out[m] = lo + w * (hi - lo);
                }
            }
        }
    }
}

/// Step-integrated mode weights for the jump models.
struct JumpPathModel<'a> {
    basis: &'a BasisSystem,
    model: &'a JumpModelParams,
    kappa: Kappa,
    rule: GaussLegendre,
    n: usize,
    steps: usize,
    h: f64,
    t1: f64,
    sigma: f64,
    decay: Vec<f64>,
    /// `∫_step e^{-2a_n(s-s_k)} f_n(T_1−s)² ds`, row-major `[k][n]`.
    gq: Vec<f64>,
    /// `∫_step e^{-2a_n(s-s_k)} f_n(T_1−s) κ_n(s) ds`.
    gl: Vec<f64>,
}

impl<'a> JumpPathModel<'a> {
    fn new(
        basis: &'a BasisSystem,
        model: &'a JumpModelParams,
        option: &OptionSpec,
        steps: usize,
    ) -> Result<Self> {
        let n = model.n();
        let h = option.t0 / steps as f64;
        let t1 = option.t0 + option.theta;
        let kappa = Kappa::new(basis, model.drift, &model.h0, n, option.t0, option.theta, steps)?;
        let mut me = Self {
            basis,
            model,
            kappa,
            rule: GaussLegendre::new(STEP_NODES),
            n,
            steps,
            h,
            t1,
            sigma: model.drift.sigma(),
            decay: model.a_coeffs.iter().map(|a| (-2.0 * a * h).exp()).collect(),
            gq: vec![0.0; steps * n],
            gl: vec![0.0; steps * n],
        };
        let mut q = vec![0.0; n];
        let mut l = vec![0.0; n];
        for k in 0..steps {
            let s0 = k as f64 * h;
            me.partial(s0, s0 + h, &mut q, &mut l);
            me.gq[k * n..(k + 1) * n].copy_from_slice(&q);
            me.gl[k * n..(k + 1) * n].copy_from_slice(&l);
        }
        Ok(me)
    }

    /// Integrals over `[from, to]` with the kernel anchored at `from`.
    fn partial(&self, from: f64, to: f64, q: &mut [f64], l: &mut [f64]) {
        q.iter_mut().for_each(|v| *v = 0.0);
        l.iter_mut().for_each(|v| *v = 0.0);
        let mut f = vec![0.0; self.n];
        let mut kap = vec![0.0; self.n];
        for (s, w) in self.rule.mapped(from, to) {
            self.basis.fill_f(self.t1 - s, &mut f);
            self.kappa.fill(s, &f, &mut kap);
            for m in 0..self.n {
                let kern = w * (-2.0 * self.model.a_coeffs[m] * (s - from)).exp();
                q[m] += kern * f[m] * f[m];
                l[m] += kern * f[m] * kap[m];
            }
        }
    }

    /// Returns `(Σ drift, Σ √V_k ξ_k)` for one volatility path.
    fn simulate(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let d = &self.model.d_coeffs;
        let a = &self.model.a_coeffs;
        let beta = self.model.beta;
        let mut y = self.model.y0_coeffs.clone();
        let mut q = vec![0.0; self.n];
        let mut l = vec![0.0; self.n];
        let mut next_jump = rng.sample::<f64, _>(Exp1) / beta;
        let mut drift = 0.0;
        let mut noise = 0.0;
        for k in 0..self.steps {
            let s1 = (k + 1) as f64 * self.h;
            let row = k * self.n;
            let mut var = 0.0;
            let mut mu = 0.0;
            for m in 0..self.n {
                var += d[m] * y[m] * self.gq[row + m];
                mu += d[m] * y[m] * self.gl[row + m];
                y[m] *= self.decay[m];
            }
            while next_jump < s1 {
                let tau = next_jump;
                self.partial(tau, s1, &mut q, &mut l);
                for m in 0..self.n {
                    var += d[m] * d[m] * q[m];
                    mu += d[m] * d[m] * l[m];
                    y[m] += d[m] * (-2.0 * a[m] * (s1 - tau)).exp();
                }
                next_jump += rng.sample::<f64, _>(Exp1) / beta;
            }
            let xi: f64 = rng.sample(StandardNormal);
            drift += self.sigma * mu;
            noise += var.max(0.0).sqrt() * xi;
        }
        (drift, noise)
    }
}

/// Monte Carlo price of a call or put under the Lévy or BNS model.
///
/// Zero strike is accepted, in which case the call estimates `E[F(T_0, T_1)]`.
pub fn mc_price_jump(
    basis: &BasisSystem,
    curve: &dyn CurveFn,
    model: &JumpModelParams,
    option: &OptionSpec,
    cfg: &McConfig,
) -> Result<McEstimate> {
    model.validate()?;
    cfg.validate()?;
    check_option(option)?;
    if model.n() > basis.n_max() {
        return Err(Error::invalid("N", format!("truncation {} exceeds basis n_max {}", model.n(), basis.n_max())));
    }
    let z0 = curve.value(option.t0 + option.theta);
    let paths = JumpPathModel::new(basis, model, option, cfg.n_steps)?;
    let sums = accumulate(cfg.units(), cfg.seed, |rng| {
        let (drift, noise) = paths.simulate(rng);
        let up = payoff(option.kind, option.strike, z0 + drift + noise);
        let re = if cfg.antithetic {
            0.5 * (up + payoff(option.kind, option.strike, z0 + drift - noise))
        } else {
            up
        };
        Ok(UnitSample { re, ..Default::default() })
    })?;
    Ok(sums.real())
}

/// Step matrices for the Wishart path simulation.
struct WishartPathModel<'a> {
    model: &'a WishartModelParams,
    n: usize,
    steps: usize,
    h: f64,
    sigma: f64,
    sqrt_q: Vec<f64>,
    /// `∫_step b bᵀ ds` per step.
    g: Vec<DMatrix<f64>>,
    /// `∫_step sym(b eᵀ) ds` per step.
    hm: Vec<DMatrix<f64>>,
    clip: bool,
}

impl<'a> WishartPathModel<'a> {
    fn new(
        basis: &BasisSystem,
        model: &'a WishartModelParams,
        t0: f64,
        theta: f64,
        cfg: &McConfig,
    ) -> Result<Self> {
        let n = model.rank();
        let steps = cfg.n_steps;
        let h = t0 / steps as f64;
        let t1 = t0 + theta;
        let kappa = Kappa::new(basis, model.drift, &model.h0, n, t0, theta, steps)?;
        let rule = GaussLegendre::new(STEP_NODES);
        let sd: Vec<f64> = model.d_coeffs.iter().map(|d| d.sqrt()).collect();
        let mut f = vec![0.0; n];
        let mut kap = vec![0.0; n];
        let mut g = Vec::with_capacity(steps);
        let mut hm = Vec::with_capacity(steps);
        for k in 0..steps {
            let s0 = k as f64 * h;
            let mut gk = DMatrix::zeros(n, n);
            let mut hk = DMatrix::zeros(n, n);
            for (s, w) in rule.mapped(s0, s0 + h) {
                basis.fill_f(t1 - s, &mut f);
                kappa.fill(s, &f, &mut kap);
                for i in 0..n {
                    for j in 0..n {
                        let bi = sd[i] * f[i];
                        let bj = sd[j] * f[j];
                        gk[(i, j)] += w * bi * bj;
                        hk[(i, j)] += w * 0.5 * (bi * sd[j] * kap[j] + sd[i] * kap[i] * bj);
                    }
                }
            }
            g.push(gk);
            hm.push(hk);
        }
        Ok(Self {
            model,
            n,
            steps,
            h,
            sigma: model.drift.sigma(),
            sqrt_q: model.q_coeffs.iter().map(|q| q.sqrt()).collect(),
            g,
            hm,
            clip: cfg.clip_psd,
        })
    }

    /// Returns `(Σ drift, Σ √v_k ξ_k, Y_{T_0}, clipped steps)`.
    fn simulate(&self, rng: &mut ChaCha8Rng) -> (f64, f64, DMatrix<f64>, u64) {
        let n = self.n;
        let m = self.model;
        let mut y = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(m.y0_eigs.clone()));
        let sqrt_h = self.h.sqrt();
        let mut drift = 0.0;
        let mut noise = 0.0;
        let mut clipped = 0;
        let mut db = DMatrix::zeros(n, n);
        for k in 0..self.steps {
            let eig = SymmetricEigen::new(y.clone());
            let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig < -PSD_TOL {
                clipped += 1;
            }
            let pos = eig.eigenvalues.map(|l| l.max(0.0));
            if self.clip && min_eig < 0.0 {
                y = &eig.eigenvectors * DMatrix::from_diagonal(&pos) * eig.eigenvectors.transpose();
            }
            let sqrt_y = &eig.eigenvectors
                * DMatrix::from_diagonal(&pos.map(f64::sqrt))
                * eig.eigenvectors.transpose();

            let var = y.component_mul(&self.g[k]).sum();
            let mu = y.component_mul(&self.hm[k]).sum();
            let xi: f64 = rng.sample(StandardNormal);
            drift += self.sigma * mu;
            noise += var.max(0.0).sqrt() * xi;

            for v in db.iter_mut() {
                *v = sqrt_h * rng.sample::<f64, _>(StandardNormal);
            }
            // √Y ΔB √Q
            let mut left = &sqrt_y * &db;
            for j in 0..n {
                for i in 0..n {
                    left[(i, j)] *= self.sqrt_q[j];
                }
            }
            let mut next = y.clone();
            for j in 0..n {
                for i in 0..n {
                    let mut dy = -(m.a_coeffs[i] + m.a_coeffs[j]) * y[(i, j)] * self.h;
                    if i == j {
                        dy += m.dof * m.q_coeffs[i] * self.h;
                    }
                    next[(i, j)] += dy + left[(i, j)] + left[(j, i)];
                }
            }
            y = (&next + next.transpose()) * 0.5;
        }
        (drift, noise, y, clipped)
    }
}

fn check_wishart(basis: &BasisSystem, model: &WishartModelParams, cfg: &McConfig, t0: f64, theta: f64) -> Result<()> {
    model.validate()?;
    cfg.validate()?;
    if model.rank() > basis.n_max() {
        return Err(Error::invalid("rank", format!("rank {} exceeds basis n_max {}", model.rank(), basis.n_max())));
    }
    if !(t0 >= 0.0 && t0.is_finite()) {
        return Err(Error::invalid("t0", format!("must be nonnegative, got {t0}")));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", format!("must be nonnegative, got {theta}")));
    }
    Ok(())
}

fn clip_check(cfg: &McConfig, fraction: f64) -> Result<()> {
    if cfg.clip_psd && fraction > MAX_CLIP_FRACTION {
        Err(Error::PsdClipping { fraction })
    } else {
        Ok(())
    }
}

/// Empirical `E[exp((ν+iλ) Z_{T_0} − Tr(Y_{T_0} u₂))]` under the Wishart model.
#[allow(clippy::too_many_arguments)]
pub fn mc_mgf_wishart(
    basis: &BasisSystem,
    curve: &dyn CurveFn,
    model: &WishartModelParams,
    nu: f64,
    lambda: f64,
    theta: f64,
    u2: &CMatrix,
    t0: f64,
    cfg: &McConfig,
) -> Result<WishartMc<ComplexMcEstimate>> {
    check_wishart(basis, model, cfg, t0, theta)?;
    let n = model.rank();
    if u2.nrows() != n || u2.ncols() != n {
        return Err(Error::invalid("u2", format!("must be {n}×{n}")));
    }
    let u = Complex64::new(nu, lambda);
    let z0 = curve.value(t0 + theta);
    let paths = WishartPathModel::new(basis, model, t0, theta, cfg)?;
    let sums = accumulate(cfg.units(), cfg.seed, |rng| {
        let (drift, noise, y, clipped) = paths.simulate(rng);
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                tr += y[(i, j)] * u2[(j, i)];
            }
        }
        let value = |z: f64| (u * z - tr).exp();
        let x = if cfg.antithetic {
            0.5 * (value(z0 + drift + noise) + value(z0 + drift - noise))
        } else {
            value(z0 + drift + noise)
        };
        Ok(UnitSample { re: x.re, im: x.im, clipped, steps: paths.steps as u64 })
    })?;
    let fraction = sums.clip_fraction();
    clip_check(cfg, fraction)?;
    Ok(WishartMc { estimate: sums.complex(), clip_fraction: fraction })
}

/// Monte Carlo option price under the Wishart model.
pub fn mc_price_wishart(
    basis: &BasisSystem,
    curve: &dyn CurveFn,
    model: &WishartModelParams,
    option: &OptionSpec,
    cfg: &McConfig,
) -> Result<WishartMc<McEstimate>> {
    check_option(option)?;
    check_wishart(basis, model, cfg, option.t0, option.theta)?;
    let z0 = curve.value(option.t0 + option.theta);
    let paths = WishartPathModel::new(basis, model, option.t0, option.theta, cfg)?;
    let sums = accumulate(cfg.units(), cfg.seed, |rng| {
        let (drift, noise, _, clipped) = paths.simulate(rng);
        let up = payoff(option.kind, option.strike, z0 + drift + noise);
        let re = if cfg.antithetic {
            0.5 * (up + payoff(option.kind, option.strike, z0 + drift - noise))
        } else {
            up
        };
        Ok(UnitSample { re, im: 0.0, clipped, steps: paths.steps as u64 })
    })?;
    let fraction = sums.clip_fraction();
    clip_check(cfg, fraction)?;
    Ok(WishartMc { estimate: sums.real(), clip_fraction: fraction })
}
