//! Finite-rank matrix Riccati system of the Wishart model.
//!
//! With `𝔸 = −Σ a_k f_k⊗f_k`, `Q = Σ q_k f_k⊗f_k`, `D = Σ d_k f_k⊗f_k` and
//! `b_k(t) = √d_k f_k(t+ϑ)`, the Gram matrix `F(t) = [⟨q₂(t,u) f_i, f_j⟩]`
//! solves
//!
//! `F′ = −(a_i + a_j) F − ½u² b bᵀ − ½(F + Fᵀ) Q (F + Fᵀ) + drift`
//!
//! from `F(0) = u₂`, with `P′ = dof·Tr(QF)`. Both are advanced by explicit Euler.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, CurveFn};
use crate::curve::DriftCurve;
use crate::error::{Error, Result};
use crate::riccati_jump::{DriftConvention, StripPoint};

pub type CMatrix = DMatrix<Complex64>;

/// Entries of `F` beyond this magnitude abort the iteration.
pub const BLOW_UP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WishartModelParams {
    /// Degrees of freedom multiplying `Q` in the drift.
    pub dof: f64,
    pub q_coeffs: Vec<f64>,
    /// Mean-reversion rates of `𝔸 = −Σ a_k f_k⊗f_k`.
    pub a_coeffs: Vec<f64>,
    pub d_coeffs: Vec<f64>,
    pub y0_eigs: Vec<f64>,
    #[serde(default)]
    pub h0: DriftCurve,
    #[serde(default = "no_drift")]
    pub drift: DriftConvention,
}

fn no_drift() -> DriftConvention {
    DriftConvention::None
}

impl WishartModelParams {
    /// `q_k = a_k = 1/k²`, `d_k = 1/(2k²)`, `Y_0 = Σ k^{-2} f_k⊗f_k`, `dof = rank`.
    pub fn standard(rank: usize) -> Self {
        let inv: Vec<f64> = (1..=rank).map(|k| 1.0 / (k * k) as f64).collect();
        Self {
            dof: rank as f64,
            q_coeffs: inv.clone(),
            a_coeffs: inv.clone(),
            d_coeffs: inv.iter().map(|v| 0.5 * v).collect(),
            y0_eigs: inv,
            h0: DriftCurve::default(),
            drift: DriftConvention::None,
        }
    }

    /// Coefficients under which the general step coincides with the matrix
    /// scheme `F + (δ/2)(FN + NF) − (δ/4)u²BBᵀ − δ FNF`, `N = diag(k^{-2})`,
    /// `B_k = f_k/k`: `a_k = −1/(2k²)`, `q_k = d_k = 1/(2k²)`.
    pub fn matrix_scheme(rank: usize) -> Self {
        let half: Vec<f64> = (1..=rank).map(|k| 0.5 / (k * k) as f64).collect();
        let mut p = Self::standard(rank);
        p.q_coeffs = half.clone();
        p.a_coeffs = half.iter().map(|v| -v).collect();
        p.d_coeffs = half;
        p
    }

    pub fn with_drift(mut self, drift: DriftConvention) -> Self {
        self.drift = drift;
        self
    }

    pub fn rank(&self) -> usize {
        self.q_coeffs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rank();
        if n == 0 {
            return Err(Error::invalid("rank", "must be at least 1"));
        }
        if !(self.dof > 0.0 && self.dof.is_finite()) {
            return Err(Error::invalid("dof", format!("must be positive, got {}", self.dof)));
        }
        for (name, v) in [
            ("a_coeffs", &self.a_coeffs),
            ("d_coeffs", &self.d_coeffs),
            ("y0_eigs", &self.y0_eigs),
        ] {
            if v.len() != n {
                return Err(Error::invalid(
                    name,
                    format!("length {} must match q_coeffs length {n}", v.len()),
                ));
            }
        }
        if let Some(q) = self.q_coeffs.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
            return Err(Error::invalid("q_coeffs", format!("entries must be positive, got {q}")));
        }
        if let Some(d) = self.d_coeffs.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("d_coeffs", format!("entries must be positive, got {d}")));
        }
        if let Some(a) = self.a_coeffs.iter().find(|a| !a.is_finite()) {
            return Err(Error::invalid("a_coeffs", format!("entries must be finite, got {a}")));
        }
        if let Some(y) = self.y0_eigs.iter().find(|y| !(**y >= 0.0 && y.is_finite())) {
            return Err(Error::invalid("y0_eigs", format!("entries must be nonnegative, got {y}")));
        }
        if let DriftCurve::NelsonSiegel(c) = &self.h0 {
            c.validate()?;
        }
        Ok(())
    }
}

/// Default Euler step count for horizon `t`.
pub fn default_steps(t: f64) -> usize {
    512 * (t.ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiMatrixState {
    pub f: CMatrix,
    pub p: Complex64,
    pub t: f64,
}

impl RiccatiMatrixState {
    pub fn zero(rank: usize) -> Self {
        Self { f: CMatrix::zeros(rank, rank), p: Complex64::new(0.0, 0.0), t: 0.0 }
    }

    pub fn from_u2(u2: CMatrix) -> Self {
        Self { f: u2, p: Complex64::new(0.0, 0.0), t: 0.0 }
    }

    /// Largest `|F_ij − F_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.f.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.f[(i, j)] - self.f[(j, i)]).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.f.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Drift forcing vector `e_k = √d_k κ_k(t)` at Riccati time `t`.
fn drift_vector(
    basis: &BasisSystem,
    m: &WishartModelParams,
    theta: f64,
    t: f64,
    f: &[f64],
    fixed: &[f64],
) -> Result<Vec<f64>> {
    let n = m.rank();
    let mut e = vec![0.0; n];
    match m.drift {
        DriftConvention::None => {}
        DriftConvention::FixedLag => {
            for k in 0..n {
                e[k] = m.d_coeffs[k].sqrt() * fixed[k];
            }
        }
        DriftConvention::Martingale => {
            for k in 0..n {
                let c = match m.h0.as_constant() {
                    Some(c) => c * f[k],
                    None => basis.c_coefficient(k + 1, theta + t, &m.h0)?,
                };
                e[k] = m.d_coeffs[k].sqrt() * c;
            }
        }
    }
    Ok(e)
}

/// λ-independent forcing data for one Euler step.
#[derive(Debug, Clone)]
struct StepForcing {
    b: Vec<f64>,
    e: Vec<f64>,
}

fn forcing(
    basis: &BasisSystem,
    m: &WishartModelParams,
    theta: f64,
    t: f64,
    fixed: &[f64],
) -> Result<StepForcing> {
    let n = m.rank();
    let mut f = vec![0.0; n];
    basis.fill_f(t + theta, &mut f);
    let b = (0..n).map(|k| m.d_coeffs[k].sqrt() * f[k]).collect();
    let e = drift_vector(basis, m, theta, t, &f, fixed)?;
    Ok(StepForcing { b, e })
}

fn fixed_coefficients(basis: &BasisSystem, m: &WishartModelParams, theta: f64) -> Result<Vec<f64>> {
    if m.drift == DriftConvention::FixedLag {
        (1..=m.rank()).map(|k| basis.c_coefficient(k, theta, &m.h0)).collect()
    } else {
        Ok(Vec::new())
    }
}

fn check(basis: &BasisSystem, m: &WishartModelParams) -> Result<()> {
    m.validate()?;
    if m.rank() > basis.n_max() {
        return Err(Error::invalid(
            "rank",
            format!("rank {} exceeds basis n_max {}", m.rank(), basis.n_max()),
        ));
    }
    Ok(())
}

fn euler_step(
    state: &RiccatiMatrixState,
    u: Complex64,
    m: &WishartModelParams,
    fc: &StepForcing,
    delta: f64,
) -> RiccatiMatrixState {
    let n = m.rank();
    let f = &state.f;
    let s = f + f.transpose();
    // ½ S Q S
    let mut sq = s.clone();
    for j in 0..n {
        for i in 0..n {
            sq[(i, j)] *= m.q_coeffs[j];
        }
    }
    let quad = &sq * &s * Complex64::from(0.5);
    let half_u2 = 0.5 * u * u;
    let mut next = f.clone();
    for j in 0..n {
        for i in 0..n {
            let mut rhs = -(m.a_coeffs[i] + m.a_coeffs[j]) * f[(i, j)]
                - half_u2 * (fc.b[i] * fc.b[j])
                - quad[(i, j)];
            if m.drift != DriftConvention::None {
                let cross = 0.5 * (fc.b[i] * fc.e[j] + fc.e[i] * fc.b[j]);
                rhs -= m.drift.sigma() * u * cross;
            }
            next[(i, j)] += delta * rhs;
        }
    }
    let trace_qf: Complex64 = (0..n).map(|k| m.q_coeffs[k] * f[(k, k)]).sum();
    RiccatiMatrixState { f: next, p: state.p + delta * m.dof * trace_qf, t: state.t + delta }
}

/// One explicit Euler step of the matrix Riccati system.
pub fn wishart_riccati_step(
    basis: &BasisSystem,
    state: &RiccatiMatrixState,
    p: &StripPoint,
    m: &WishartModelParams,
    delta: f64,
) -> Result<RiccatiMatrixState> {
    check(basis, m)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    if state.f.nrows() != m.rank() || state.f.ncols() != m.rank() {
        return Err(Error::invalid("state", "matrix dimension must equal the rank"));
    }
    let fixed = fixed_coefficients(basis, m, p.theta)?;
    let fc = forcing(basis, m, p.theta, state.t, &fixed)?;
    Ok(euler_step(state, p.u(), m, &fc, delta))
}

/// The matrix scheme written with `N = diag(k^{-2})` and `B_k = f_k(t+ϑ)/k`:
///
/// `F + (δ/2)(FN + NF) − (δ/4)u² BBᵀ − (δ/4)(FNF + FNFᵀ + FᵀNF + FᵀNFᵀ)`,
/// `P + δ·dof·½ Σ k^{-2} F_kk`.
pub fn matrix_scheme_step(
    basis: &BasisSystem,
    state: &RiccatiMatrixState,
    p: &StripPoint,
    dof: f64,
    delta: f64,
) -> Result<RiccatiMatrixState> {
    let n = state.f.nrows();
    if n == 0 || n > basis.n_max() {
        return Err(Error::invalid("rank", format!("must be in 1..={}", basis.n_max())));
    }
    let mut fv = vec![0.0; n];
    basis.fill_f(state.t + p.theta, &mut fv);
    let bvec = nalgebra::DVector::from_iterator(
        n,
        (0..n).map(|k| Complex64::new(fv[k] / (k + 1) as f64, 0.0)),
    );
    let nmat = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        (0..n).map(|k| Complex64::new(1.0 / ((k + 1) * (k + 1)) as f64, 0.0)),
    ));
    let f = &state.f;
    let ft = f.transpose();
    let u = p.u();
    let bbt = &bvec * bvec.transpose();
    let quad = f * &nmat * f + f * &nmat * &ft + &ft * &nmat * f + &ft * &nmat * &ft;
    let next = f + (f * &nmat + &nmat * f) * Complex64::from(delta / 2.0)
        - bbt * (u * u * (delta / 4.0))
        - quad * Complex64::from(delta / 4.0);
    let trace: Complex64 = (0..n).map(|k| f[(k, k)] / ((k + 1) * (k + 1)) as f64).sum();
    Ok(RiccatiMatrixState { f: next, p: state.p + delta * dof * 0.5 * trace, t: state.t + delta })
}

/// Precomputed forcing along a fixed time grid, reusable across `u`.
#[derive(Debug, Clone)]
pub struct WishartRiccati {
    model: WishartModelParams,
    delta: f64,
    forcing: Vec<StepForcing>,
    x0: f64,
}

impl WishartRiccati {
    pub fn new(
        basis: &BasisSystem,
        m: &WishartModelParams,
        x0: &dyn CurveFn,
        theta: f64,
        t: f64,
        steps: usize,
    ) -> Result<Self> {
        check(basis, m)?;
        if steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("must be nonnegative, got {t}")));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::invalid("theta", format!("must be nonnegative, got {theta}")));
        }
        let delta = t / steps as f64;
        let fixed = fixed_coefficients(basis, m, theta)?;
        let forcing = if t > 0.0 {
            (0..steps)
                .map(|k| forcing(basis, m, theta, k as f64 * delta, &fixed))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self { model: m.clone(), delta, forcing, x0: x0.value(t + theta) })
    }

    /// Iterates from `F(0) = u₂` to the horizon.
    pub fn solve(&self, u: Complex64, u2: &CMatrix) -> Result<RiccatiMatrixState> {
        let n = self.model.rank();
        if u2.nrows() != n || u2.ncols() != n {
            return Err(Error::invalid("u2", format!("must be {n}×{n}")));
        }
        let mut state = RiccatiMatrixState::from_u2(u2.clone());
        for (k, fc) in self.forcing.iter().enumerate() {
            state = euler_step(&state, u, &self.model, fc, self.delta);
            state.t = (k + 1) as f64 * self.delta;
            let mag = state.max_abs();
            if !(mag <= BLOW_UP) {
                return Err(Error::RiccatiBlowUp { t: state.t, magnitude: mag });
            }
        }
        Ok(state)
    }

    /// `−P + u X_0(t+ϑ) − Σ λ_k F_kk`.
    pub fn exponent(&self, u: Complex64, u2: &CMatrix) -> Result<Complex64> {
        let s = self.solve(u, u2)?;
        let trace: Complex64 =
            (0..self.model.rank()).map(|k| self.model.y0_eigs[k] * s.f[(k, k)]).sum();
        Ok(-s.p + u * self.x0 - trace)
    }

    pub fn laplace(&self, u: Complex64, u2: &CMatrix) -> Result<Complex64> {
        Ok(self.exponent(u, u2)?.exp())
    }
}

/// Finite-rank Laplace transform `exp(−P(t) + (ν+iλ)X_0(t+ϑ) − Tr(Y_0 F(t)))`.
pub fn wishart_laplace(
    basis: &BasisSystem,
    p: &StripPoint,
    m: &WishartModelParams,
    u2: &CMatrix,
    x0: &dyn CurveFn,
    steps: usize,
) -> Result<Complex64> {
    WishartRiccati::new(basis, m, x0, p.theta, p.t, steps)?.laplace(p.u(), u2)
}
