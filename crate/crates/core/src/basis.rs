//! Laguerre-generated orthonormal basis of the weighted Sobolev space `H_w`.
//!
//! `H_w` carries the inner product `⟨f, g⟩_w = f(0)g(0) + ∫_0^∞ e^{αx} f′(x) g′(x) dx`.
//! The basis is `f_1 ≡ 1` and `f_n(x) = ∫_0^x L_{n-2}(s) e^{-(α+1)s/2} ds` for `n ≥ 2`.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// A real function on `[0, ∞)` with an evaluable weak derivative.
pub trait CurveFn: Sync {
    fn value(&self, x: f64) -> f64;

    fn derivative(&self, x: f64) -> f64;

    /// Points where the derivative may be discontinuous. Quadrature panels
    /// are split there.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `Some(c)` if the function is identically `c`.
    fn as_constant(&self) -> Option<f64> {
        None
    }
}

/// The constant function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl CurveFn for Constant {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }

    fn derivative(&self, _x: f64) -> f64 {
        0.0
    }

    fn as_constant(&self) -> Option<f64> {
        Some(self.0)
    }
}

impl<F: Fn(f64) -> f64 + Sync, G: Fn(f64) -> f64 + Sync> CurveFn for (F, G) {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.1)(x)
    }
}

/// `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 - x) * l1 - kf * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Fills `out[k] = L_k(x)` for `k < out.len()`.
pub fn laguerre_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 1.0 - x;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0 - x) * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

#[derive(Debug, Clone)]
pub struct BasisSystem {
    alpha: f64,
    n_max: usize,
    quad_order: usize,
    panel_length: f64,
    rule: GaussLegendre,
}

const MAX_PANELS: usize = 1000;
const TAIL_RELATIVE: f64 = 1e-14;

impl BasisSystem {
    pub fn new(alpha: f64, n_max: usize) -> Result<Self> {
        Self::with_quadrature(alpha, n_max, 32, 1.0)
    }

    pub fn with_quadrature(
        alpha: f64,
        n_max: usize,
        quad_order: usize,
        panel_length: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if n_max < 1 {
            return Err(Error::invalid("n_max", "must be at least 1"));
        }
        if quad_order < 2 {
            return Err(Error::invalid("quad_order", format!("must be at least 2, got {quad_order}")));
        }
        if !(panel_length > 0.0 && panel_length.is_finite()) {
            return Err(Error::invalid(
                "panel_length",
                format!("must be positive, got {panel_length}"),
            ));
        }
        Ok(Self {
            alpha,
            n_max,
            quad_order,
            panel_length,
            rule: GaussLegendre::new(quad_order),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn panel_length(&self) -> f64 {
        self.panel_length
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// `(α + 1) / 2`, the decay rate of `f_n′`.
    fn decay(&self) -> f64 {
        0.5 * (self.alpha + 1.0)
    }

    fn check_index(&self, n: usize) -> Result<()> {
        let max = self.n_max + 3;
        if n == 0 || n > max {
            Err(Error::IndexOutOfRange { index: n, max })
        } else {
            Ok(())
        }
    }

    /// `L_n(x)`, restricted to `n ≤ n_max`.
    pub fn laguerre(&self, n: usize, x: f64) -> Result<f64> {
        if n > self.n_max {
            return Err(Error::IndexOutOfRange { index: n, max: self.n_max });
        }
        Ok(laguerre(n, x))
    }

    /// `f_n(x)`.
    pub fn f(&self, n: usize, x: f64) -> Result<f64> {
        self.check_index(n)?;
        let mut buf = vec![0.0; n];
        self.fill_f(x, &mut buf);
        Ok(buf[n - 1])
    }

    /// `[f_1(x), …, f_n(x)]`.
    pub fn f_all(&self, n: usize, x: f64) -> Result<Vec<f64>> {
        self.check_index(n)?;
        let mut buf = vec![0.0; n];
        self.fill_f(x, &mut buf);
        Ok(buf)
    }

    /// Writes `f_1(x), …, f_k(x)` into `out` (`k = out.len()`), without index checks.
    pub(crate) fn fill_f(&self, x: f64, out: &mut [f64]) {
        let n = out.len();
        if n == 0 {
            return;
        }
        out[0] = 1.0;
        if n == 1 {
            return;
        }
        let c = self.decay();
        let e = (-c * x).exp();
        let f2 = -(-c * x).exp_m1() / c;
        out[1] = f2;
        if n == 2 {
            return;
        }
        out[2] = f2 + (x * e - f2) / c;
        if n == 3 {
            return;
        }
        let mut lag = vec![0.0; n - 2];
        laguerre_all(x, &mut lag);
        for k in 1..n - 2 {
            let kf = k as f64;
            let k1 = kf + 1.0;
            let fk1 = out[k];
            let fk2 = out[k + 1];
            out[k + 2] = ((2.0 * kf + 1.0) / k1) * fk2 - (kf / k1) * fk1
                + (x * lag[k] * e - k1 * fk2 + kf * fk1) / (k1 * c);
        }
    }

    /// `f_n′(x)`: zero for `n = 1`, else `L_{n-2}(x) e^{-(α+1)x/2}`.
    pub fn f_derivative(&self, n: usize, x: f64) -> Result<f64> {
        self.check_index(n)?;
        if n == 1 {
            return Ok(0.0);
        }
        Ok(laguerre(n - 2, x) * (-self.decay() * x).exp())
    }

    /// The basis function `f_n` as a [`CurveFn`].
    pub fn function(&self, n: usize) -> Result<BasisFunction<'_>> {
        self.check_index(n)?;
        Ok(BasisFunction { basis: self, n })
    }

    /// The Riesz representer `u_x` of point evaluation at `x`.
    pub fn representer(&self, x: f64) -> Representer {
        Representer { alpha: self.alpha, x }
    }

    /// `⟨h, g⟩_w` by panel-wise Gauss–Legendre with a relative tail cutoff.
    pub fn inner_product_w(&self, h: &dyn CurveFn, g: &dyn CurveFn) -> Result<f64> {
        let boundary = h.value(0.0) * g.value(0.0);
        let mut kinks: Vec<f64> = h
            .kinks()
            .into_iter()
            .chain(g.kinks())
            .filter(|k| k.is_finite() && *k > 0.0)
            .collect();
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        let last_kink = kinks.last().copied().unwrap_or(0.0);
        let alpha = self.alpha;
        let integrand = |x: f64| (alpha * x).exp() * h.derivative(x) * g.derivative(x);

        let mut total = 0.0;
        let mut mass = 0.0;
        let mut quiet = 0;
        let mut lo = 0.0;
        let mut next_kink = 0;
        for _ in 0..MAX_PANELS {
            let mut hi = lo + self.panel_length;
            while next_kink < kinks.len() && kinks[next_kink] <= lo {
                next_kink += 1;
            }
            if next_kink < kinks.len() && kinks[next_kink] < hi {
                hi = kinks[next_kink];
            }
            let part = self.rule.integrate(lo, hi, integrand);
            if !part.is_finite() {
                return Err(Error::NonConvergence { panels: MAX_PANELS });
            }
            total += part;
            mass += part.abs();
            lo = hi;
            if lo >= last_kink && part.abs() <= TAIL_RELATIVE * mass {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(boundary + total);
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::NonConvergence { panels: MAX_PANELS })
    }

    /// `(S*(t)h)(x) = h(0) + h(0)(1 − e^{-α(x∧t)})/α + e^{-αt} 1_{x≥t} (h(x−t) − h(0))`.
    pub fn semigroup_adjoint_apply(&self, h: &dyn CurveFn, t: f64, x: f64) -> f64 {
        shifted_adjoint_value(self.alpha, h, t, x)
    }

    /// `S*(t)h` as a [`CurveFn`].
    pub fn shifted_adjoint<'h>(&self, h: &'h dyn CurveFn, t: f64) -> ShiftedAdjoint<'h> {
        ShiftedAdjoint { alpha: self.alpha, t, h }
    }

    /// `c_n(θ) = ⟨f_n, S*(θ)h_0⟩_w`.
    ///
    /// For constant `h_0 ≡ c`, `S*(θ)h_0 = c·u_θ` and the reproducing property
    /// gives `c·f_n(θ)` without quadrature.
    pub fn c_coefficient(&self, n: usize, theta: f64, h0: &dyn CurveFn) -> Result<f64> {
        if n == 0 || n > self.n_max {
            return Err(Error::IndexOutOfRange { index: n, max: self.n_max });
        }
        if let Some(c) = h0.as_constant() {
            return Ok(c * self.f(n, theta)?);
        }
        let fnc = self.function(n)?;
        self.inner_product_w(&fnc, &self.shifted_adjoint(h0, theta))
    }

    /// `∫_{t0}^{t1} f_i(s+θ) f_j(s+θ) ds`; `j = 0` drops the second factor.
    pub fn integrate_basis_product(
        &self,
        i: usize,
        j: usize,
        theta: f64,
        t0: f64,
        t1: f64,
    ) -> Result<f64> {
        if i == 0 || i > self.n_max {
            return Err(Error::IndexOutOfRange { index: i, max: self.n_max });
        }
        if j > self.n_max {
            return Err(Error::IndexOutOfRange { index: j, max: self.n_max });
        }
        if t1 < t0 {
            return Err(Error::invalid("t1", format!("must be ≥ t0 = {t0}, got {t1}")));
        }
        let k = i.max(j);
        let mut buf = vec![0.0; k];
        Ok(self.rule.integrate_composite(t0, t1, self.panel_length, |s| {
            self.fill_f(s + theta, &mut buf);
            if j == 0 {
                buf[i - 1]
            } else {
                buf[i - 1] * buf[j - 1]
            }
        }))
    }
}

fn shifted_adjoint_value(alpha: f64, h: &dyn CurveFn, t: f64, x: f64) -> f64 {
    if t == 0.0 {
        return h.value(x);
    }
    let h0 = h.value(0.0);
    let mut v = h0 - h0 * (-alpha * x.min(t)).exp_m1() / alpha;
    if x >= t {
        v += (-alpha * t).exp() * (h.value(x - t) - h0);
    }
    v
}

#[derive(Debug, Clone, Copy)]
pub struct BasisFunction<'a> {
    basis: &'a BasisSystem,
    n: usize,
}

impl CurveFn for BasisFunction<'_> {
    fn value(&self, x: f64) -> f64 {
        let mut buf = vec![0.0; self.n];
        self.basis.fill_f(x, &mut buf);
        buf[self.n - 1]
    }

    fn derivative(&self, x: f64) -> f64 {
        if self.n == 1 {
            0.0
        } else {
            laguerre(self.n - 2, x) * (-self.basis.decay() * x).exp()
        }
    }

    fn as_constant(&self) -> Option<f64> {
        (self.n == 1).then_some(1.0)
    }
}

/// `u_x(y) = 1 + (1 − e^{-α(x∧y)})/α`, so that `⟨h, u_x⟩_w = h(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Representer {
    alpha: f64,
    x: f64,
}

impl CurveFn for Representer {
    fn value(&self, y: f64) -> f64 {
        1.0 - (-self.alpha * self.x.min(y)).exp_m1() / self.alpha
    }

    fn derivative(&self, y: f64) -> f64 {
        if y < self.x {
            (-self.alpha * y).exp()
        } else {
            0.0
        }
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.x]
    }
}

pub struct ShiftedAdjoint<'h> {
    alpha: f64,
    t: f64,
    h: &'h dyn CurveFn,
}

impl CurveFn for ShiftedAdjoint<'_> {
    fn value(&self, x: f64) -> f64 {
        shifted_adjoint_value(self.alpha, self.h, self.t, x)
    }

    fn derivative(&self, x: f64) -> f64 {
        if x < self.t {
            self.h.value(0.0) * (-self.alpha * x).exp()
        } else {
            (-self.alpha * self.t).exp() * self.h.derivative(x - self.t)
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k = vec![self.t];
        k.extend(self.h.kinks().into_iter().map(|p| p + self.t));
        k
    }
}
