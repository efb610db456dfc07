//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use fwdvol::basis::{BasisSystem, CurveFn};
use fwdvol::riccati_jump::{DriftConvention, JumpModelParams};
use fwdvol::Complex64;

/// Independent nested-trapezoid evaluation of the raw integrals, Richardson-extrapolated.
pub struct Oracle<'a> {
    pub b: &'a BasisSystem,
    pub m: &'a JumpModelParams,
    pub theta: f64,
}

impl Oracle<'_> {
    fn kappa(&self, n: usize, r: f64) -> f64 {
        let c = self.m.h0.as_constant().expect("oracle handles constant h0 only");
        match self.m.drift {
            DriftConvention::Martingale => c * self.b.f(n, self.theta + r).unwrap(),
            DriftConvention::FixedLag => c * self.b.f(n, self.theta).unwrap(),
            DriftConvention::None => 0.0,
        }
    }

    /// `(Q_n(s_i), K_n(s_i))` on the uniform grid `s_i = i·t/steps`.
    fn cumulative(&self, n: usize, t: f64, steps: usize) -> Vec<(f64, f64)> {
        let a = self.m.a_coeffs[n - 1];
        let h = t / steps as f64;
        let g = |r: f64| {
            let f = self.b.f(n, r + self.theta).unwrap();
            ((2.0 * a * r).exp() * f * f, (2.0 * a * r).exp() * f * self.kappa(n, r))
        };
        let mut out = vec![(0.0, 0.0)];
        let (mut q, mut l) = (0.0, 0.0);
        let mut prev = g(0.0);
        for i in 1..=steps {
            let s = i as f64 * h;
            let cur = g(s);
            q += 0.5 * h * (prev.0 + cur.0);
            l += 0.5 * h * (prev.1 + cur.1);
            prev = cur;
            let damp = (-2.0 * a * s).exp();
            out.push((damp * q, damp * l));
        }
        out
    }

    fn pairing_grid(&self, u: Complex64, t: f64, steps: usize, weights: &[f64]) -> Vec<Complex64> {
        let sigma = self.m.drift.sigma();
        let mut acc = vec![Complex64::new(0.0, 0.0); steps + 1];
        for n in 1..=self.m.n() {
            let d = self.m.d_coeffs[n - 1];
            for (i, (q, l)) in self.cumulative(n, t, steps).into_iter().enumerate() {
                acc[i] += weights[n - 1] * (-0.5 * u * u * d * q - sigma * u * d * l);
            }
        }
        acc
    }

    fn richardson(f: impl Fn(usize) -> Complex64, steps: usize) -> Complex64 {
        (4.0 * f(2 * steps) - f(steps)) / 3.0
    }

    pub fn d_pairing(&self, u: Complex64, s: f64) -> Complex64 {
        Self::richardson(|k| *self.pairing_grid(u, s, k, &self.m.d_coeffs).last().unwrap(), 1000)
    }

    pub fn y_pairing(&self, u: Complex64, t: f64) -> Complex64 {
        Self::richardson(|k| *self.pairing_grid(u, t, k, &self.m.y0_coeffs).last().unwrap(), 1000)
    }

    pub fn phi(&self, u: Complex64, t: f64) -> Complex64 {
        Self::richardson(
            |k| {
                let grid = self.pairing_grid(u, t, k, &self.m.d_coeffs);
                let h = t / k as f64;
                let vals: Vec<Complex64> = grid.iter().map(|p| 1.0 - (-p).exp()).collect();
                let mut acc = 0.5 * (vals[0] + vals[k]);
                for v in &vals[1..k] {
                    acc += v;
                }
                self.m.beta * acc * h
            },
            1000,
        )
    }
}
