use approx::assert_abs_diff_eq;
use fwdvol::basis::{laguerre, BasisSystem, Constant, CurveFn};
use fwdvol::curve::{DriftCurve, NelsonSiegelCurve};
use proptest::prelude::*;

fn sys() -> BasisSystem {
    BasisSystem::new(0.1, 10).unwrap()
}

/// Composite trapezoid with Richardson extrapolation.
fn trapezoid(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let t = |m: usize| {
        let h = (b - a) / m as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..m {
            s += f(a + i as f64 * h);
        }
        s * h
    };
    (4.0 * t(2 * n) - t(n)) / 3.0
}

/// Explicit Laguerre polynomials by their monomial expansion.
fn laguerre_monomial(n: usize, x: f64) -> f64 {
    let mut s = 0.0;
    let mut binom = 1.0; // C(n, k)
    let mut fact = 1.0; // k!
    for k in 0..=n {
        if k > 0 {
            binom *= (n - k + 1) as f64 / k as f64;
            fact *= k as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * binom * x.powi(k as i32) / fact;
    }
    s
}

#[test]
fn laguerre_matches_monomial_expansion() {
    for n in 0..=6 {
        for x in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let want = laguerre_monomial(n, x);
            let got = laguerre(n, x);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-300) || (got - want).abs() < 1e-14,
                "n={n} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn laguerre_method_respects_n_max() {
    let b = BasisSystem::new(0.1, 4).unwrap();
    assert!(b.laguerre(4, 1.0).is_ok());
    assert!(b.laguerre(5, 1.0).is_err());
}

#[test]
fn f3_matches_quadrature_of_definition() {
    let b = sys();
    let want = trapezoid(0.0, 1.0, 4000, |s| laguerre(1, s) * (-0.55 * s).exp());
    assert_abs_diff_eq!(b.f(3, 1.0).unwrap(), want, epsilon = 1e-10);
}

#[test]
fn higher_f_match_quadrature_of_definition() {
    let b = sys();
    let c = 0.55;
    for n in 2..=13 {
        for x in [0.3, 2.0, 7.5, 20.0] {
            let want = trapezoid(0.0, x, 20_000, |s| laguerre(n - 2, s) * (-c * s).exp());
            let got = b.f(n, x).unwrap();
            assert!((got - want).abs() < 1e-9, "n={n} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn derivative_is_weighted_laguerre() {
    let b = sys();
    assert_eq!(b.f_derivative(1, 3.0).unwrap(), 0.0);
    for n in 2..=8 {
        for x in [0.1, 1.0, 4.0] {
            let h = 1e-5;
            let fd = (b.f(n, x + h).unwrap() - b.f(n, x - h).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(b.f_derivative(n, x).unwrap(), fd, epsilon = 1e-9);
        }
    }
}

#[test]
fn orthonormal_up_to_ten() {
    let b = sys();
    for i in 1..=10 {
        for j in 1..=10 {
            let fi = b.function(i).unwrap();
            let fj = b.function(j).unwrap();
            let ip = b.inner_product_w(&fi, &fj).unwrap();
            let delta = if i == j { 1.0 } else { 0.0 };
            assert!((ip - delta).abs() <= 1e-8, "<f{i}, f{j}> = {ip}");
        }
    }
}

#[test]
fn inner_product_examples() {
    let b = sys();
    let f1 = b.function(1).unwrap();
    assert_eq!(b.inner_product_w(&f1, &f1).unwrap(), 1.0);
    let f2 = b.function(2).unwrap();
    let f3 = b.function(3).unwrap();
    assert_abs_diff_eq!(b.inner_product_w(&f2, &f3).unwrap(), 0.0, epsilon = 1e-8);
    assert_abs_diff_eq!(b.inner_product_w(&f2, &f2).unwrap(), 1.0, epsilon = 1e-8);
}

#[test]
fn inner_product_reports_non_convergence() {
    let b = sys();
    // e^{αx} f′ g′ = e^{0.1x}: never decays.
    let ramp = (|x: f64| x, |_x: f64| 1.0);
    assert!(matches!(
        b.inner_product_w(&ramp, &ramp),
        Err(fwdvol::Error::NonConvergence { panels: 1000 })
    ));
}

#[test]
fn reproducing_kernel() {
    let b = sys();
    for n in 1..=5 {
        let h = b.function(n).unwrap();
        for x in [0.0, 0.7, 3.0] {
            let ip = b.inner_product_w(&h, &b.representer(x)).unwrap();
            assert!((ip - h.value(x)).abs() <= 1e-8, "n={n} x={x}");
        }
    }
}

#[test]
fn representer_closed_form() {
    let b = sys();
    let a = 0.1;
    for x in [0.0, 0.4, 2.0, 9.0] {
        let u = b.representer(x);
        for y in [0.0, 0.2, 1.0, 5.0, 12.0] {
            // 1 + ∫_0^{x∧y} w^{-1}
            let want = 1.0 + trapezoid(0.0, x.min(y), 2000, |s| (-a * s).exp());
            assert_abs_diff_eq!(u.value(y), want, epsilon = 1e-12);
            // S*(x)·1 evaluated at y is the same representer.
            assert_abs_diff_eq!(b.semigroup_adjoint_apply(&Constant(1.0), x, y), u.value(y), epsilon = 1e-12);
        }
    }
}

#[test]
fn semigroup_examples() {
    let b = sys();
    let h = NelsonSiegelCurve::default();
    for x in [0.0, 0.5, 4.0] {
        assert_eq!(b.semigroup_adjoint_apply(&h, 0.0, x), h.value(x));
    }
    for (t, x) in [(1.0, 0.5), (1.0, 3.0), (4.0, 4.0)] {
        let want = 1.0 + 10.0 * (1.0 - (-0.1f64 * f64::min(x, t)).exp());
        assert_abs_diff_eq!(b.semigroup_adjoint_apply(&Constant(1.0), t, x), want, epsilon = 1e-14);
    }
}

#[test]
fn shifted_adjoint_derivative_consistent() {
    let b = sys();
    let h = NelsonSiegelCurve::default();
    let s = b.shifted_adjoint(&h, 1.5);
    for x in [0.3, 1.2, 2.0, 6.0] {
        let e = 1e-6;
        let fd = (s.value(x + e) - s.value(x - e)) / (2.0 * e);
        assert_abs_diff_eq!(s.derivative(x), fd, epsilon = 1e-8);
    }
}

#[test]
fn c_coefficient_examples() {
    let b = sys();
    let one = DriftCurve::default();
    assert_eq!(b.c_coefficient(1, 3.2, &one).unwrap(), 1.0);
    assert_eq!(b.c_coefficient(2, 0.0, &one).unwrap(), 0.0);
    let closed = b.c_coefficient(3, 2.0, &one).unwrap();
    assert_eq!(closed, b.f(3, 2.0).unwrap());
    let f3 = b.function(3).unwrap();
    let direct = b.inner_product_w(&f3, &b.representer(2.0)).unwrap();
    assert_abs_diff_eq!(closed, direct, epsilon = 1e-10);
}

#[test]
fn c_coefficient_general_curve_matches_adjoint_identity() {
    // ⟨f_n, S*(θ)h⟩ = ⟨S(θ)f_n, h⟩ = f_n(θ)h(0) + ∫ e^{αx} f_n′(x+θ) h′(x) dx
    let b = sys();
    let h = NelsonSiegelCurve::default();
    let drift = DriftCurve::NelsonSiegel(h);
    for n in [1, 2, 4, 7] {
        for theta in [0.0, 0.8, 3.0] {
            let got = b.c_coefficient(n, theta, &drift).unwrap();
            let tail = trapezoid(0.0, 80.0, 40_000, |x| {
                (0.1 * x).exp() * b.f_derivative(n, x + theta).unwrap() * h.derivative(x)
            });
            let want = b.f(n, theta).unwrap() * h.value(0.0) + tail;
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
        }
    }
}

#[test]
fn integrate_basis_product_examples() {
    let b = sys();
    assert_abs_diff_eq!(b.integrate_basis_product(1, 1, 0.7, 0.0, 2.5).unwrap(), 2.5, epsilon = 1e-13);
    assert_abs_diff_eq!(b.integrate_basis_product(1, 0, 0.7, 0.0, 2.5).unwrap(), 2.5, epsilon = 1e-13);
    let want = trapezoid(0.0, 1.0, 2000, |s| b.f(2, s).unwrap().powi(2));
    let got = b.integrate_basis_product(2, 2, 0.0, 0.0, 1.0).unwrap();
    assert_abs_diff_eq!(got, want, epsilon = 1e-9);
    assert!(b.integrate_basis_product(11, 1, 0.0, 0.0, 1.0).is_err());
    assert!(b.integrate_basis_product(1, 1, 0.0, 1.0, 0.0).is_err());
}

proptest! {
    #[test]
    fn reproducing_property_random(n in 1usize..=8, x in 0.0f64..15.0) {
        let b = sys();
        let h = b.function(n).unwrap();
        let ip = b.inner_product_w(&h, &b.representer(x)).unwrap();
        prop_assert!((ip - h.value(x)).abs() <= 1e-8);
    }

    #[test]
    fn adjoint_at_zero_is_identity(x in 0.0f64..30.0, b0 in -1.0f64..1.0, b1 in -1.0f64..1.0) {
        let b = sys();
        let h = NelsonSiegelCurve { beta0: b0, beta1: b1, beta2: 0.3, tau: 1.7 };
        prop_assert_eq!(b.semigroup_adjoint_apply(&h, 0.0, x), h.value(x));
    }

    #[test]
    fn semigroup_adjoint_reproduces_shifted_evaluation(n in 1usize..=6, t in 0.0f64..5.0, x in 0.0f64..5.0) {
        // ⟨f_n, S*(t)u_x⟩ = f_n(x + t)
        let b = sys();
        let u = b.representer(x);
        let shifted = b.shifted_adjoint(&u, t);
        let fnc = b.function(n).unwrap();
        let ip = b.inner_product_w(&fnc, &shifted).unwrap();
        prop_assert!((ip - b.f(n, x + t).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn f_is_bounded_and_finite(n in 1usize..=13, x in 0.0f64..200.0) {
        let v = sys().f(n, x).unwrap();
        prop_assert!(v.is_finite());
        // ‖f_n‖_w = 1 and |h(x)| ≤ ‖h‖ ‖u_x‖ with ‖u_x‖² = u_x(x) ≤ 1 + 1/α.
        prop_assert!(v.abs() <= (11.0f64).sqrt() + 1e-9);
    }
}
