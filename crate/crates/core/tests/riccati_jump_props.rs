use approx::assert_abs_diff_eq;
use fwdvol::basis::{BasisSystem, Constant};
use fwdvol::curve::{DriftCurve, NelsonSiegelCurve};
use fwdvol::riccati_jump::*;
use fwdvol::Complex64;
use proptest::prelude::*;

fn basis() -> BasisSystem {
    BasisSystem::new(0.1, 10).unwrap()
}

mod common;
use common::Oracle;

#[test]
fn fixed_lag_single_mode_example() {
    let b = basis();
    let m = JumpModelParams::levy(1, 1.0).with_drift(DriftConvention::FixedLag);
    let p = StripPoint::new(2.0, 0.0, 0.0, 0.0);
    let got = d_psi2_pairing_levy(&b, &p, &m, 1.7).unwrap();
    assert_abs_diff_eq!(got.re, -1.7, epsilon = 1e-13);
    let o = Oracle { b: &b, m: &m, theta: 0.0 };
    assert!((o.d_pairing(p.u(), 1.7) - got).norm() < 1e-12);
}

#[test]
fn initial_conditions_exact() {
    let b = basis();
    for m in [JumpModelParams::levy(5, 1.0), JumpModelParams::bns(5, 2.0)] {
        for drift in [DriftConvention::Martingale, DriftConvention::FixedLag, DriftConvention::None] {
            let m = m.clone().with_drift(drift);
            for (nu, lam, theta) in [(2.0, 0.0, 1.0), (-1.0, 5.0, 0.5), (3.0, -2.0, 10.0)] {
                let p = StripPoint::new(nu, lam, theta, 0.0);
                let e = evaluate(&b, &p, &m, &NelsonSiegelCurve::default()).unwrap();
                assert_eq!(e.phi, Complex64::new(0.0, 0.0));
                assert_eq!(e.y_pairing, Complex64::new(0.0, 0.0));
                assert_eq!(d_psi2_pairing_bns(&b, &p, &m, 0.0).unwrap(), Complex64::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn zero_argument_gives_zero() {
    let b = basis();
    let p = StripPoint::new(0.0, 0.0, 1.0, 1.3);
    for m in [JumpModelParams::levy(5, 3.0), JumpModelParams::bns(5, 3.0)] {
        assert_eq!(phi_bns(&b, &p, &m).unwrap().norm(), 0.0);
        let e = evaluate(&b, &p, &m, &NelsonSiegelCurve::default()).unwrap();
        assert_eq!(e.mgf(), Complex64::new(1.0, 0.0));
    }
}

#[test]
fn levy_pairing_matches_trapezoid_oracle() {
    let b = basis();
    for drift in [DriftConvention::Martingale, DriftConvention::FixedLag] {
        let m = JumpModelParams::levy(5, 1.0).with_drift(drift);
        let p = StripPoint::new(2.0, 1.0, 1.0, 1.0);
        let got = d_psi2_pairing_levy(&b, &p, &m, 1.0).unwrap();
        let want = Oracle { b: &b, m: &m, theta: 1.0 }.d_pairing(p.u(), 1.0);
        assert!((got - want).norm() < 1e-8, "{drift:?}: {got} vs {want}");
    }
}

#[test]
fn bns_pairing_matches_trapezoid_oracle() {
    let b = basis();
    for drift in [DriftConvention::Martingale, DriftConvention::FixedLag] {
        let m = JumpModelParams::bns(5, 1.0).with_drift(drift);
        let p = StripPoint::new(2.0, 1.0, 1.0, 1.0);
        let got = d_psi2_pairing_bns(&b, &p, &m, 1.0).unwrap();
        let want = Oracle { b: &b, m: &m, theta: 1.0 }.d_pairing(p.u(), 1.0);
        assert!((got - want).norm() < 1e-8, "{drift:?}: {got} vs {want}");
    }
}

#[test]
fn phi_matches_nested_oracle() {
    let b = basis();
    for m in [JumpModelParams::levy(5, 1.0), JumpModelParams::bns(5, 1.0)] {
        for drift in [DriftConvention::Martingale, DriftConvention::FixedLag] {
            let m = m.clone().with_drift(drift);
            let p = StripPoint::new(2.0, 0.5, 1.0, 1.0);
            let got = phi_bns(&b, &p, &m).unwrap();
            let want = Oracle { b: &b, m: &m, theta: 1.0 }.phi(p.u(), 1.0);
            assert!((got - want).norm() < 1e-7, "{got} vs {want}");
            if m.is_levy() {
                assert_eq!(phi_levy(&b, &p, &m).unwrap(), got);
            }
        }
    }
}

#[test]
fn y_pairing_matches_oracle_across_grid() {
    let b = basis();
    for m in [JumpModelParams::levy(5, 1.0), JumpModelParams::bns(5, 1.0)] {
        for (nu, lam, theta, t) in [(2.0, 3.0, 0.5, 0.5), (-1.0, 1.0, 5.0, 2.0)] {
            let p = StripPoint::new(nu, lam, theta, t);
            let got = y_pairing_bns(&b, &p, &m).unwrap();
            let want = Oracle { b: &b, m: &m, theta }.y_pairing(p.u(), t);
            assert!((got - want).norm() < 1e-7);
        }
    }
}

#[test]
fn y_pairing_equals_d_pairing_when_y0_is_d() {
    let b = basis();
    let m = JumpModelParams::levy(6, 1.0);
    let p = StripPoint::new(2.0, 1.5, 2.0, 0.8);
    assert_eq!(y_pairing_levy(&b, &p, &m).unwrap(), d_psi2_pairing_levy(&b, &p, &m, 0.8).unwrap());
}

#[test]
fn y_pairing_single_mode() {
    let b = basis();
    let mut m = JumpModelParams::levy(3, 1.0);
    m.y0_coeffs = vec![1.0, 0.0, 0.0];
    let p = StripPoint::new(2.0, 1.0, 1.0, 1.3);
    let u = p.u();
    // f_1 ≡ 1, d_1 = ½, κ_1 = 1: −½u²·½·t + ½u·½·t
    let want = -0.25 * u * u * 1.3 + 0.25 * u * 1.3;
    let got = y_pairing_levy(&b, &p, &m).unwrap();
    assert!((got - want).norm() < 1e-13);
}

#[test]
fn x_pairing_examples() {
    let p = StripPoint::new(1.0, 0.0, 2.0, 3.0);
    assert_eq!(x_pairing(&p, &Constant(0.0)), Complex64::new(0.0, 0.0));
    let p = StripPoint::new(2.0, 3.0, 0.4, 1.1);
    let got = x_pairing(&p, &Constant(0.05));
    assert_abs_diff_eq!(got.re, 0.1, epsilon = 1e-15);
    assert_abs_diff_eq!(got.im, 0.15, epsilon = 1e-15);
    let ns = NelsonSiegelCurve::default();
    let p = StripPoint::new(2.0, 1.0, 1.0, 1.0);
    assert_eq!(x_pairing(&p, &ns), Complex64::new(2.0, 1.0) * ns.log_forward(2.0));
}

#[test]
fn bns_with_zero_rates_equals_levy() {
    let b = basis();
    let levy = JumpModelParams::levy(5, 1.0);
    let bns_zero = JumpModelParams { a_coeffs: vec![0.0; 5], ..JumpModelParams::bns(5, 1.0) };
    for nu in [-1.0, 2.0] {
        for lam in [0.0, 1.0, 5.0] {
            for t in [0.5, 1.0] {
                for theta in [0.5, 1.0] {
                    let p = StripPoint::new(nu, lam, theta, t);
                    let x0 = NelsonSiegelCurve::default();
                    let a = evaluate(&b, &p, &levy, &x0).unwrap();
                    let c = evaluate(&b, &p, &bns_zero, &x0).unwrap();
                    for (x, y) in [(a.phi, c.phi), (a.y_pairing, c.y_pairing), (a.x_pairing, c.x_pairing)] {
                        assert!((x - y).norm() <= 1e-9 * x.norm().max(1e-300));
                    }
                }
            }
        }
    }
}

#[test]
fn truncation_stabilizes() {
    let b = basis();
    for base in [JumpModelParams::levy(10, 1.0), JumpModelParams::bns(10, 1.0)] {
        for nu in [-1.0, 2.0] {
            for lam in [0.0, 1.0, 5.0] {
                for t in [0.5, 1.0] {
                    for theta in [0.5, 1.0] {
                        let p = StripPoint::new(nu, lam, theta, t);
                        let y = |n: usize| y_pairing_bns(&b, &p, &base.truncated(n).unwrap()).unwrap();
                        let full = y(10);
                        assert!((y(8) - full).norm() <= (y(3) - full).norm());
                    }
                }
            }
        }
    }
}

#[test]
fn general_drift_curve_path_matches_constant_path() {
    // A Nelson–Siegel h0 with a negligible slope goes through quadrature for
    // c_n(ϑ+r) and must agree with the closed form for h0 ≡ 1.
    let b = basis();
    let near_one = DriftCurve::NelsonSiegel(NelsonSiegelCurve { beta0: 1.0, beta1: 1e-13, beta2: 0.0, tau: 1.0 });
    let p = StripPoint::new(2.0, 1.0, 1.0, 0.7);
    for drift in [DriftConvention::Martingale, DriftConvention::FixedLag] {
        let m1 = JumpModelParams::bns(3, 1.0).with_drift(drift);
        let m2 = JumpModelParams { h0: near_one, ..m1.clone() };
        let a = d_psi2_pairing_bns(&b, &p, &m1, 0.7).unwrap();
        let c = d_psi2_pairing_bns(&b, &p, &m2, 0.7).unwrap();
        assert!((a - c).norm() < 1e-10);
    }
}

#[test]
fn martingale_point_mgf_is_forward() {
    let b = basis();
    let x0 = NelsonSiegelCurve::default();
    for m in [JumpModelParams::levy(7, 2.0), JumpModelParams::bns(7, 0.5)] {
        let p = StripPoint::new(1.0, 0.0, 3.0, 1.5);
        let e = evaluate(&b, &p, &m, &x0).unwrap();
        assert_abs_diff_eq!(e.mgf().re, x0.forward_price(4.5), epsilon = 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugate_symmetry(
        nu in -3.0f64..4.0, lam in 0.0f64..50.0, theta in 0.0f64..20.0, t in 0.0f64..3.0,
        bns in any::<bool>(), fixed in any::<bool>(),
    ) {
        let b = basis();
        let m = if bns { JumpModelParams::bns(5, 1.0) } else { JumpModelParams::levy(5, 1.0) };
        let m = m.with_drift(if fixed { DriftConvention::FixedLag } else { DriftConvention::Martingale });
        let r = JumpRiccati::new(&b, &m, &NelsonSiegelCurve::default(), theta, t).unwrap();
        let a = r.evaluate(nu, lam);
        let c = r.evaluate(nu, -lam);
        prop_assert!((a.phi - c.phi.conj()).norm() <= 1e-12 * a.phi.norm().max(1.0));
        prop_assert!((a.y_pairing - c.y_pairing.conj()).norm() <= 1e-12 * a.y_pairing.norm().max(1.0));
        prop_assert!((a.x_pairing - c.x_pairing.conj()).norm() <= 1e-12 * a.x_pairing.norm().max(1.0));
    }

    #[test]
    fn phi_real_part_nonnegative_on_real_axis(nu in 0.0f64..1.0, theta in 0.0f64..10.0, t in 0.0f64..3.0) {
        // For 0 ≤ u ≤ 1 the martingale pairing −½(u²−u)Q is ≥ 0, so 1 − e^{−p} ≥ 0.
        let b = basis();
        let m = JumpModelParams::bns(5, 1.0);
        let p = StripPoint::new(nu, 0.0, theta, t);
        prop_assert!(phi_bns(&b, &p, &m).unwrap().re >= 0.0);
    }
}
