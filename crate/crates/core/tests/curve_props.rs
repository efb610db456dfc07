use approx::assert_abs_diff_eq;
use fwdvol::curve::NelsonSiegelCurve;
use proptest::prelude::*;

#[test]
fn forward_price_composition() {
    let c = NelsonSiegelCurve::default();
    assert_eq!(c.forward_price(3.0), c.log_forward(3.0).exp());
}

#[test]
fn continuity_at_zero() {
    let c = NelsonSiegelCurve::default();
    assert_abs_diff_eq!(c.log_forward(1e-8), c.beta0 + c.beta1, epsilon = 1e-9);
}

proptest! {
    #[test]
    fn positive_forwards(
        b0 in -1.0f64..1.0, b1 in -1.0f64..1.0, b2 in -1.0f64..1.0,
        tau in 0.1f64..10.0, t in 0.0f64..50.0,
    ) {
        let c = NelsonSiegelCurve::new(b0, b1, b2, tau).unwrap();
        let f = c.forward_price(t);
        prop_assert!(f > 0.0 && f.is_finite());
    }

    #[test]
    fn loadings_continuous_near_zero(x in 0.0f64..1e-4) {
        let c = NelsonSiegelCurve::default();
        let h = 1e-8;
        prop_assert!((c.log_forward(x + h) - c.log_forward(x)).abs() < 1e-9);
    }

    #[test]
    fn long_end_tends_to_level(b0 in -1.0f64..1.0, b1 in -1.0f64..1.0, b2 in -1.0f64..1.0) {
        let c = NelsonSiegelCurve::new(b0, b1, b2, 2.0).unwrap();
        prop_assert!((c.log_forward(1e6) - b0).abs() < 1e-5);
    }
}
