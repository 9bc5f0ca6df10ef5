use proptest::prelude::*;
use tracegn::extremal::{
    crossing_point, crossing_upper_bound, delta_cdf, extremal_envelope, simplex_cdf_mc, simplex_grid, Envelope,
    SimplexWeights,
};
use tracegn::special::{gamma_cdf, GammaParams};

#[test]
fn crossing_matches_bisection_of_the_difference() {
    let cp = crossing_point(2.0, 3.0, 1e-12).unwrap();
    assert!(delta_cdf(2.0, 3.0, cp.x_star - 1e-6).unwrap() < 0.0);
    assert!(delta_cdf(2.0, 3.0, cp.x_star + 1e-6).unwrap() > 0.0);
    assert!(cp.x_star > 1.0 && cp.x_star < crossing_upper_bound(2.0, 3.0));
}

#[test]
fn envelope_regimes() {
    let p = GammaParams::new(2.0, 2.0).unwrap();
    // low edge a/b = 1, high edge (2a+1)/(2b) = 1.25
    assert!(matches!(extremal_envelope(p, 5, 0.5).unwrap(), Envelope::Determinate { .. }));
    assert_eq!(extremal_envelope(p, 5, 1.1).unwrap(), Envelope::Indeterminate);
    assert!(matches!(extremal_envelope(p, 5, 2.0).unwrap(), Envelope::Determinate { .. }));
    assert!(extremal_envelope(p, 0, 1.0).is_err());
}

#[test]
fn envelope_endpoints_are_attained_at_uniform_and_corner() {
    let p = GammaParams::new(1.5, 1.5).unwrap();
    for &x in &[0.3, 0.7, 2.0, 3.5] {
        let Envelope::Determinate { min, max } = extremal_envelope(p, 4, x).unwrap() else { panic!("x={x}") };
        let uniform = gamma_cdf(GammaParams::new(4.0 * 1.5, 4.0 * 1.5).unwrap(), x).unwrap();
        let corner = gamma_cdf(p, x).unwrap();
        let (lo, hi) = if x < 1.0 { (uniform, corner) } else { (corner, uniform) };
        assert_eq!((min, max), (lo, hi));
    }
}

#[test]
fn monte_carlo_stays_inside_the_envelope() {
    let p = GammaParams::new(1.0, 1.0).unwrap();
    let n = 3;
    for &x in &[0.4, 2.5] {
        let Envelope::Determinate { min, max } = extremal_envelope(p, n, x).unwrap() else { panic!() };
        for (i, w) in simplex_grid(n, 4).iter().enumerate() {
            let mc = simplex_cdf_mc(p, w, x, 40_000, 11 + i as u64).unwrap();
            assert!(mc.estimate >= min - 5.0 * mc.std_error - 1e-3, "x={x} w={:?}", w.lambdas());
            assert!(mc.estimate <= max + 5.0 * mc.std_error + 1e-3, "x={x} w={:?}", w.lambdas());
        }
    }
}

#[test]
fn simplex_grid_counts() {
    // C(steps + n - 1, n - 1)
    assert_eq!(simplex_grid(3, 4).len(), 15);
    assert_eq!(simplex_grid(2, 10).len(), 11);
    assert!(simplex_grid(3, 4).iter().all(|w| (w.lambdas().iter().sum::<f64>() - 1.0).abs() < 1e-12));
}

#[test]
fn weights_validation() {
    assert!(SimplexWeights::new(vec![0.5, 0.6]).is_err());
    assert!(SimplexWeights::new(vec![-0.5, 1.5]).is_err());
    assert!(SimplexWeights::new(vec![]).is_err());
    assert!(SimplexWeights::corner(3, 3).is_err());
    assert!(
        simplex_cdf_mc(GammaParams::new(1.0, 1.0).unwrap(), &SimplexWeights::uniform(2).unwrap(), 1.0, 100, 0).is_err()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn crossing_lies_in_bracket(a1 in 0.05f64..50.0, gap in 0.05f64..50.0) {
        let a2 = a1 + gap;
        let cp = crossing_point(a1, a2, 1e-10).unwrap();
        prop_assert!(cp.x_star >= 1.0);
        prop_assert!(cp.x_star <= crossing_upper_bound(a1, a2));
    }

    #[test]
    fn difference_changes_sign_once(a1 in 0.2f64..20.0, gap in 0.2f64..20.0) {
        let a2 = a1 + gap;
        let cp = crossing_point(a1, a2, 1e-10).unwrap();
        let w = 1e-6 * cp.x_star;
        for i in 1..40 {
            let x = cp.x_star * i as f64 / 40.0;
            if x < cp.x_star - w {
                prop_assert!(delta_cdf(a1, a2, x).unwrap() <= 1e-15);
            }
        }
        for i in 1..40 {
            let x = cp.x_star + i as f64 * 0.25;
            prop_assert!(delta_cdf(a1, a2, x).unwrap() >= -1e-15);
        }
    }
}
