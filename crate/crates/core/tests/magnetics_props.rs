use coilbed::coilopt::{
    optimal_spacing, optimality_polynomial, second_derivative_center, second_derivative_fd, solve_optimal_ratio,
    solve_optimal_ratio_in, uniform_region,
};
use coilbed::magnetics::{onaxis_field, pair_field, square_loop_field, uniformity, FieldVector, HelmholtzPair, Point};
use proptest::prelude::*;

fn pair_strategy() -> impl Strategy<Value = HelmholtzPair> {
    (0.1..2.0f64, 0.05..1.5f64, 1u32..100, -10.0..10.0f64)
        .prop_filter("non-zero current", |t| t.3.abs() > 1e-3)
        .prop_map(|(side, spacing, turns, current)| HelmholtzPair { side, spacing, turns, current })
}

/// Points inside the coil, clear of the windings.
fn inner_point(pair: &HelmholtzPair) -> impl Strategy<Value = Point> {
    let r = 0.45 * pair.side;
    let z = 0.45 * pair.spacing;
    (-r..r, -r..r, -z..z).prop_map(|(x, y, z)| Point::new(x, y, z))
}

fn case() -> impl Strategy<Value = (HelmholtzPair, Point)> {
    pair_strategy().prop_flat_map(|p| (Just(p), inner_point(&p)))
}

fn rel(a: FieldVector, b: FieldVector) -> f64 {
    let d = FieldVector::new(a.bx - b.bx, a.by - b.by, a.bz - b.bz);
    d.magnitude() / b.magnitude().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn superposition_is_exact((pair, q) in case()) {
        let [lo, hi] = pair.loops();
        let sum = square_loop_field(&lo, q).unwrap() + square_loop_field(&hi, q).unwrap();
        prop_assert_eq!(pair_field(&pair, q).unwrap(), sum);
    }

    #[test]
    fn linear_in_current((pair, q) in case(), k in -8.0..8.0f64) {
        prop_assume!(k.abs() > 1e-3);
        let scaled = HelmholtzPair { current: k * pair.current, ..pair };
        let b = pair_field(&pair, q).unwrap();
        let expect = FieldVector::new(k * b.bx, k * b.by, k * b.bz);
        prop_assert!(rel(pair_field(&scaled, q).unwrap(), expect) < 1e-15);
    }

    #[test]
    fn linear_in_turns((pair, q) in case(), k in 1u32..20) {
        let scaled = HelmholtzPair { turns: k * pair.turns, ..pair };
        let b = pair_field(&pair, q).unwrap();
        let kf = f64::from(k);
        let expect = FieldVector::new(kf * b.bx, kf * b.by, kf * b.bz);
        prop_assert!(rel(pair_field(&scaled, q).unwrap(), expect) < 1e-15);
    }

    #[test]
    fn negated_current_negates_field((pair, q) in case()) {
        let neg = HelmholtzPair { current: -pair.current, ..pair };
        let b = pair_field(&pair, q).unwrap();
        prop_assert_eq!(pair_field(&neg, q).unwrap(), FieldVector::new(-b.bx, -b.by, -b.bz));
    }

    #[test]
    fn axis_formula_matches_full_field(pair in pair_strategy(), t in -1.0..1.0f64) {
        let z = t * pair.spacing;
        let full = pair_field(&pair, Point::new(0.0, 0.0, z)).unwrap().bz;
        let closed = onaxis_field(&pair, z);
        prop_assert!((full - closed).abs() <= 1e-9 * closed.abs(), "{} vs {}", full, closed);
    }

    #[test]
    fn axial_field_is_even(pair in pair_strategy(), t in 0.0..1.0f64) {
        let z = t * pair.spacing;
        let up = pair_field(&pair, Point::new(0.0, 0.0, z)).unwrap().bz;
        let down = pair_field(&pair, Point::new(0.0, 0.0, -z)).unwrap().bz;
        prop_assert!((up - down).abs() <= 1e-12 * up.abs());
    }

    #[test]
    fn optimal_spacing_scales_with_side(side in 0.01..10.0f64) {
        let d = optimal_spacing(side).unwrap();
        prop_assert!((side / d - solve_optimal_ratio().unwrap().n).abs() < 1e-12);
    }
}

#[test]
fn root_is_bracket_invariant() {
    let a = solve_optimal_ratio_in(1.0, 3.0).unwrap();
    let b = solve_optimal_ratio_in(0.5, 5.0).unwrap();
    assert!((a.n - b.n).abs() < 1e-10);
    assert!(optimality_polynomial(a.n).abs() < 1e-12);
    assert!((a.n - 1.8365).abs() < 1e-3);
    assert_eq!(solve_optimal_ratio().unwrap(), solve_optimal_ratio().unwrap());
}

#[test]
fn curvature_vanishes_at_the_optimum() {
    let n = solve_optimal_ratio().unwrap().n;
    let d = 0.5;
    let at = |ratio: f64| HelmholtzPair { side: ratio * d, spacing: d, turns: 10, current: 1.0 };
    let centre = second_derivative_center(&at(n)).abs();
    for k in [0.9, 1.1] {
        let off = second_derivative_center(&at(k * n)).abs();
        assert!(centre * 1e3 <= off, "k = {k}: {centre:e} vs {off:e}");
    }
}

#[test]
fn curvature_closed_form_matches_finite_difference() {
    // The finite difference of the independent on-axis sum agrees with the
    // closed form away from the optimum, where neither is near zero.
    for ratio in [1.0, 1.5, 2.2, 3.0] {
        let pair = HelmholtzPair { side: ratio * 0.4, spacing: 0.4, turns: 5, current: 2.0 };
        let closed = second_derivative_center(&pair);
        let fd = second_derivative_fd(&pair);
        assert!((closed - fd).abs() <= 1e-5 * closed.abs(), "n = {ratio}: {closed:e} vs {fd:e}");
    }
}

#[test]
fn testbed_geometry() {
    let d = optimal_spacing(0.8404).unwrap();
    assert!((d * 1000.0 - 457.6).abs() < 0.5);
    let d = optimal_spacing(1.0).unwrap();
    assert!((d * 1000.0 - 1000.0 / 1.8365).abs() < 0.5);
}

#[test]
fn uniform_region_grows_with_threshold() {
    let pair = HelmholtzPair::TESTBED;
    let mut last = (0.0, 0.0);
    for pct in [0.1, 0.5, 1.0, 5.0, 10.0, 20.0] {
        let r = uniform_region(&pair, pct, 1e-3).unwrap();
        assert!(r.extent_x_over_d >= last.0 && r.extent_y_over_d >= last.1, "{pct}%");
        let (x, y) = (r.extent_x_over_d, r.extent_y_over_d);
        assert!((x - y).abs() <= 0.02 * x.max(y), "{pct}%: {x} vs {y}");
        last = (x, y);
    }
    let five = uniform_region(&pair, 5.0, 1e-3).unwrap();
    assert!((five.extent_x_over_d - 0.515).abs() <= 0.1 * 0.515);
}

#[test]
fn near_centre_axial_uniformity_is_small_and_negative() {
    let pair = HelmholtzPair::TESTBED;
    let h = uniformity(&pair, Point::new(0.0, 0.0, 0.1 * pair.spacing)).unwrap();
    assert!(h < 0.0 && h.abs() < 0.5, "{h}");
}
