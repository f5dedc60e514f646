//! Numerical layer against independent reference computations.

mod common;

use common::oracles::{add_fraction, chisq_sf_quadrature, grid_search_logistic};
use common::properties;
use mdag_gof::numerics::{chisq_sf, fit_weighted_logistic, DesignMatrix, FitStatus, Rational, RngStream};
use proptest::prelude::*;
use rand::Rng;

pub const EIGHT_ROWS_X: [f64; 8] = [-1.5, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0];
pub const EIGHT_ROWS_Y: [u8; 8] = [0, 0, 1, 0, 1, 0, 1, 1];

#[test]
fn eight_row_fit_matches_grid_search_with_alternating_weights() {
    let w: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
    let d = DesignMatrix::with_intercept(8, vec![("x".into(), EIGHT_ROWS_X.to_vec())]).unwrap();
    let fit = fit_weighted_logistic(&d, &EIGHT_ROWS_Y, &w).unwrap();
    assert_eq!(fit.status, FitStatus::Converged);
    let (b0, b1) = grid_search_logistic(&EIGHT_ROWS_X, &EIGHT_ROWS_Y, &w);
    assert!((fit.coefficients[0] - b0).abs() <= 1e-4, "{:?} vs {b0}", fit.coefficients);
    assert!((fit.coefficients[1] - b1).abs() <= 1e-4, "{:?} vs {b1}", fit.coefficients);
}

#[test]
fn random_small_fits_match_grid_search() {
    let mut rng = RngStream::new(31);
    let mut compared = 0;
    while compared < 20 {
        let n = rng.random_range(10..30);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<u8> = x.iter().map(|&v| u8::from(rng.random_bool(1.0 / (1.0 + (-v).exp())))).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let d = DesignMatrix::with_intercept(n, vec![("x".into(), x.clone())]).unwrap();
        let fit = fit_weighted_logistic(&d, &y, &w).unwrap();
        // the grid spans ±8 around the origin, so skip near-separated draws
        if fit.status != FitStatus::Converged || fit.coefficients.iter().any(|b| b.abs() > 6.0) {
            continue;
        }
        let (b0, b1) = grid_search_logistic(&x, &y, &w);
        assert!((fit.coefficients[0] - b0).abs() <= 1e-4 && (fit.coefficients[1] - b1).abs() <= 1e-4);
        compared += 1;
    }
}

#[test]
fn chisq_tail_matches_quadrature() {
    let q = 3.841_458_820_694_124;
    assert!((chisq_sf(q, 1).unwrap() - chisq_sf_quadrature(q, 1)).abs() <= 1e-4);
    assert!((chisq_sf(q, 1).unwrap() - 0.05).abs() <= 1e-9);
    for df in 1..=6 {
        for x in [0.1, 0.7, 2.0, 5.5, 11.0] {
            let (a, b) = (chisq_sf(x, df).unwrap(), chisq_sf_quadrature(x, df));
            assert!((a - b).abs() <= 1e-6, "df={df} x={x}: {a} vs {b}");
        }
    }
}

#[test]
fn rational_addition_matches_integer_oracle() {
    let mut rng = RngStream::new(12);
    for _ in 0..10_000 {
        let lim = 1i64 << 30;
        let a = rng.random_range(-lim..lim);
        let c = rng.random_range(-lim..lim);
        let mut b = rng.random_range(-lim..lim);
        let mut d = rng.random_range(-lim..lim);
        b += i64::from(b == 0);
        d += i64::from(d == 0);
        let sum = Rational::frac(a, b) + Rational::frac(c, d);
        let (num, den) = add_fraction(a, b, c, d);
        assert_eq!(sum.numerator().to_string(), num.to_string());
        assert_eq!(sum.denominator().to_string(), den.to_string());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        properties::gradient_matches_finite_differences(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn converged_score_is_small(seed in any::<u64>()) {
        properties::converged_score_is_small(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn weight_homogeneity(seed in any::<u64>()) {
        properties::weight_homogeneity(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn weight_doubling_leaves_the_fit_unchanged(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let pr = properties::logistic_problem(&mut rng, 120, 2);
        let doubled: Vec<f64> = pr.weights.iter().map(|w| 2.0 * w).collect();
        let a = fit_weighted_logistic(&pr.design, &pr.outcome, &pr.weights).unwrap();
        let b = fit_weighted_logistic(&pr.design, &pr.outcome, &doubled).unwrap();
        prop_assume!(a.status == FitStatus::Converged && b.status == FitStatus::Converged);
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()));
        }
        prop_assert!((b.weighted_loglik - 2.0 * a.weighted_loglik).abs() <= 1e-6 * (1.0 + a.weighted_loglik.abs()));
    }

    #[test]
    fn chisq_tail_is_monotone(x in 0.0f64..50.0, dx in 0.0f64..5.0, df in 1u32..20) {
        prop_assert!(chisq_sf(x + dx, df).unwrap() <= chisq_sf(x, df).unwrap() + 1e-15);
    }
}
