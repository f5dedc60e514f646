use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::rng::{expit, log_expit};
use super::NumericsError;

/// Newton iterations stop once the weighted score max-norm falls below this
/// (scaled by the mean positive weight, capped at 1e-6).
pub const SCORE_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;
/// A coefficient beyond this magnitude is treated as complete separation.
pub const SEPARATION_BOUND: f64 = 30.0;

/// Row-major design with an intercept in column 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    values: Vec<f64>,
    rows: usize,
}

impl DesignMatrix {
    /// Builds a design from named feature columns; the intercept column is
    /// prepended automatically and named `(intercept)`.
    pub fn with_intercept(
        rows: usize,
        features: Vec<(String, Vec<f64>)>,
    ) -> Result<Self, NumericsError> {
        let mut names = Vec::with_capacity(features.len() + 1);
        names.push("(intercept)".to_string());
        let mut seen = HashSet::new();
        seen.insert(names[0].clone());
        for (name, col) in &features {
            if !seen.insert(name.clone()) {
                return Err(NumericsError::DuplicateFeature(name.clone()));
            }
            if col.len() != rows {
                return Err(NumericsError::LengthMismatch {
                    rows,
                    what: "feature column",
                    len: col.len(),
                });
            }
            names.push(name.clone());
        }
        let cols = names.len();
        let mut values = vec![0.0; rows * cols];
        for r in 0..rows {
            values[r * cols] = 1.0;
            for (c, (_, col)) in features.iter().enumerate() {
                let v = col[r];
                if !v.is_finite() {
                    return Err(NumericsError::NonFinite { row: r, column: c + 1 });
                }
                values[r * cols + c + 1] = v;
            }
        }
        Ok(Self { names, values, rows })
    }

    /// Builds a design from raw row-major values (first column must be the intercept).
    pub fn from_rows(names: Vec<String>, values: Vec<f64>) -> Result<Self, NumericsError> {
        if names.is_empty() {
            return Err(NumericsError::NoColumns);
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.clone()) {
                return Err(NumericsError::DuplicateFeature(n.clone()));
            }
        }
        let cols = names.len();
        if values.len() % cols != 0 {
            return Err(NumericsError::LengthMismatch {
                rows: values.len() / cols,
                what: "row-major values",
                len: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite {
                row: i / cols,
                column: i % cols,
            });
        }
        let rows = values.len() / cols;
        Ok(Self { names, values, rows })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.values[r * c..(r + 1) * c]
    }

    pub fn linear_predictor(&self, r: usize, beta: &[f64]) -> f64 {
        self.row(r).iter().zip(beta).map(|(x, b)| x * b).sum()
    }

    /// New design holding the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.cols());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        DesignMatrix {
            names: self.names.clone(),
            values,
            rows: rows.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
    Separation,
    /// Every positively weighted outcome is identical.
    DegenerateOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropensityFit {
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub status: FitStatus,
    pub iterations: usize,
    pub weighted_loglik: f64,
    pub n_effective: f64,
}

impl PropensityFit {
    /// Fitted `P(y = 1 | x)` for a design row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        expit(self.linear_predictor(row))
    }

    /// `xᵀβ`, skipping zero coefficients so a degenerate fit's infinite
    /// intercept never meets `0 · ∞`.
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.coefficients)
            .map(|(x, b)| if *b == 0.0 { 0.0 } else { x * b })
            .sum()
    }
}

fn check_inputs(design: &DesignMatrix, outcome: &[u8], weights: &[f64]) -> Result<(), NumericsError> {
    let n = design.rows();
    if outcome.len() != n {
        return Err(NumericsError::LengthMismatch {
            rows: n,
            what: "outcome",
            len: outcome.len(),
        });
    }
    if weights.len() != n {
        return Err(NumericsError::LengthMismatch {
            rows: n,
            what: "weights",
            len: weights.len(),
        });
    }
    if let Some(i) = outcome.iter().position(|&y| y > 1) {
        return Err(NumericsError::InvalidOutcome(i));
    }
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(NumericsError::InvalidWeight(i));
    }
    Ok(())
}

/// Weighted Bernoulli log-likelihood `Σ w_i [y_i log p_i + (1 - y_i) log(1 - p_i)]`.
pub fn weighted_loglik(design: &DesignMatrix, outcome: &[u8], weights: &[f64], beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for r in 0..design.rows() {
        let w = weights[r];
        if w == 0.0 {
            continue;
        }
        let eta = design.linear_predictor(r, beta);
        ll += w * if outcome[r] == 1 { log_expit(eta) } else { log_expit(-eta) };
    }
    ll
}

/// Weighted score `Σ w_i (y_i - expit(x_iᵀβ)) x_i`.
pub fn weighted_score(design: &DesignMatrix, outcome: &[u8], weights: &[f64], beta: &[f64]) -> Vec<f64> {
    let p = design.cols();
    let mut g = vec![0.0; p];
    for r in 0..design.rows() {
        let w = weights[r];
        if w == 0.0 {
            continue;
        }
        let x = design.row(r);
        let resid = w * (outcome[r] as f64 - expit(design.linear_predictor(r, beta)));
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += resid * xi;
        }
    }
    g
}

struct Eval {
    loglik: f64,
    score: Vec<f64>,
    hessian: DMatrix<f64>,
}

fn evaluate(design: &DesignMatrix, outcome: &[u8], weights: &[f64], beta: &[f64]) -> Eval {
    let p = design.cols();
    let mut loglik = 0.0;
    let mut score = vec![0.0; p];
    // upper triangle, row-major
    let mut h = vec![0.0; p * p];
    for r in 0..design.rows() {
        let w = weights[r];
        if w == 0.0 {
            continue;
        }
        let x = design.row(r);
        let eta = design.linear_predictor(r, beta);
        let mu = expit(eta);
        let y = outcome[r] as f64;
        loglik += w * if outcome[r] == 1 { log_expit(eta) } else { log_expit(-eta) };
        let resid = w * (y - mu);
        let curv = w * mu * (1.0 - mu);
        for i in 0..p {
            score[i] += resid * x[i];
            let ci = curv * x[i];
            for j in i..p {
                h[i * p + j] += ci * x[j];
            }
        }
    }
    let hessian = DMatrix::from_fn(p, p, |i, j| if i <= j { h[i * p + j] } else { h[j * p + i] });
    Eval { loglik, score, hessian }
}

fn newton_direction(hessian: &DMatrix<f64>, score: &[f64]) -> Vec<f64> {
    let g = DVector::from_column_slice(score);
    if let Some(chol) = hessian.clone().cholesky() {
        return chol.solve(&g).iter().copied().collect();
    }
    // rank-deficient information: minimum-norm step
    let svd = hessian.clone().svd(true, true);
    match svd.solve(&g, 1e-12 * svd.singular_values.max().max(1e-300)) {
        Ok(d) => d.iter().copied().collect(),
        Err(_) => vec![0.0; score.len()],
    }
}

/// Second-order Rao–Scott correction for a weighted likelihood-ratio
/// statistic: refer `T / scale` to a chi-square with `effective_df` degrees
/// of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaoScott {
    /// Mean eigenvalue of the design-effect matrix.
    pub mean_eigenvalue: f64,
    pub scale: f64,
    pub effective_df: f64,
}

/// Rao–Scott moments of the design-effect matrix
/// `A = [(H⁻¹)_θθ]⁻¹ (H⁻¹ J H⁻¹)_θθ` for the coefficients `tested`, where `H`
/// is the weighted information and `J = Σ w² (y − p)² x xᵀ / (1 − h)²` the
/// leverage-adjusted (HC3) score covariance at `beta`, with `h` the weighted
/// hat value of the row. `None` if a needed block is singular.
pub fn rao_scott(
    design: &DesignMatrix,
    outcome: &[u8],
    weights: &[f64],
    beta: &[f64],
    tested: &[usize],
) -> Option<RaoScott> {
    let p = design.cols();
    if tested.is_empty() || tested.iter().any(|&t| t >= p) {
        return None;
    }
    let mut h = DMatrix::<f64>::zeros(p, p);
    for r in 0..design.rows() {
        let w = weights[r];
        if w == 0.0 {
            continue;
        }
        let x = DVector::from_column_slice(design.row(r));
        let mu = expit(design.linear_predictor(r, beta));
        h += (&x * x.transpose()) * (w * mu * (1.0 - mu));
    }
    let h_inv = h.try_inverse()?;
    let mut j = DMatrix::<f64>::zeros(p, p);
    for r in 0..design.rows() {
        let w = weights[r];
        if w == 0.0 {
            continue;
        }
        let x = DVector::from_column_slice(design.row(r));
        let mu = expit(design.linear_predictor(r, beta));
        let lev = (w * mu * (1.0 - mu) * (x.transpose() * &h_inv * &x)[(0, 0)]).min(1.0 - 1e-8);
        let e = w * (outcome[r] as f64 - mu);
        // HC3 leverage adjustment: rows that dominate the fit inflate J
        j += (&x * x.transpose()) * (e * e / (1.0 - lev).powi(2));
    }
    let v = &h_inv * j * &h_inv;
    let m = tested.len();
    let block = |a: &DMatrix<f64>| DMatrix::from_fn(m, m, |r, c| a[(tested[r], tested[c])]);
    let a = block(&h_inv).try_inverse()? * block(&v);
    let (t1, t2) = (a.trace(), (&a * &a).trace());
    let rs = RaoScott {
        mean_eigenvalue: t1 / m as f64,
        scale: t2 / t1,
        effective_df: t1 * t1 / t2,
    };
    (t1 > 0.0 && t2 > 0.0 && rs.scale.is_finite() && rs.effective_df.is_finite()).then_some(rs)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves the weighted logistic score equation by Newton iterations with
/// step halving.
///
/// Separation and degenerate outcomes are reported through
/// [`PropensityFit::status`] instead of an error so the caller can decide
/// whether to abandon the surrounding test step.
pub fn fit_weighted_logistic(
    design: &DesignMatrix,
    outcome: &[u8],
    weights: &[f64],
) -> Result<PropensityFit, NumericsError> {
    check_inputs(design, outcome, weights)?;
    let p = design.cols();
    let n_effective: f64 = weights.iter().sum();
    let positive = weights.iter().filter(|w| **w > 0.0).count();
    let (mut w1, mut w0) = (0.0, 0.0);
    for (y, w) in outcome.iter().zip(weights) {
        if *y == 1 {
            w1 += w;
        } else {
            w0 += w;
        }
    }
    if positive == 0 || w1 == 0.0 || w0 == 0.0 {
        let mut coefficients = vec![0.0; p];
        if positive > 0 {
            coefficients[0] = if w1 > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        return Ok(PropensityFit {
            coefficients,
            converged: false,
            status: FitStatus::DegenerateOutcome,
            iterations: 0,
            weighted_loglik: 0.0,
            n_effective,
        });
    }

    let mean_weight = n_effective / positive as f64;
    let tol = (SCORE_TOLERANCE * mean_weight.max(1.0)).min(1e-6);

    let mut beta = vec![0.0; p];
    beta[0] = (w1 / w0).ln();
    let mut eval = evaluate(design, outcome, weights, &beta);
    let mut iterations = 0;
    let mut status = FitStatus::MaxIterations;
    while iterations < MAX_ITERATIONS {
        if max_abs(&eval.score) < tol {
            status = FitStatus::Converged;
            break;
        }
        iterations += 1;
        let step = newton_direction(&eval.hessian, &eval.score);
        let mut scale = 1.0;
        let mut accepted = None;
        while scale > 1e-10 {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, d)| b + scale * d).collect();
            let next = evaluate(design, outcome, weights, &trial);
            if next.loglik.is_finite() && next.loglik >= eval.loglik - 1e-12 * eval.loglik.abs() {
                accepted = Some((trial, next));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((b, e)) => {
                beta = b;
                eval = e;
            }
            None => {
                if max_abs(&eval.score) < 1e-6 {
                    status = FitStatus::Converged;
                }
                break;
            }
        }
        if max_abs(&beta) > SEPARATION_BOUND {
            status = FitStatus::Separation;
            break;
        }
    }
    if status == FitStatus::MaxIterations && max_abs(&eval.score) < tol {
        status = FitStatus::Converged;
    }
    Ok(PropensityFit {
        converged: status == FitStatus::Converged,
        status,
        iterations,
        weighted_loglik: eval.loglik,
        n_effective,
        coefficients: beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn intercept_only(n: usize) -> DesignMatrix {
        DesignMatrix::with_intercept(n, vec![]).unwrap()
    }

    #[test]
    fn intercept_mle_is_logit_of_mean() {
        let y = [1u8, 0, 0, 0, 1, 0, 0, 0];
        let fit = fit_weighted_logistic(&intercept_only(8), &y, &[1.0; 8]).unwrap();
        assert!(fit.converged);
        assert!((fit.coefficients[0] + 3f64.ln()).abs() < 1e-10);
        assert!(fit.weighted_loglik <= 0.0);
    }

    #[test]
    fn rao_scott_intercept_closed_form() {
        // H = n·c·ȳ(1−ȳ), h = 1/n and J = c²·nȳ(1−ȳ)/(1−1/n)², so A = c·(n/(n−1))²
        let y = [1u8, 0, 0, 1, 1, 0, 0, 0, 1, 0];
        let n = y.len() as f64;
        for c in [1.0, 3.0] {
            let w = vec![c; y.len()];
            let fit = fit_weighted_logistic(&intercept_only(y.len()), &y, &w).unwrap();
            let rs = rao_scott(&intercept_only(y.len()), &y, &w, &fit.coefficients, &[0]).unwrap();
            let expected = c * (n / (n - 1.0)).powi(2);
            assert!((rs.mean_eigenvalue - expected).abs() < 1e-9, "{rs:?}");
            assert!((rs.scale - expected).abs() < 1e-9);
            assert!((rs.effective_df - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rao_scott_near_identity_for_a_correct_unweighted_model() {
        let mut rng = crate::numerics::RngStream::new(4);
        let n = 20_000;
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<u8> = (0..n)
            .map(|i| crate::numerics::bernoulli(expit(0.3 + 0.8 * x1[i]), &mut rng).unwrap())
            .collect();
        let d = DesignMatrix::with_intercept(n, vec![("a".into(), x1), ("b".into(), x2)]).unwrap();
        let w = vec![1.0; n];
        let fit = fit_weighted_logistic(&d, &y, &w).unwrap();
        let rs = rao_scott(&d, &y, &w, &fit.coefficients, &[1, 2]).unwrap();
        assert!((rs.mean_eigenvalue - 1.0).abs() < 0.05, "{rs:?}");
        assert!((rs.effective_df - 2.0).abs() < 0.05, "{rs:?}");
    }

    #[test]
    fn rao_scott_rejects_bad_requests() {
        let y = [1u8, 0, 1, 0];
        let d = intercept_only(4);
        assert!(rao_scott(&d, &y, &[1.0; 4], &[0.0], &[]).is_none());
        assert!(rao_scott(&d, &y, &[1.0; 4], &[0.0], &[1]).is_none());
        assert!(rao_scott(&d, &y, &[0.0; 4], &[0.0], &[0]).is_none());
    }

    #[test]
    fn degenerate_outcomes_are_flagged() {
        let fit = fit_weighted_logistic(&intercept_only(4), &[1, 1, 1, 1], &[1.0; 4]).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.status, FitStatus::DegenerateOutcome);
        // a zero-weighted zero does not count
        let fit = fit_weighted_logistic(&intercept_only(3), &[1, 0, 1], &[1.0, 0.0, 2.0]).unwrap();
        assert_eq!(fit.status, FitStatus::DegenerateOutcome);
    }

    #[test]
    fn separation_is_flagged_not_fatal() {
        let x = vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let y = [0u8, 0, 0, 1, 1, 1];
        let d = DesignMatrix::with_intercept(6, vec![("x".into(), x)]).unwrap();
        let fit = fit_weighted_logistic(&d, &y, &[1.0; 6]).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.status, FitStatus::Separation);
    }

    #[test]
    fn input_validation() {
        let d = intercept_only(2);
        assert!(matches!(
            fit_weighted_logistic(&d, &[1], &[1.0, 1.0]),
            Err(NumericsError::LengthMismatch { .. })
        ));
        assert_eq!(
            fit_weighted_logistic(&d, &[2, 0], &[1.0, 1.0]),
            Err(NumericsError::InvalidOutcome(0))
        );
        assert_eq!(
            fit_weighted_logistic(&d, &[1, 0], &[1.0, -1.0]),
            Err(NumericsError::InvalidWeight(1))
        );
        assert!(matches!(
            DesignMatrix::with_intercept(2, vec![("a".into(), vec![1.0, f64::NAN])]),
            Err(NumericsError::NonFinite { row: 1, column: 1 })
        ));
        assert!(matches!(
            DesignMatrix::with_intercept(2, vec![("a".into(), vec![1.0; 2]), ("a".into(), vec![0.0; 2])]),
            Err(NumericsError::DuplicateFeature(_))
        ));
    }

    #[test]
    fn collinear_columns_still_fit() {
        let x: Vec<f64> = (0..40).map(|i| (i % 7) as f64).collect();
        let y: Vec<u8> = (0..40).map(|i| ((i * 13) % 5 < 2) as u8).collect();
        let d = DesignMatrix::with_intercept(40, vec![("a".into(), x.clone()), ("b".into(), x)]).unwrap();
        let fit = fit_weighted_logistic(&d, &y, &[1.0; 40]).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!(max_abs(&weighted_score(&d, &y, &[1.0; 40], &fit.coefficients)) < 1e-6);
    }
}
