use rayon::prelude::*;
use rand::Rng;
use serde::Serialize;

use crate::numerics::{fit_weighted_logistic, FitStatus, PropensityFit, RngStream};

use super::cascade::PROPENSITY_FLOOR;
use super::features::{build_features, Block};
use super::law::{DiscreteLaw, Probability};
use super::{EstimateError, ObservedDataset};

/// Odds ratio of one pair of indicators with its bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OddsRatioEstimate {
    pub pair: (String, String),
    pub theta_hat: f64,
    /// Percentile interval at level `1 − alpha`; `None` when fewer than two
    /// resamples produced an estimate.
    pub bootstrap_ci: Option<(f64, f64)>,
    pub alpha: f64,
    pub n_bootstrap: usize,
    pub failed_resamples: usize,
    /// The point estimate lies outside its own interval.
    pub pathological: bool,
}

impl OddsRatioEstimate {
    /// Rejection rule: the interval excludes 1.
    pub fn excludes_one(&self) -> Option<bool> {
        self.bootstrap_ci.map(|(lo, hi)| lo > 1.0 || hi < 1.0)
    }
}

/// Fits `W_k = p(R_k = 1 | R_{−k} = 1, X_{−k})` on the rows with `R_{−k} = 1`.
fn complete_propensity(data: &ObservedDataset, k: usize) -> Result<(PropensityFit, Vec<usize>), EstimateError> {
    let blocks: Vec<Block> = (0..data.k()).filter(|&i| i != k).map(Block::Counterfactual).collect();
    let f = build_features(data, k, &blocks)?;
    let fit = fit_weighted_logistic(&f.design, &f.outcome, &vec![1.0; f.rows.len()])?;
    match fit.status {
        FitStatus::Converged | FitStatus::DegenerateOutcome => Ok((fit, f.rows)),
        status => Err(EstimateError::FitFailed {
            variable: data.names()[k].clone(),
            model: "odds-ratio",
            status,
        }),
    }
}

/// Regressors of `W_k` at a row: intercept then `X_i` for `i ≠ k` in column order.
fn regressors(data: &ObservedDataset, k: usize, row: usize) -> Vec<f64> {
    std::iter::once(1.0)
        .chain((0..data.k()).filter(|&i| i != k).map(|i| data.x_imputed(i)[row]))
        .collect()
}

/// Closed-form odds-ratio estimate for the pair `(k, j)`. The pair is
/// canonicalized so the result is exactly symmetric.
pub fn odds_ratio_point(data: &ObservedDataset, k: usize, j: usize) -> Result<f64, EstimateError> {
    if k == j || k >= data.k() || j >= data.k() {
        return Err(EstimateError::IllegalBlock(format!("pair ({k}, {j})")));
    }
    let (k, j) = (k.min(j), k.max(j));
    let (wk, _) = complete_propensity(data, k)?;
    let (wj, _) = complete_propensity(data, j)?;
    let others: Vec<usize> = (0..data.k()).filter(|&i| i != k && i != j).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for row in 0..data.n() {
        if !others.iter().all(|&i| data.r(i)[row] == 1) {
            continue;
        }
        match (data.r(k)[row], data.r(j)[row]) {
            (0, 0) => num += 1.0,
            (1, 1) => {
                let pk = wk.predict(&regressors(data, k, row)).clamp(PROPENSITY_FLOOR, 1.0);
                let pj = wj.predict(&regressors(data, j, row)).clamp(PROPENSITY_FLOOR, 1.0);
                den += (1.0 - pk) * (1.0 - pj) / (pk * pj);
            }
            _ => {}
        }
    }
    if den <= 0.0 || num == 0.0 {
        let names = data.names();
        return Err(EstimateError::ZeroDenominator(names[k].clone(), names[j].clone()));
    }
    Ok(num / den)
}

/// Type-7 sample quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Point estimate plus a percentile bootstrap over whole rows. Resample `b`
/// draws from `rng.child(b)`, so results do not depend on thread count.
pub fn estimate_odds_ratio(
    data: &ObservedDataset,
    k: usize,
    j: usize,
    alpha: f64,
    n_bootstrap: usize,
    rng: &RngStream,
) -> Result<OddsRatioEstimate, EstimateError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EstimateError::BadAlpha(alpha));
    }
    let theta_hat = odds_ratio_point(data, k, j)?;
    let n = data.n();
    let draws: Vec<Option<f64>> = (0..n_bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut r = rng.child(b as u64);
            let rows: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
            odds_ratio_point(&data.select_rows(&rows), k, j).ok()
        })
        .collect();
    let mut ok: Vec<f64> = draws.iter().flatten().copied().collect();
    ok.sort_by(f64::total_cmp);
    let bootstrap_ci = (ok.len() >= 2).then(|| (quantile(&ok, alpha / 2.0), quantile(&ok, 1.0 - alpha / 2.0)));
    let names = data.names();
    let (a, b) = (k.min(j), k.max(j));
    Ok(OddsRatioEstimate {
        pair: (names[a].clone(), names[b].clone()),
        theta_hat,
        bootstrap_ci,
        alpha,
        n_bootstrap,
        failed_resamples: n_bootstrap - ok.len(),
        pathological: bootstrap_ci.is_some_and(|(lo, hi)| theta_hat < lo || theta_hat > hi),
    })
}

/// The odds-ratio estimating equation evaluated at the law itself, with
/// `W_k(x_{−k}) = p(R_k = 1 | R_{−k} = 1, X_{−k} = x_{−k})`. Returns `None`
/// when a needed conditional or the denominator is undefined.
pub fn population_odds_ratio<T: Probability>(law: &DiscreteLaw<T>, k: usize, j: usize) -> Option<T> {
    let kk = law.k();
    if k == j || k >= kk || j >= kk {
        return None;
    }
    let ones = vec![1u8; kk];
    // W_m at x, obtained by summing X_m out of the R = 1 slice
    let w = |m: usize, x: &[usize]| -> Option<T> {
        let mut num = T::zero();
        let mut den = T::zero();
        let mut xx = x.to_vec();
        for v in 0..law.cards()[m] {
            xx[m] = v;
            let mut r = ones.clone();
            num = num + law.prob(&xx, &r).clone();
            r[m] = 0;
            den = den + law.prob(&xx, &r).clone();
        }
        let total = num.clone() + den;
        (!total.is_zero()).then(|| num / total)
    };
    let num = law.sum_where(|_, r| r[k] == 0 && r[j] == 0 && (0..kk).all(|i| i == k || i == j || r[i] == 1));
    let mut den = T::zero();
    for (x, r, p) in law.iter() {
        if r.iter().any(|&v| v == 0) || p.is_zero() {
            continue;
        }
        let wk = w(k, &x)?;
        let wj = w(j, &x)?;
        if wk.is_zero() || wj.is_zero() {
            return None;
        }
        let one = T::one();
        den = den + p.clone() * (one.clone() - wk.clone()) * (one - wj.clone()) / (wk * wj);
    }
    (!den.is_zero()).then(|| num / den)
}
