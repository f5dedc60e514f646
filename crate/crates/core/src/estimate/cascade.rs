use serde::Serialize;

use crate::numerics::{
    chisq_sf, fit_weighted_logistic, log_expit, rao_scott, regularized_gamma_q, DesignMatrix, FitStatus, PropensityFit,
    RaoScott,
};

use super::features::{build_features, Block, Features};
use super::{EstimateError, ObservedDataset};

/// Fitted propensities are clipped to `[PROPENSITY_FLOOR, 1]` before inversion.
pub const PROPENSITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CascadeKind {
    /// Backward cascade with unweighted nulls and weighted alternatives.
    Mar,
    /// Backward cascade with both models fit under the running weight Ω.
    Mnar,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightDiagnostics {
    pub rows_used: usize,
    pub weight_sum: f64,
    pub max_weight: f64,
    /// Kish effective sample size `(Σw)² / Σw²`.
    pub effective_n: f64,
    /// Row propensities that fell below the floor and were clipped.
    pub clipped: usize,
    /// The target indicator is 1 on every row, so both propensities are 1.
    pub always_observed: bool,
}

impl WeightDiagnostics {
    fn from_weights(w: &[f64], clipped: usize) -> Self {
        let sum: f64 = w.iter().sum();
        let sq: f64 = w.iter().map(|v| v * v).sum();
        Self {
            rows_used: w.len(),
            weight_sum: sum,
            max_weight: w.iter().copied().fold(0.0, f64::max),
            effective_n: if sq > 0.0 { sum * sum / sq } else { 0.0 },
            clipped,
            always_observed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrStat {
    pub rho: f64,
    pub two_rho: f64,
    pub df: u32,
    /// Correction for the inverse-probability weights; absent when the
    /// weights are all one or the information matrix is singular.
    pub rao_scott: Option<RaoScott>,
}

impl LrStat {
    /// Upper-tail p-value: `P(χ²_ν > 2ρ / c)` under the correction,
    /// `P(χ²_df > 2ρ)` without it.
    pub fn p_value(&self) -> f64 {
        let t = self.two_rho.max(0.0);
        match self.rao_scott {
            Some(rs) => regularized_gamma_q(rs.effective_df / 2.0, t / rs.scale / 2.0).clamp(0.0, 1.0),
            None => chisq_sf(t, self.df).unwrap_or(f64::NAN),
        }
    }
}

/// One tested index of a cascade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeStep {
    /// 1-based position in the ordering.
    pub position: usize,
    pub variable: String,
    pub null: PropensityFit,
    pub null_columns: Vec<String>,
    /// MAR only: the null refit on the alternative's rows and weights, which
    /// is the null entering `ρ`.
    pub null_refit: Option<PropensityFit>,
    pub alt: PropensityFit,
    pub alt_columns: Vec<String>,
    pub stat: LrStat,
    pub diagnostics: WeightDiagnostics,
}

/// Null propensity model kept for weighting later steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullModel {
    pub position: usize,
    pub fit: PropensityFit,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropensityCascade {
    pub kind: CascadeKind,
    pub order: Vec<String>,
    /// Tested steps in execution order (position K−1 down to 1 for MAR,
    /// K down to 2 for MNAR).
    pub steps: Vec<CascadeStep>,
    /// Null fits by execution order, including the untested top null of MAR.
    pub nulls: Vec<NullModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFailure {
    pub position: usize,
    pub variable: String,
    pub error: EstimateError,
}

/// `ρ = Σ w_i [log W^a_i − log W^o_i]` over the rows of the two designs,
/// which must describe the same rows in the same order.
pub fn weighted_lr_stat(
    null: &PropensityFit,
    null_design: &DesignMatrix,
    alt: &PropensityFit,
    alt_design: &DesignMatrix,
    outcome: &[u8],
    weights: &[f64],
) -> Result<LrStat, EstimateError> {
    let df = alt_design.cols() as i64 - null_design.cols() as i64;
    if df <= 0 {
        return Err(EstimateError::NonPositiveDf(df));
    }
    if null_design.rows() != alt_design.rows() || outcome.len() != alt_design.rows() || weights.len() != outcome.len()
    {
        return Err(EstimateError::Data("designs, outcome and weights must share rows".into()));
    }
    let mut rho = 0.0;
    for (i, (&y, &w)) in outcome.iter().zip(weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        rho += w * (row_loglik(alt, alt_design, i, y) - row_loglik(null, null_design, i, y));
    }
    Ok(LrStat {
        rho,
        two_rho: 2.0 * rho,
        df: df as u32,
        rao_scott: None,
    })
}

/// [`weighted_lr_stat`] with the Rao–Scott correction computed at the
/// alternative fit for the columns the null lacks. Unit weights need none.
fn corrected_stat(
    null: &PropensityFit,
    null_design: &DesignMatrix,
    alt: &PropensityFit,
    alt_f: &Features,
    weights: &[f64],
) -> Result<LrStat, EstimateError> {
    let mut stat = weighted_lr_stat(null, null_design, alt, &alt_f.design, &alt_f.outcome, weights)?;
    if weights.iter().any(|&w| w != 0.0 && w != 1.0) {
        let tested: Vec<usize> = (0..alt_f.design.cols())
            .filter(|&c| !null_design.names().contains(&alt_f.design.names()[c]))
            .collect();
        stat.rao_scott = rao_scott(&alt_f.design, &alt_f.outcome, weights, &alt.coefficients, &tested);
    }
    Ok(stat)
}

fn row_loglik(fit: &PropensityFit, design: &DesignMatrix, row: usize, y: u8) -> f64 {
    let eta = fit.linear_predictor(design.row(row));
    if y == 1 {
        log_expit(eta)
    } else {
        log_expit(-eta)
    }
}


/// Fits a propensity model; a degenerate outcome is the boundary maximum
/// (propensity 0 or 1) and is kept, separation and non-convergence are not.
fn fit_model(
    f: &Features,
    weights: &[f64],
    variable: &str,
    model: &'static str,
) -> Result<PropensityFit, EstimateError> {
    let fit = fit_weighted_logistic(&f.design, &f.outcome, weights)?;
    match fit.status {
        FitStatus::Converged | FitStatus::DegenerateOutcome => Ok(fit),
        status => Err(EstimateError::FitFailed {
            variable: variable.to_string(),
            model,
            status,
        }),
    }
}

fn clip(p: f64, clipped: &mut usize) -> f64 {
    if p < PROPENSITY_FLOOR {
        *clipped += 1;
        PROPENSITY_FLOOR
    } else {
        p.min(1.0)
    }
}

/// Drives the MAR or MNAR cascade. `on_step` sees each tested step right
/// after it is fit and returns whether to continue (a rejected null stops
/// the algorithm). A fit failure stops the run and is returned alongside the
/// steps completed so far.
pub fn run_cascade(
    data: &ObservedDataset,
    order: &[usize],
    kind: CascadeKind,
    mut on_step: impl FnMut(&CascadeStep) -> bool,
) -> Result<(PropensityCascade, Option<StepFailure>), EstimateError> {
    data.check_order(order)?;
    let names = data.names();
    let mut cascade = PropensityCascade {
        kind,
        order: order.iter().map(|&i| names[i].clone()).collect(),
        steps: Vec::new(),
        nulls: Vec::new(),
    };
    let k_total = order.len();
    let n = data.n();
    let fail = |position: usize, error: EstimateError| {
        Some(StepFailure {
            position,
            variable: names[order[position - 1]].clone(),
            error,
        })
    };

    match kind {
        CascadeKind::Mar => {
            // fitted null propensities p(R = 1 | past) on every row, by position
            let mut null_probs: Vec<Option<Vec<f64>>> = vec![None; k_total];
            for p in (0..k_total).rev() {
                let target = order[p];
                let past: Vec<Block> = order[..p].iter().map(|&j| Block::Proxy(j)).collect();
                let null_f = match build_features(data, target, &past) {
                    Ok(f) => f,
                    Err(e) => return Ok((cascade, fail(p + 1, e))),
                };
                let null = match fit_model(&null_f, &vec![1.0; n], &names[target], "null") {
                    Ok(f) => f,
                    Err(e) => return Ok((cascade, fail(p + 1, e))),
                };
                cascade.nulls.push(NullModel {
                    position: p + 1,
                    fit: null.clone(),
                    columns: null_f.design.names().to_vec(),
                });
                null_probs[p] = Some((0..n).map(|i| null.predict(null_f.design.row(i))).collect());
                if p + 1 == k_total {
                    continue;
                }
                let future: Vec<usize> = order[p + 1..].to_vec();
                let mut blocks = past.clone();
                blocks.extend(future.iter().map(|&j| Block::Counterfactual(j)));
                let alt_f = match build_features(data, target, &blocks) {
                    Ok(f) => f,
                    Err(e) => return Ok((cascade, fail(p + 1, e))),
                };
                let mut clipped = 0;
                let weights: Vec<f64> = alt_f
                    .rows
                    .iter()
                    .map(|&i| {
                        (p + 1..k_total)
                            .map(|q| 1.0 / clip(null_probs[q].as_ref().unwrap()[i], &mut clipped))
                            .product()
                    })
                    .collect();
                let mut diagnostics = WeightDiagnostics::from_weights(&weights, clipped);
                let null_rows = null_f.design.select_rows(&alt_f.rows);
                let step = if data.r(target).iter().all(|&r| r == 1) {
                    diagnostics.always_observed = true;
                    always_observed_step(p + 1, &names[target], null, &null_f, &alt_f, diagnostics)
                } else {
                    let alt = match fit_model(&alt_f, &weights, &names[target], "alternative") {
                        Ok(f) => f,
                        Err(e) => return Ok((cascade, fail(p + 1, e))),
                    };
                    // the null refit under the same rows and weights enters ρ only
                    let refit_f = Features {
                        design: null_rows,
                        rows: alt_f.rows.clone(),
                        mask: alt_f.mask.clone(),
                        outcome: alt_f.outcome.clone(),
                    };
                    let refit = match fit_model(&refit_f, &weights, &names[target], "null") {
                        Ok(f) => f,
                        Err(e) => return Ok((cascade, fail(p + 1, e))),
                    };
                    let stat = corrected_stat(&refit, &refit_f.design, &alt, &alt_f, &weights)?;
                    CascadeStep {
                        position: p + 1,
                        variable: names[target].clone(),
                        null,
                        null_columns: null_f.design.names().to_vec(),
                        null_refit: Some(refit),
                        alt,
                        alt_columns: alt_f.design.names().to_vec(),
                        stat,
                        diagnostics,
                    }
                };
                let go_on = on_step(&step);
                cascade.steps.push(step);
                if !go_on {
                    break;
                }
            }
        }
        CascadeKind::Mnar => {
            let mut omega = vec![1.0; n];
            let mut clipped_total = 0;
            for p in (1..k_total).rev() {
                let target = order[p];
                let mut null_blocks: Vec<Block> = order[..p].iter().map(|&j| Block::Indicator(j)).collect();
                null_blocks.extend(order[p + 1..].iter().map(|&j| Block::Counterfactual(j)));
                let mut alt_blocks = null_blocks.clone();
                alt_blocks.extend(order[..p].iter().map(|&j| Block::Proxy(j)));
                let (null_f, alt_f) = match (
                    build_features(data, target, &null_blocks),
                    build_features(data, target, &alt_blocks),
                ) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => return Ok((cascade, fail(p + 1, e))),
                };
                let weights: Vec<f64> = null_f.rows.iter().map(|&i| omega[i]).collect();
                let mut diagnostics = WeightDiagnostics::from_weights(&weights, clipped_total);
                let null = match fit_model(&null_f, &weights, &names[target], "null") {
                    Ok(f) => f,
                    Err(e) => return Ok((cascade, fail(p + 1, e))),
                };
                cascade.nulls.push(NullModel {
                    position: p + 1,
                    fit: null.clone(),
                    columns: null_f.design.names().to_vec(),
                });
                let step = if data.r(target).iter().all(|&r| r == 1) {
                    diagnostics.always_observed = true;
                    always_observed_step(p + 1, &names[target], null.clone(), &null_f, &alt_f, diagnostics)
                } else {
                    let alt = match fit_model(&alt_f, &weights, &names[target], "alternative") {
                        Ok(f) => f,
                        Err(e) => return Ok((cascade, fail(p + 1, e))),
                    };
                    let stat = corrected_stat(&null, &null_f.design, &alt, &alt_f, &weights)?;
                    CascadeStep {
                        position: p + 1,
                        variable: names[target].clone(),
                        null: null.clone(),
                        null_columns: null_f.design.names().to_vec(),
                        null_refit: None,
                        alt,
                        alt_columns: alt_f.design.names().to_vec(),
                        stat,
                        diagnostics,
                    }
                };
                let go_on = on_step(&step);
                cascade.steps.push(step);
                if !go_on {
                    break;
                }
                // Ω ← Ω · R_k / W_k over the rows the null was fit on; zero elsewhere
                let mut next = vec![0.0; n];
                for (d, &i) in null_f.rows.iter().enumerate() {
                    if data.r(target)[i] == 1 && omega[i] > 0.0 {
                        let w = clip(null.predict(null_f.design.row(d)), &mut clipped_total);
                        next[i] = omega[i] / w;
                    }
                }
                omega = next;
            }
        }
    }
    Ok((cascade, None))
}

fn always_observed_step(
    position: usize,
    variable: &str,
    null: PropensityFit,
    null_f: &Features,
    alt_f: &Features,
    diagnostics: WeightDiagnostics,
) -> CascadeStep {
    let df = (alt_f.design.cols() - null_f.design.cols()) as u32;
    let mut alt = null.clone();
    alt.coefficients = vec![0.0; alt_f.design.cols()];
    alt.coefficients[0] = f64::INFINITY;
    CascadeStep {
        position,
        variable: variable.to_string(),
        null,
        null_columns: null_f.design.names().to_vec(),
        null_refit: None,
        alt,
        alt_columns: alt_f.design.names().to_vec(),
        stat: LrStat {
            rho: 0.0,
            two_rho: 0.0,
            df,
            rao_scott: None,
        },
        diagnostics,
    }
}

fn run_all(data: &ObservedDataset, order: &[usize], kind: CascadeKind) -> Result<PropensityCascade, EstimateError> {
    let (cascade, failure) = run_cascade(data, order, kind, |_| true)?;
    match failure {
        Some(f) => Err(f.error),
        None => Ok(cascade),
    }
}

/// Every step of the MAR cascade, assuming each null is accepted.
pub fn fit_cascade_mar(data: &ObservedDataset, order: &[usize]) -> Result<PropensityCascade, EstimateError> {
    run_all(data, order, CascadeKind::Mar)
}

/// Every step of the MNAR cascade, assuming each null is accepted.
pub fn fit_cascade_mnar(data: &ObservedDataset, order: &[usize]) -> Result<PropensityCascade, EstimateError> {
    run_all(data, order, CascadeKind::Mnar)
}
