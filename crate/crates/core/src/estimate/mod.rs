//! Inverse-probability-weighted propensity cascades, the weighted
//! likelihood-ratio statistic and odds-ratio estimators.

mod cascade;
mod dataset;
mod features;
mod law;
mod odds;

pub use cascade::{
    fit_cascade_mar, fit_cascade_mnar, run_cascade, weighted_lr_stat, CascadeKind, CascadeStep, LrStat,
    PropensityCascade, StepFailure, WeightDiagnostics, PROPENSITY_FLOOR,
};
pub use dataset::ObservedDataset;
pub use features::{build_features, Block, Features};
pub use law::{DiscreteLaw, ObservedLaw, Probability};
pub use odds::{estimate_odds_ratio, odds_ratio_point, population_odds_ratio, OddsRatioEstimate};

use thiserror::Error;

use crate::numerics::{FitStatus, NumericsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("invalid dataset: {0}")]
    Data(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("ordering must list every variable exactly once (problem with `{0}`)")]
    BadOrder(String),
    #[error("no rows remain for the {variable} model after restricting to observed values")]
    EmptyMask { variable: String },
    #[error("feature block {0} is not allowed for this target")]
    IllegalBlock(String),
    #[error("{model} propensity fit for {variable} did not converge ({status:?})")]
    FitFailed {
        variable: String,
        model: &'static str,
        status: FitStatus,
    },
    #[error("alternative must have more parameters than the null (df = {0})")]
    NonPositiveDf(i64),
    #[error("odds ratio for ({0}, {1}) has a zero denominator")]
    ZeroDenominator(String, String),
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
