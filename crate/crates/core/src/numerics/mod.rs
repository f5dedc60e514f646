//! Numerical kernel: weighted logistic regression, chi-square tails,
//! random generation for the simulation designs and exact rationals.

mod chisq;
mod logistic;
mod mvn;
mod rational;
mod rng;

pub use chisq::{chisq_sf, ln_gamma, regularized_gamma_q};
pub use logistic::{
    fit_weighted_logistic, rao_scott, weighted_loglik, weighted_score, DesignMatrix, FitStatus,
    PropensityFit, RaoScott, MAX_ITERATIONS, SCORE_TOLERANCE, SEPARATION_BOUND,
};
pub use mvn::{cholesky_psd, study_covariance, sample_mvn};
pub use rational::Rational;
pub use rng::{bernoulli, expit, log_expit, RngStream};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("design has {rows} rows but {what} has length {len}")]
    LengthMismatch {
        rows: usize,
        what: &'static str,
        len: usize,
    },
    #[error("design matrix needs at least one column")]
    NoColumns,
    #[error("design matrix has a non-finite entry at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("outcome at row {0} is not 0 or 1")]
    InvalidOutcome(usize),
    #[error("weight at row {0} is negative or non-finite")]
    InvalidWeight(usize),
    #[error("degrees of freedom must be at least 1")]
    InvalidDf,
    #[error("chi-square statistic must be non-negative and finite, got {0}")]
    InvalidStatistic(f64),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("covariance matrix is not symmetric positive semi-definite")]
    NotPsd,
    #[error("mean has length {mean} but covariance is {cov}x{cov}")]
    DimensionMismatch { mean: usize, cov: usize },
    #[error("cannot parse rational `{0}`")]
    ParseRational(String),
    #[error("rational with zero denominator")]
    ZeroDenominator,
}
