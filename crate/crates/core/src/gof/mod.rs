//! End-to-end goodness-of-fit procedures and their JSON reports.

mod counterexample;

pub use counterexample::{verify_crisscross_counterexample, CounterexampleRecord, FullLawRow, ObservedLawRow};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::estimate::{
    estimate_odds_ratio, run_cascade, CascadeKind, CascadeStep, EstimateError, ObservedDataset, WeightDiagnostics,
};
use crate::mdag::{detect_structures, MDag, StructureReport};
use crate::numerics::{RaoScott, RngStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GofError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("the declared graph has a colluder or criss-cross, so the sequential MNAR statistic is not identified")]
    NotIdentified(Box<StructureReport>),
    #[error("graph variables do not match the data columns")]
    GraphMismatch,
    #[error("unknown model `{0}` (expected seq-mar, seq-mnar or block-parallel)")]
    UnknownModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SeqMar,
    SeqMnar,
    BlockParallel,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::SeqMar => "seq-mar",
            ModelKind::SeqMnar => "seq-mnar",
            ModelKind::BlockParallel => "block-parallel",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = GofError;
    fn from_str(s: &str) -> Result<Self, GofError> {
        match s {
            "seq-mar" => Ok(ModelKind::SeqMar),
            "seq-mnar" => Ok(ModelKind::SeqMnar),
            "block-parallel" => Ok(ModelKind::BlockParallel),
            other => Err(GofError::UnknownModel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Accept,
    Reject,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Accepted,
    Rejected,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accepted => "accepted",
            Verdict::Rejected => "rejected",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Position in the ordering for sequential tests, variable pair for block-parallel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum StepKey {
    Position(usize),
    Pair([String; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum StepDiagnostics {
    Weights {
        #[serde(flatten)]
        weights: WeightDiagnostics,
        /// Moment correction applied to the statistic under non-trivial weights.
        correction: Option<RaoScott>,
    },
    Bootstrap {
        confidence_interval: Option<(f64, f64)>,
        n_bootstrap: usize,
        failed_resamples: usize,
    },
    Failure {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub k: StepKey,
    /// `2ρ` for sequential steps, `θ̂` for block-parallel pairs.
    pub statistic: Option<f64>,
    pub df: Option<u32>,
    pub p_value: Option<f64>,
    pub decision: Decision,
    pub diagnostics: StepDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub model: ModelKind,
    pub order: Vec<String>,
    pub alpha: f64,
    pub steps: Vec<StepRecord>,
    pub verdict: Verdict,
}

impl TestReport {
    fn new(model: ModelKind, order: Vec<String>, alpha: f64, steps: Vec<StepRecord>) -> Self {
        let verdict = if steps.iter().any(|s| s.decision == Decision::Reject) {
            Verdict::Rejected
        } else if steps.iter().any(|s| s.decision == Decision::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Accepted
        };
        Self {
            model,
            order,
            alpha,
            steps,
            verdict,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_alpha(alpha: f64) -> Result<(), GofError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(GofError::BadAlpha(alpha))
    }
}

fn sequential(
    data: &ObservedDataset,
    order: &[usize],
    alpha: f64,
    kind: CascadeKind,
    model: ModelKind,
) -> Result<TestReport, GofError> {
    check_alpha(alpha)?;
    let mut steps = Vec::new();
    let (cascade, failure) = run_cascade(data, order, kind, |s: &CascadeStep| {
        let p = s.stat.p_value();
        let decision = if p < alpha { Decision::Reject } else { Decision::Accept };
        steps.push(StepRecord {
            k: StepKey::Position(s.position),
            statistic: Some(s.stat.two_rho),
            df: Some(s.stat.df),
            p_value: Some(p),
            decision,
            diagnostics: StepDiagnostics::Weights {
                weights: s.diagnostics.clone(),
                correction: s.stat.rao_scott,
            },
        });
        decision == Decision::Accept
    })?;
    if let Some(f) = failure {
        steps.push(StepRecord {
            k: StepKey::Position(f.position),
            statistic: None,
            df: None,
            p_value: None,
            decision: Decision::Inconclusive,
            diagnostics: StepDiagnostics::Failure {
                error: f.error.to_string(),
            },
        });
    }
    Ok(TestReport::new(model, cascade.order, alpha, steps))
}

/// Backward sequential MAR test with early exit on the first rejection.
pub fn test_sequential_mar(data: &ObservedDataset, order: &[usize], alpha: f64) -> Result<TestReport, GofError> {
    sequential(data, order, alpha, CascadeKind::Mar, ModelKind::SeqMar)
}

/// Backward sequential MNAR test. When a graph is supplied it must have the
/// data's variables and no colluder or criss-cross.
pub fn test_sequential_mnar(
    data: &ObservedDataset,
    order: &[usize],
    alpha: f64,
    graph: Option<&MDag>,
) -> Result<TestReport, GofError> {
    if let Some(g) = graph {
        if g.variables() != data.names() {
            return Err(GofError::GraphMismatch);
        }
        let report = detect_structures(g);
        if !report.colluders.is_empty() || !report.criss_crosses.is_empty() {
            return Err(GofError::NotIdentified(Box::new(report)));
        }
    }
    sequential(data, order, alpha, CascadeKind::Mnar, ModelKind::SeqMnar)
}

/// Odds-ratio test on every unordered pair; pair `i` in lexicographic order
/// bootstraps from `RngStream::new(seed).child(i)`.
pub fn test_block_parallel(
    data: &ObservedDataset,
    alpha: f64,
    n_bootstrap: usize,
    seed: u64,
) -> Result<TestReport, GofError> {
    check_alpha(alpha)?;
    let root = RngStream::new(seed);
    let k = data.k();
    let mut steps = Vec::new();
    let mut pair_index = 0;
    for a in 0..k {
        for b in a + 1..k {
            let names = [data.names()[a].clone(), data.names()[b].clone()];
            let rng = root.child(pair_index);
            pair_index += 1;
            let record = match estimate_odds_ratio(data, a, b, alpha, n_bootstrap, &rng) {
                Ok(e) => StepRecord {
                    k: StepKey::Pair(names),
                    statistic: Some(e.theta_hat),
                    df: None,
                    p_value: None,
                    decision: match e.excludes_one() {
                        Some(true) => Decision::Reject,
                        Some(false) => Decision::Accept,
                        None => Decision::Inconclusive,
                    },
                    diagnostics: StepDiagnostics::Bootstrap {
                        confidence_interval: e.bootstrap_ci,
                        n_bootstrap: e.n_bootstrap,
                        failed_resamples: e.failed_resamples,
                    },
                },
                Err(e) => StepRecord {
                    k: StepKey::Pair(names),
                    statistic: None,
                    df: None,
                    p_value: None,
                    decision: Decision::Inconclusive,
                    diagnostics: StepDiagnostics::Failure { error: e.to_string() },
                },
            };
            steps.push(record);
        }
    }
    Ok(TestReport::new(ModelKind::BlockParallel, data.names().to_vec(), alpha, steps))
}
