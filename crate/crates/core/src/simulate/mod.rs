//! Simulation designs for the three test families, replicated studies and
//! acceptance-rate curves.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estimate::{estimate_odds_ratio, EstimateError, ObservedDataset};
use crate::gof::{test_sequential_mar, test_sequential_mnar, GofError, StepKey, Verdict};
use crate::numerics::{bernoulli, expit, study_covariance, sample_mvn, NumericsError, RngStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Gof(#[from] GofError),
    #[error("cannot write CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    MarNull,
    MarAlt,
    MnarNull,
    MnarAlt,
    BpNull,
    BpAlt,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::MarNull,
        Scenario::MarAlt,
        Scenario::MnarNull,
        Scenario::MnarAlt,
        Scenario::BpNull,
        Scenario::BpAlt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::MarNull => "mar-null",
            Scenario::MarAlt => "mar-alt",
            Scenario::MnarNull => "mnar-null",
            Scenario::MnarAlt => "mnar-alt",
            Scenario::BpNull => "bp-null",
            Scenario::BpAlt => "bp-alt",
        }
    }

    pub fn is_block_parallel(self) -> bool {
        matches!(self, Scenario::BpNull | Scenario::BpAlt)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| SimError::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    Gaussian,
    Binary,
}

impl FromStr for Distribution {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "gaussian" => Ok(Distribution::Gaussian),
            "binary" => Ok(Distribution::Binary),
            other => Err(SimError::Config(format!("unknown distribution `{other}`"))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Gaussian => "gaussian",
            Distribution::Binary => "binary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub dist: Distribution,
    pub k: usize,
    pub n: usize,
    pub reps: usize,
    pub param_range: (f64, f64),
    pub alpha: f64,
    pub seed: u64,
    /// Resamples per odds-ratio interval (block-parallel scenarios only).
    pub n_bootstrap: usize,
}

impl ScenarioConfig {
    /// Four variables, n = 10 000, 100 replications, range (0, 2), α = 0.05.
    pub fn new(scenario: Scenario, dist: Distribution) -> Self {
        Self {
            scenario,
            dist,
            k: 4,
            n: 10_000,
            reps: 100,
            param_range: (0.0, 2.0),
            alpha: 0.05,
            seed: 0,
            n_bootstrap: 200,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let (lo, hi) = self.param_range;
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad("parameter range needs lo < hi");
        }
        if self.k < 2 {
            return bad("need at least two variables");
        }
        if self.n == 0 || self.reps == 0 {
            return bad("n and reps must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.dist == Distribution::Gaussian && self.k > 5 {
            return bad("the banded Gaussian covariance is only valid for up to 5 variables");
        }
        if self.scenario.is_block_parallel() && self.n_bootstrap < 2 {
            return bad("block-parallel studies need at least 2 bootstrap resamples");
        }
        Ok(())
    }
}

/// Coefficients of the missingness models, `k × k` tables indexed
/// `[target][other]`; unused cells are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessCoefficients {
    pub a0: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

impl MissingnessCoefficients {
    pub fn draw<R: Rng + ?Sized>(k: usize, (lo, hi): (f64, f64), rng: &mut R) -> Self {
        let mut table = || -> Vec<Vec<f64>> { (0..k).map(|_| (0..k).map(|_| rng.random_range(lo..hi)).collect()).collect() };
        let b = table();
        let c = table();
        let d = table();
        let a0 = (0..k).map(|_| rng.random_range(lo..hi)).collect();
        Self { a0, b, c, d }
    }

    /// Intercept `a0` for every target and every other coefficient zero.
    pub fn constant(k: usize, a0: f64) -> Self {
        Self {
            a0: vec![a0; k],
            b: vec![vec![0.0; k]; k],
            c: vec![vec![0.0; k]; k],
            d: vec![vec![0.0; k]; k],
        }
    }
}

/// `p(R_t = 1 | ·)` for one row. `x` is the full row; only the entries of
/// `r` that the scenario's formula references are read.
pub fn propensity(scenario: Scenario, coef: &MissingnessCoefficients, t: usize, x: &[f64], r: &[u8]) -> f64 {
    let k = x.len();
    let rf = |j: usize| r[j] as f64;
    let mut eta = coef.a0[t];
    match scenario {
        Scenario::MarNull | Scenario::MarAlt => {
            for j in 0..t {
                eta += coef.b[t][j] * rf(j) + coef.c[t][j] * rf(j) * x[j];
            }
            if scenario == Scenario::MarAlt {
                for i in t + 1..k {
                    eta += coef.d[t][i] * x[i];
                }
            }
        }
        Scenario::MnarNull | Scenario::MnarAlt => {
            for i in t + 1..k {
                eta += coef.d[t][i] * x[i];
            }
            for j in 0..t {
                eta += coef.b[t][j] * rf(j);
                if scenario == Scenario::MnarAlt {
                    eta += coef.c[t][j] * rf(j) * x[j];
                }
            }
        }
        Scenario::BpNull => {
            for j in (0..k).filter(|&j| j != t) {
                eta += coef.b[t][j] * x[j];
            }
        }
        Scenario::BpAlt => {
            for i in t + 1..k {
                eta += coef.b[t][i] * rf(i);
            }
            for j in 0..t {
                eta += coef.d[t][j] * x[j];
            }
        }
    }
    expit(eta)
}

/// Full data `X` as one column per variable.
pub fn generate_full_data<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Vec<Vec<f64>>, SimError> {
    let (k, n) = (config.k, config.n);
    match config.dist {
        Distribution::Gaussian => {
            let rows = sample_mvn(n, &vec![0.0; k], &study_covariance(k), rng)?;
            Ok((0..k).map(|j| rows.iter().map(|row| row[j]).collect()).collect())
        }
        Distribution::Binary => {
            // a[t][0] is the intercept, a[t][1 + j] the weight on X_j for j < t
            let a: Vec<Vec<f64>> = (0..k).map(|t| (0..=t).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            binary_chain(&a, n, rng)
        }
    }
}

/// Sequential binary chain `p(X_t = 1 | X_{<t}) = expit(a_t0 + Σ a_tj X_j)`.
pub fn binary_chain<R: Rng + ?Sized>(a: &[Vec<f64>], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>, SimError> {
    let k = a.len();
    let mut cols = vec![Vec::with_capacity(n); k];
    let mut row = vec![0.0; k];
    for _ in 0..n {
        for t in 0..k {
            let eta = a[t][0] + (0..t).map(|j| a[t][1 + j] * row[j]).sum::<f64>();
            row[t] = bernoulli(expit(eta), rng)? as f64;
            cols[t].push(row[t]);
        }
    }
    Ok(cols)
}

/// Draws `R` row by row and masks `X`. Sequential designs generate
/// `R_1, …, R_K` forward using the full `X` for future-variable terms; the
/// violated block-parallel design generates `R_K, …, R_1`.
pub fn generate_missingness<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    scenario: Scenario,
    coef: &MissingnessCoefficients,
    rng: &mut R,
) -> Result<ObservedDataset, SimError> {
    let k = x.len();
    let n = x.first().map_or(0, Vec::len);
    let mut r = vec![Vec::with_capacity(n); k];
    let mut row_x = vec![0.0; k];
    let mut row_r = vec![0u8; k];
    let order: Vec<usize> = if scenario == Scenario::BpAlt { (0..k).rev().collect() } else { (0..k).collect() };
    for i in 0..n {
        for j in 0..k {
            row_x[j] = x[j][i];
        }
        for &t in &order {
            row_r[t] = bernoulli(propensity(scenario, coef, t, &row_x, &row_r), rng)?;
        }
        for j in 0..k {
            r[j].push(row_r[j]);
        }
    }
    let names = (1..=k).map(|i| format!("X{i}")).collect();
    Ok(ObservedDataset::from_full(names, x, r)?)
}

/// The observed dataset of replication `rep`, drawn from `RngStream::new(seed).child(rep)`.
pub fn generate_dataset(config: &ScenarioConfig, rep: u64) -> Result<ObservedDataset, SimError> {
    config.validate()?;
    let mut rng = RngStream::new(config.seed).child(rep);
    let x = generate_full_data(config, &mut rng)?;
    let coef = MissingnessCoefficients::draw(config.k, config.param_range, &mut rng);
    generate_missingness(&x, config.scenario, &coef, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub index: usize,
    pub verdict: Verdict,
    pub complete_case: f64,
    /// First rejected step: ordering position, or the pair for block-parallel.
    pub rejected_step: Option<String>,
    pub theta_hat: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub config: ScenarioConfig,
    pub replications: Vec<ReplicationResult>,
    pub accepted: usize,
    pub rejected: usize,
    pub inconclusive: usize,
    /// `accepted / (accepted + rejected)`; inconclusive replications are
    /// reported but excluded from the denominator.
    pub acceptance_rate: f64,
    pub mean_complete_case: f64,
    /// Rejection counts keyed by step.
    pub step_rejections: Vec<(String, usize)>,
}

fn replicate(config: &ScenarioConfig, index: usize) -> ReplicationResult {
    let data = match generate_dataset(config, index as u64) {
        Ok(d) => d,
        Err(_) => {
            return ReplicationResult {
                index,
                verdict: Verdict::Inconclusive,
                complete_case: f64::NAN,
                rejected_step: None,
                theta_hat: None,
                ci: None,
            }
        }
    };
    let complete_case = data.complete_case_fraction();
    let order: Vec<usize> = (0..config.k).collect();
    let mut out = ReplicationResult {
        index,
        verdict: Verdict::Inconclusive,
        complete_case,
        rejected_step: None,
        theta_hat: None,
        ci: None,
    };
    match config.scenario {
        Scenario::BpNull | Scenario::BpAlt => {
            // the pair (R1, R2) only; bootstrap stream is a grandchild of the replication
            let rng = RngStream::new(config.seed).child(index as u64).child(u64::MAX);
            if let Ok(e) = estimate_odds_ratio(&data, 0, 1, config.alpha, config.n_bootstrap, &rng) {
                out.theta_hat = Some(e.theta_hat);
                out.ci = e.bootstrap_ci;
                out.verdict = match e.excludes_one() {
                    Some(true) => {
                        out.rejected_step = Some(format!("{},{}", e.pair.0, e.pair.1));
                        Verdict::Rejected
                    }
                    Some(false) => Verdict::Accepted,
                    None => Verdict::Inconclusive,
                };
            }
        }
        scenario => {
            let report = if matches!(scenario, Scenario::MarNull | Scenario::MarAlt) {
                test_sequential_mar(&data, &order, config.alpha)
            } else {
                test_sequential_mnar(&data, &order, config.alpha, None)
            };
            if let Ok(rep) = report {
                out.verdict = rep.verdict;
                out.rejected_step = rep
                    .steps
                    .iter()
                    .find(|s| s.decision == crate::gof::Decision::Reject)
                    .map(|s| match &s.k {
                        StepKey::Position(p) => p.to_string(),
                        StepKey::Pair([a, b]) => format!("{a},{b}"),
                    });
            }
        }
    }
    out
}

/// Runs `config.reps` independent replications in parallel; replication
/// `i` is fully determined by `(config, i)`.
pub fn run_study(config: &ScenarioConfig) -> Result<StudyResult, SimError> {
    config.validate()?;
    let replications: Vec<ReplicationResult> = (0..config.reps).into_par_iter().map(|i| replicate(config, i)).collect();
    let count = |v: Verdict| replications.iter().filter(|r| r.verdict == v).count();
    let (accepted, rejected, inconclusive) = (count(Verdict::Accepted), count(Verdict::Rejected), count(Verdict::Inconclusive));
    let decided = accepted + rejected;
    let cc: Vec<f64> = replications.iter().map(|r| r.complete_case).filter(|c| c.is_finite()).collect();
    let mut step_rejections: Vec<(String, usize)> = Vec::new();
    for step in replications.iter().filter_map(|r| r.rejected_step.clone()) {
        match step_rejections.iter_mut().find(|(s, _)| *s == step) {
            Some((_, c)) => *c += 1,
            None => step_rejections.push((step, 1)),
        }
    }
    step_rejections.sort();
    Ok(StudyResult {
        config: config.clone(),
        accepted,
        rejected,
        inconclusive,
        acceptance_rate: if decided > 0 { accepted as f64 / decided as f64 } else { f64::NAN },
        mean_complete_case: if cc.is_empty() { f64::NAN } else { cc.iter().sum::<f64>() / cc.len() as f64 },
        step_rejections,
        replications,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub acceptance_rate: f64,
    pub complete_case_pct: f64,
    pub inconclusive: usize,
}

impl CurvePoint {
    pub fn from_study(study: &StudyResult) -> Self {
        Self {
            n: study.config.n,
            acceptance_rate: study.acceptance_rate,
            complete_case_pct: 100.0 * study.mean_complete_case,
            inconclusive: study.inconclusive,
        }
    }
}

/// One study per sample size in `n_grid`, all sharing `config.seed`.
pub fn sweep_curve(config: &ScenarioConfig, n_grid: &[usize]) -> Result<Vec<CurvePoint>, SimError> {
    if n_grid.is_empty() {
        return Err(SimError::Config("empty sample-size grid".into()));
    }
    n_grid
        .iter()
        .map(|&n| {
            let study = run_study(&ScenarioConfig { n, ..config.clone() })?;
            Ok(CurvePoint::from_study(&study))
        })
        .collect()
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String, SimError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| SimError::Csv(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| SimError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SimError::Csv(e.to_string()))
}

/// `n,acceptance_rate,complete_case_pct,inconclusive`.
pub fn curve_csv(points: &[CurvePoint]) -> Result<String, SimError> {
    csv_string(|w| points.iter().try_for_each(|p| w.serialize(p)))
}

/// One row per replication: `replication,theta_hat,ci_lower,ci_upper,verdict`.
pub fn theta_csv(study: &StudyResult) -> Result<String, SimError> {
    csv_string(|w| {
        w.write_record(["replication", "theta_hat", "ci_lower", "ci_upper", "verdict"])?;
        for r in &study.replications {
            let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
            w.write_record([
                r.index.to_string(),
                f(r.theta_hat),
                f(r.ci.map(|c| c.0)),
                f(r.ci.map(|c| c.1)),
                r.verdict.to_string(),
            ])?;
        }
        Ok(())
    })
}
