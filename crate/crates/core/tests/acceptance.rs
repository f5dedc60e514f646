//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exact criteria (1, 2, 3, 7, 8) abort the run when they fail. The Monte
//! Carlo criteria (4, 5, 6) report their measured rates and a FAIL line
//! without aborting, since their outcome at a fixed seed carries sampling
//! error.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::graph::dsep_agreement;
use common::oracles::{
    chisq_sf_quadrature, direct_odds_ratio, grid_search_logistic, nsc_law, random_law,
};
use common::properties;
use mdag_gof::estimate::population_odds_ratio;
use mdag_gof::gof::{verify_crisscross_counterexample, Verdict};
use mdag_gof::mdag::{count_parameters, Cardinality, MDag};
use mdag_gof::numerics::{chisq_sf, fit_weighted_logistic, DesignMatrix, FitStatus, Rational};
use mdag_gof::simulate::{run_study, Distribution, Scenario, ScenarioConfig, StudyResult};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn counterexample() -> Outcome {
    let t = Instant::now();
    let rec = verify_crisscross_counterexample();
    let secs = t.elapsed().as_secs_f64();
    let failed: Vec<&str> = rec.checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect();
    let marginals = rec.m1_p_x1_zero == Rational::frac(7, 15) && rec.m2_p_x1_zero == Rational::frac(5, 11);
    let p00 = rec
        .observed_law
        .iter()
        .filter(|o| o.r1 == 0 && o.r2 == 0)
        .fold(Rational::frac(0, 1), |a, o| a + o.p.clone());
    let pass = rec.passed && marginals && p00 == Rational::frac(68, 100) && secs < 1.0;
    outcome(
        pass,
        format!(
            "{} checks, failed: {:?}; p(R=00) = {p00}; p(X1=0) {} vs {}; {secs:.3}s",
            rec.checks.len(),
            failed,
            rec.m1_p_x1_zero,
            rec.m2_p_x1_zero
        ),
    )
}

fn parameter_counts() -> Outcome {
    let binary = [Cardinality::Finite(2); 2];
    let count = |g: &MDag| {
        let c = count_parameters(g, &binary).expect("count");
        (c.full_law, c.saturated_observed)
    };
    let seq_mar = MDag::from_edges(&["X1", "X2"], &[("X1", "X2"), ("R1", "R2"), ("X1*", "R2")]).unwrap();
    let permutation =
        MDag::from_edges(&["X1", "X2"], &[("X1", "X2"), ("X2", "R1"), ("R1", "R2"), ("X1*", "R2")]).unwrap();
    let mut nsc = MDag::from_edges(&["X1", "X2"], &[("X1", "X2"), ("X2", "R1"), ("X1", "R2")]).unwrap();
    nsc.add_undirected_by_name("R1", "R2").unwrap();
    let got = [count(&seq_mar), count(&permutation), count(&nsc)];
    outcome(got == [(7, 8), (8, 8), (8, 8)], format!("seq-mar {:?}, permutation {:?}, no-self-censoring {:?}", got[0], got[1], got[2]))
}

fn dsep() -> Outcome {
    let t = Instant::now();
    let res = dsep_agreement(SEED, 10_000);
    let secs = t.elapsed().as_secs_f64();
    match res {
        Ok((n, sep)) => outcome(n == 10_000 && secs < 30.0, format!("{n}/10000 agree ({sep} separated); {secs:.1}s")),
        Err(e) => outcome(false, format!("disagreement: {e}")),
    }
}

fn study(scenario: Scenario, dist: Distribution, range: (f64, f64)) -> StudyResult {
    let config = ScenarioConfig {
        seed: SEED,
        param_range: range,
        ..ScenarioConfig::new(scenario, dist)
    };
    run_study(&config).expect("study")
}

/// Conservative rates: inconclusive replications never help a criterion.
fn null_acceptance(s: &StudyResult) -> f64 {
    s.accepted as f64 / s.replications.len() as f64
}

fn alt_acceptance(s: &StudyResult) -> f64 {
    1.0 - s.rejected as f64 / s.replications.len() as f64
}

fn describe(s: &StudyResult) -> String {
    format!(
        "{}/{} accepted, {} inconclusive, {:.0}% complete",
        s.accepted,
        s.replications.len(),
        s.inconclusive,
        100.0 * s.mean_complete_case
    )
}

fn sequential_mar() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for dist in [Distribution::Binary, Distribution::Gaussian] {
        let null = study(Scenario::MarNull, dist, (0.0, 2.0));
        let alt = study(Scenario::MarAlt, dist, (0.0, 2.0));
        let (a0, a1) = (null_acceptance(&null), alt_acceptance(&alt));
        pass &= a0 >= 0.85 && a1 <= 0.10;
        parts.push(format!(
            "{dist}: null {a0:.2} [{}] (>= 0.85), alt {a1:.2} [{}] (<= 0.10)",
            describe(&null),
            describe(&alt)
        ));
    }
    parts.push(format!("{:.0}s", t.elapsed().as_secs_f64()));
    outcome(pass, parts.join("; "))
}

fn sequential_mnar() -> Outcome {
    let t = Instant::now();
    let null = study(Scenario::MnarNull, Distribution::Binary, (0.0, 2.0));
    let alt = study(Scenario::MnarAlt, Distribution::Binary, (0.0, 2.0));
    let sparse = study(Scenario::MnarAlt, Distribution::Binary, (-1.0, 1.0));
    let (a0, a1, a2) = (null_acceptance(&null), alt_acceptance(&alt), alt_acceptance(&sparse));
    let pass = a0 >= 0.80 && a1 <= 0.20 && a2 <= 0.30;
    outcome(
        pass,
        format!(
            "binary: null {a0:.2} [{}] (>= 0.80), alt {a1:.2} [{}] (<= 0.20), alt at (-1,1) {a2:.2} [{}] (<= 0.30); {:.0}s",
            describe(&null),
            describe(&alt),
            describe(&sparse),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn block_parallel() -> Outcome {
    let t = Instant::now();
    let null = study(Scenario::BpNull, Distribution::Binary, (0.0, 2.0));
    let alt = study(Scenario::BpAlt, Distribution::Binary, (0.0, 2.0));
    let reps = null.replications.len() as f64;
    let med = median(null.replications.iter().filter_map(|r| r.theta_hat).collect());
    let covered = null.replications.iter().filter(|r| r.ci.is_some_and(|(lo, hi)| lo <= 1.0 && hi >= 1.0)).count();
    let excluded = alt.replications.iter().filter(|r| r.verdict == Verdict::Rejected).count();
    let coverage = covered as f64 / reps;
    let power = excluded as f64 / alt.replications.len() as f64;
    let pass = (0.8..=1.25).contains(&med) && coverage >= 0.85 && power >= 0.50;
    outcome(
        pass,
        format!(
            "binary: null median {med:.3} (in [0.8, 1.25]), coverage {coverage:.2} (>= 0.85, {} without interval); alt excludes 1 in {power:.2} (>= 0.50, {} without interval); {:.0}s",
            null.inconclusive,
            alt.inconclusive,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn unit_oracles() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let x = [-1.5, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0];
    let y = [0u8, 0, 1, 0, 1, 0, 1, 1];
    let w: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
    let d = DesignMatrix::with_intercept(8, vec![("x".into(), x.to_vec())]).unwrap();
    let fit = fit_weighted_logistic(&d, &y, &w).unwrap();
    let (b0, b1) = grid_search_logistic(&x, &y, &w);
    let err = (fit.coefficients[0] - b0).abs().max((fit.coefficients[1] - b1).abs());
    pass &= fit.status == FitStatus::Converged && err <= 1e-4;
    notes.push(format!("logistic vs grid {err:.1e}"));

    let mut or_err: f64 = 0.0;
    for seed in 0..50 {
        let (law, psi) = nsc_law(seed);
        for (k, j) in [(0, 1), (0, 2), (1, 2)] {
            let est = population_odds_ratio(&law, k, j).unwrap_or(f64::NAN);
            or_err = or_err.max((est - psi[k][j]).abs());
            for bits in 0..8 {
                let x = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
                or_err = or_err.max((est - direct_odds_ratio(&law, k, j, &x)).abs());
            }
        }
    }
    pass &= or_err <= 1e-12;
    notes.push(format!("population OR vs enumeration {or_err:.1e}"));

    let q = 3.841_458_820_694_124;
    let chi_err = (chisq_sf(q, 1).unwrap() - chisq_sf_quadrature(q, 1)).abs();
    pass &= chi_err <= 1e-4;
    notes.push(format!("chi-square tail vs quadrature {chi_err:.1e}"));

    let mut norm_err: f64 = 0.0;
    for seed in 0..50u64 {
        let law = random_law(seed, vec![2, 3, 2]);
        for j in 0..3 {
            let xp: Vec<usize> = (0..3).filter(|&i| (seed >> i) & 1 == 1).collect();
            let rp: Vec<usize> = (0..3).filter(|&i| i != j && (seed >> (i + 3)) & 1 == 1).collect();
            let t = law.truncate(j, &xp, &rp);
            for v in [0u8, 1] {
                norm_err = norm_err.max((t.slice_total(j, v) - 1.0).abs());
            }
        }
    }
    pass &= norm_err <= 1e-12;
    notes.push(format!("truncation normalization {norm_err:.1e}"));
    outcome(pass, notes.join(", "))
}

fn property_suite() -> Outcome {
    let mut failed = Vec::new();
    let mut total = 0;
    for (name, check) in properties::ALL {
        let cases = if name.starts_with("fixed seed") { 12 } else { 256 };
        let mut runner = TestRunner::new_with_rng(
            Config {
                cases,
                failure_persistence: None,
                ..Config::default()
            },
            proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
        );
        total += cases;
        if let Err(e) = runner.run(&any::<u64>(), |seed| check(seed).map_err(TestCaseError::fail)) {
            failed.push(format!("{name}: {e}"));
        }
    }
    let n = properties::ALL.len();
    outcome(
        failed.is_empty(),
        format!("{}/{n} properties green over {total} cases{}", n - failed.len(), if failed.is_empty() { String::new() } else { format!("; {}", failed.join("; ")) }),
    )
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, bool, fn() -> Outcome); 8] = [
        (1, "criss-cross counterexample", true, counterexample),
        (2, "parameter counting", true, parameter_counts),
        (3, "d-separation oracle", true, dsep),
        (4, "sequential MAR acceptance rates", false, sequential_mar),
        (5, "sequential MNAR acceptance rates", false, sequential_mnar),
        (6, "block-parallel odds ratio", false, block_parallel),
        (7, "estimator unit oracles", true, unit_oracles),
        (8, "property suite", true, property_suite),
    ];
    let mut exact_failures = 0;
    let mut passed = 0;
    for (id, name, exact, run) in criteria {
        let o = run();
        println!("criterion {id} ({name}): {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        passed += o.pass as usize;
        exact_failures += (!o.pass && exact) as usize;
    }
    println!("acceptance: {passed}/8 criteria passed");
    if exact_failures > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
