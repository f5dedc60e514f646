//! Property checks parameterized by a seed. Each returns `Err` with a
//! description on violation; inapplicable draws (non-converged fits) pass.

use mdag_gof::estimate::{odds_ratio_point, weighted_lr_stat, ObservedDataset};
use mdag_gof::gof::test_block_parallel;
use mdag_gof::numerics::{
    bernoulli, expit, fit_weighted_logistic, weighted_loglik, weighted_score, DesignMatrix, FitStatus, RngStream,
};
use mdag_gof::simulate::{generate_dataset, run_study, Distribution, Scenario, ScenarioConfig};
use rand::Rng;

pub type Check = fn(u64) -> Result<(), String>;

/// Every property with its name, in reporting order.
pub const ALL: [(&str, Check); 7] = [
    ("gradient matches finite differences", gradient_matches_finite_differences),
    ("converged score is below 1e-6", converged_score_is_small),
    ("weight homogeneity leaves the argmax unchanged", weight_homogeneity),
    ("rho scales with the weights", rho_scales_with_weights),
    ("2rho >= -1e-6 under nesting", nested_statistic_is_nonnegative),
    ("odds-ratio estimate is symmetric", theta_symmetry),
    ("fixed seed gives identical results", determinism),
];

pub struct Problem {
    pub design: DesignMatrix,
    pub outcome: Vec<u8>,
    pub weights: Vec<f64>,
}

/// Random logistic data with `p` regressors and positive weights.
pub fn logistic_problem(rng: &mut RngStream, n: usize, p: usize) -> Problem {
    let beta: Vec<f64> = (0..=p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let outcome = (0..n)
        .map(|i| {
            let eta = beta[0] + (0..p).map(|c| beta[c + 1] * cols[c][i]).sum::<f64>();
            bernoulli(expit(eta), rng).expect("probability")
        })
        .collect();
    let weights = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    let design =
        DesignMatrix::with_intercept(n, cols.into_iter().enumerate().map(|(c, v)| (format!("z{c}"), v)).collect())
            .expect("design");
    Problem { design, outcome, weights }
}

pub fn gradient_matches_finite_differences(seed: u64) -> Result<(), String> {
    let mut rng = RngStream::new(seed);
    let n = rng.random_range(20..80);
    let p = rng.random_range(0..4);
    let pr = logistic_problem(&mut rng, n, p);
    let beta: Vec<f64> = (0..=p).map(|_| rng.random_range(-1.5..1.5)).collect();
    let g = weighted_score(&pr.design, &pr.outcome, &pr.weights, &beta);
    let h = 1e-5;
    for c in 0..=p {
        let (mut up, mut dn) = (beta.clone(), beta.clone());
        up[c] += h;
        dn[c] -= h;
        let fd = (weighted_loglik(&pr.design, &pr.outcome, &pr.weights, &up)
            - weighted_loglik(&pr.design, &pr.outcome, &pr.weights, &dn))
            / (2.0 * h);
        // relative error, with an absolute floor of one unit near a zero gradient
        if (g[c] - fd).abs() > 1e-4 * g[c].abs().max(1.0) {
            return Err(format!("coordinate {c}: analytic {} vs numeric {fd}", g[c]));
        }
    }
    Ok(())
}

pub fn converged_score_is_small(seed: u64) -> Result<(), String> {
    let mut rng = RngStream::new(seed);
    let pr = logistic_problem(&mut rng, 200, 2);
    let fit = fit_weighted_logistic(&pr.design, &pr.outcome, &pr.weights).map_err(|e| e.to_string())?;
    if fit.status != FitStatus::Converged {
        return Ok(());
    }
    let s = weighted_score(&pr.design, &pr.outcome, &pr.weights, &fit.coefficients);
    match s.iter().map(|v| v.abs()).fold(0.0, f64::max) {
        m if m < 1e-6 => Ok(()),
        m => Err(format!("score max-norm {m}")),
    }
}

pub fn weight_homogeneity(seed: u64) -> Result<(), String> {
    let mut rng = RngStream::new(seed);
    let pr = logistic_problem(&mut rng, 150, 2);
    let c: f64 = rng.random_range(0.1..10.0);
    let scaled: Vec<f64> = pr.weights.iter().map(|w| w * c).collect();
    let a = fit_weighted_logistic(&pr.design, &pr.outcome, &pr.weights).map_err(|e| e.to_string())?;
    let b = fit_weighted_logistic(&pr.design, &pr.outcome, &scaled).map_err(|e| e.to_string())?;
    if a.status != FitStatus::Converged || b.status != FitStatus::Converged {
        return Ok(());
    }
    for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
        if (x - y).abs() > 1e-6 * (1.0 + x.abs()) {
            return Err(format!("scale {c}: {:?} vs {:?}", a.coefficients, b.coefficients));
        }
    }
    Ok(())
}

/// Null uses the first regressor only, the alternative all of them.
fn nested_rho(pr: &Problem, weights: &[f64]) -> Result<Option<f64>, String> {
    let n = pr.design.rows();
    let first: Vec<f64> = (0..n).map(|r| pr.design.row(r)[1]).collect();
    let null_design = DesignMatrix::with_intercept(n, vec![("z0".into(), first)]).map_err(|e| e.to_string())?;
    let null = fit_weighted_logistic(&null_design, &pr.outcome, weights).map_err(|e| e.to_string())?;
    let alt = fit_weighted_logistic(&pr.design, &pr.outcome, weights).map_err(|e| e.to_string())?;
    if null.status != FitStatus::Converged || alt.status != FitStatus::Converged {
        return Ok(None);
    }
    let stat = weighted_lr_stat(&null, &null_design, &alt, &pr.design, &pr.outcome, weights).map_err(|e| e.to_string())?;
    Ok(Some(stat.rho))
}

pub fn rho_scales_with_weights(seed: u64) -> Result<(), String> {
    let mut rng = RngStream::new(seed);
    let pr = logistic_problem(&mut rng, 150, 3);
    let c: f64 = rng.random_range(0.1..10.0);
    let scaled: Vec<f64> = pr.weights.iter().map(|w| w * c).collect();
    match (nested_rho(&pr, &pr.weights)?, nested_rho(&pr, &scaled)?) {
        (Some(a), Some(b)) if (b - c * a).abs() > 1e-6 * (1.0 + (c * a).abs()) => {
            Err(format!("rho {a} scaled by {c} gave {b}"))
        }
        _ => Ok(()),
    }
}

pub fn nested_statistic_is_nonnegative(seed: u64) -> Result<(), String> {
    let mut rng = RngStream::new(seed);
    let n = rng.random_range(40..300);
    let pr = logistic_problem(&mut rng, n, 3);
    match nested_rho(&pr, &pr.weights)? {
        Some(rho) if 2.0 * rho < -1e-6 => Err(format!("2rho = {}", 2.0 * rho)),
        _ => Ok(()),
    }
}

/// `K = 3` dataset with independent indicators of random rates.
pub fn random_dataset(rng: &mut RngStream, n: usize) -> ObservedDataset {
    let x: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let rates: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..0.95)).collect();
    let r: Vec<Vec<u8>> = rates
        .iter()
        .map(|&p| (0..n).map(|_| bernoulli(p, rng).expect("probability")).collect())
        .collect();
    ObservedDataset::from_full(vec!["A".into(), "B".into(), "C".into()], &x, r).expect("dataset")
}

pub fn theta_symmetry(seed: u64) -> Result<(), String> {
    let mut rng = RngStream::new(seed);
    let d = random_dataset(&mut rng, 400);
    for (k, j) in [(0, 1), (0, 2), (1, 2)] {
        let a = odds_ratio_point(&d, k, j).ok();
        let b = odds_ratio_point(&d, j, k).ok();
        if a != b {
            return Err(format!("pair ({k},{j}): {a:?} vs {b:?}"));
        }
    }
    Ok(())
}

pub fn determinism(seed: u64) -> Result<(), String> {
    let scenario = Scenario::ALL[(seed % Scenario::ALL.len() as u64) as usize];
    let config = ScenarioConfig {
        n: 300,
        reps: 3,
        k: 3,
        seed,
        n_bootstrap: 10,
        ..ScenarioConfig::new(scenario, Distribution::Binary)
    };
    let d1 = generate_dataset(&config, 1).map_err(|e| e.to_string())?;
    let d2 = generate_dataset(&config, 1).map_err(|e| e.to_string())?;
    if d1 != d2 {
        return Err(format!("{scenario}: datasets differ"));
    }
    let t1 = test_block_parallel(&d1, 0.05, 10, seed).map_err(|e| e.to_string())?;
    let t2 = test_block_parallel(&d2, 0.05, 10, seed).map_err(|e| e.to_string())?;
    if t1 != t2 {
        return Err(format!("{scenario}: block-parallel reports differ"));
    }
    let s1 = run_study(&config).map_err(|e| e.to_string())?;
    let s2 = run_study(&config).map_err(|e| e.to_string())?;
    // NaN rates never compare equal, so compare the replications themselves
    if s1.replications.len() != s2.replications.len()
        || s1.replications.iter().zip(&s2.replications).any(|(a, b)| {
            a.verdict != b.verdict || a.theta_hat.map(f64::to_bits) != b.theta_hat.map(f64::to_bits)
        })
    {
        return Err(format!("{scenario}: studies differ"));
    }
    Ok(())
}
