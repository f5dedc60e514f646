//! Independent reference computations for the numerical layer.

use mdag_gof::estimate::DiscreteLaw;
use mdag_gof::numerics::RngStream;
use rand::Rng;

fn loglik(x: &[f64], y: &[u8], w: &[f64], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| {
            let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
            wi * if yi == 1 { p.ln() } else { (1.0 - p).ln() }
        })
        .sum()
}

/// Maximizes a weighted one-regressor logistic log-likelihood by repeated
/// grid zooming; the objective is concave so each zoom keeps the maximizer.
pub fn grid_search_logistic(x: &[f64], y: &[u8], w: &[f64]) -> (f64, f64) {
    let (mut c0, mut c1) = (0.0, 0.0);
    let mut half = 8.0;
    for _ in 0..12 {
        let steps = 40;
        let h = 2.0 * half / steps as f64;
        let mut best = (f64::NEG_INFINITY, c0, c1);
        for i in 0..=steps {
            for j in 0..=steps {
                let b0 = c0 - half + i as f64 * h;
                let b1 = c1 - half + j as f64 * h;
                let v = loglik(x, y, w, b0, b1);
                if v > best.0 {
                    best = (v, b0, b1);
                }
            }
        }
        (c0, c1) = (best.1, best.2);
        half = 2.0 * h;
    }
    (c0, c1)
}

/// `Γ(df/2)` from `Γ(1/2) = √π`, `Γ(1) = 1` and `Γ(a + 1) = aΓ(a)`.
fn gamma_half_integer(df: u32) -> f64 {
    let mut a = if df % 2 == 0 { 1.0 } else { 0.5 };
    let mut g = if df % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    while a < df as f64 / 2.0 - 1e-12 {
        g *= a;
        a += 1.0;
    }
    g
}

/// `P(χ²_df > x)` by Simpson quadrature of the density after `t = u²`,
/// which removes the `t^(-1/2)` singularity at zero.
pub fn chisq_sf_quadrature(x: f64, df: u32) -> f64 {
    let k = df as f64;
    let norm = 2f64.powf(k / 2.0) * gamma_half_integer(df);
    let f = |u: f64| 2.0 * u.powf(k - 1.0) * (-u * u / 2.0).exp() / norm;
    let b = x.sqrt();
    let m = 20_000;
    let h = b / m as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..m {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - s * h / 3.0
}

/// Exact `a/b + c/d` in lowest terms with a positive denominator.
pub fn add_fraction(a: i64, b: i64, c: i64, d: i64) -> (i128, i128) {
    fn gcd(mut a: i128, mut b: i128) -> i128 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a.abs()
    }
    let (a, b, c, d) = (a as i128, b as i128, c as i128, d as i128);
    let mut num = a * d + c * b;
    let mut den = b * d;
    if den < 0 {
        (num, den) = (-num, -den);
    }
    let g = gcd(num, den).max(1);
    (num / g, den / g)
}

/// A binary `K = 3` no-self-censoring law with constant pairwise odds ratios
/// `psi[k][j]` between indicators, built from the odds-ratio parameterization
/// `p(r | x) ∝ Π_k π_k(x_{-k})^{r_k} (1 − π_k(x_{-k}))^{1 − r_k} Π_{k<j} ψ_kj^{(1−r_k)(1−r_j)}`.
pub fn nsc_law(seed: u64) -> (DiscreteLaw<f64>, [[f64; 3]; 3]) {
    let mut rng = RngStream::new(seed);
    let px: Vec<f64> = {
        let raw: Vec<f64> = (0..8).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    };
    // π_k depends on x_{-k} only: index by the two other bits
    let pi: Vec<[f64; 4]> = (0..3)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.15..0.95)))
        .collect();
    let mut psi = [[1.0; 3]; 3];
    for k in 0..3 {
        for j in k + 1..3 {
            psi[k][j] = rng.random_range(0.3..3.0);
            psi[j][k] = psi[k][j];
        }
    }
    let others = |k: usize, x: &[usize]| -> usize {
        let o: Vec<usize> = (0..3).filter(|&i| i != k).map(|i| x[i]).collect();
        o[0] + 2 * o[1]
    };
    let kernel = |x: &[usize], r: &[u8]| -> f64 {
        let mut v = 1.0;
        for k in 0..3 {
            let p = pi[k][others(k, x)];
            v *= if r[k] == 1 { p } else { 1.0 - p };
            for j in k + 1..3 {
                if r[k] == 0 && r[j] == 0 {
                    v *= psi[k][j];
                }
            }
        }
        v
    };
    let law = DiscreteLaw::new(vec![2, 2, 2], |x, r| {
        let mut z = 0.0;
        for bits in 0..8u8 {
            z += kernel(x, &[bits & 1, (bits >> 1) & 1, (bits >> 2) & 1]);
        }
        px[x[0] + 2 * x[1] + 4 * x[2]] * kernel(x, r) / z
    })
    .expect("binary law");
    (law, psi)
}

/// `OR(R_k = 0, R_j = 0 | R_rest = 1, X = x)` read directly off the joint table.
pub fn direct_odds_ratio(law: &DiscreteLaw<f64>, k: usize, j: usize, x: &[usize]) -> f64 {
    let p = |rk: u8, rj: u8| {
        let mut r = vec![1u8; law.k()];
        r[k] = rk;
        r[j] = rj;
        *law.prob(x, &r)
    };
    p(0, 0) * p(1, 1) / (p(0, 1) * p(1, 0))
}

/// Arbitrary strictly positive law over `k` variables with the given cardinalities.
pub fn random_law(seed: u64, cards: Vec<usize>) -> DiscreteLaw<f64> {
    let mut rng = RngStream::new(seed);
    let k = cards.len();
    let cells: usize = cards.iter().product::<usize>() << k;
    let raw: Vec<f64> = (0..cells).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let mut it = raw.into_iter();
    DiscreteLaw::new(cards, |_, _| it.next().expect("cell") / s).expect("law")
}
