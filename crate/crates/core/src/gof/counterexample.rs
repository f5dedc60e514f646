use serde::Serialize;

use num_traits::One;

use crate::estimate::{DiscreteLaw, ObservedLaw};
use crate::numerics::Rational;

/// Conditional tables of one criss-cross model on binary `X1, X2`:
/// `X1 → X2`, `X2 → R1`, `X1 → R2`, `R1 → R2`.
struct CrissCross {
    /// `p(X1 = 0)`.
    x1_zero: Rational,
    /// `p(X2 = 1 | X1 = x1)`.
    x2_one: [Rational; 2],
    /// `p(R1 = 1 | X2 = x2)`.
    r1_one: [Rational; 2],
    /// `p(R2 = 1 | R1 = r1, X1 = x1)`, indexed `[r1][x1]`.
    r2_one: [[Rational; 2]; 2],
}

fn bern(p: &Rational, v: usize) -> Rational {
    if v == 1 {
        p.clone()
    } else {
        Rational::one() - p.clone()
    }
}

impl CrissCross {
    fn m1() -> Self {
        let q = Rational::frac;
        Self {
            x1_zero: q(7, 15),
            x2_one: [q(1, 7), q(1, 4)],
            r1_one: [q(1, 20), q(15, 100)],
            r2_one: [[q(55, 323), q(115, 323)], [q(1, 2), q(1, 2)]],
        }
    }

    fn m2() -> Self {
        let q = Rational::frac;
        Self {
            x1_zero: q(5, 11),
            x2_one: [q(1, 5), q(1, 3)],
            r1_one: [q(11, 200), q(11, 100)],
            r2_one: [[q(9185, 16821), q(605, 16821)], [q(1, 2), q(1, 2)]],
        }
    }

    fn full_law(&self) -> DiscreteLaw<Rational> {
        DiscreteLaw::new(vec![2, 2], |x, r| {
            let (x1, x2, r1, r2) = (x[0], x[1], r[0] as usize, r[1] as usize);
            bern(&(Rational::one() - self.x1_zero.clone()), x1)
                * bern(&self.x2_one[x1], x2)
                * bern(&self.r1_one[x2], r1)
                * bern(&self.r2_one[r1][x1], r2)
        })
        .expect("binary law")
    }
}

/// Full-law entries as `(r1, r2, x1, x2, M1, M2)` in row order `(x1, x2) =
/// (0,0), (1,0), (0,1), (1,1)` within each missingness pattern. The M2 entry
/// at `R = (0,0), X = (0,1)` is the product of its conditionals, 1909/51975.
const REFERENCE_FULL: [(u8, u8, usize, usize, (i64, i64), (i64, i64)); 16] = [
    (0, 0, 0, 0, (134, 425), (3818, 24475)),
    (0, 0, 1, 0, (104, 425), (8108, 24475)),
    (0, 0, 0, 1, (67, 1425), (1909, 51975)),
    (0, 0, 1, 1, (104, 1425), (8108, 51975)),
    (0, 1, 0, 0, (11, 170), (167, 890)),
    (0, 1, 1, 0, (23, 170), (11, 890)),
    (0, 1, 0, 1, (11, 1140), (167, 3780)),
    (0, 1, 1, 1, (23, 570), (11, 1890)),
    (1, 0, 0, 0, (1, 100), (1, 100)),
    (1, 0, 1, 0, (1, 100), (1, 100)),
    (1, 0, 0, 1, (1, 200), (1, 200)),
    (1, 0, 1, 1, (1, 100), (1, 100)),
    (1, 1, 0, 0, (1, 100), (1, 100)),
    (1, 1, 1, 0, (1, 100), (1, 100)),
    (1, 1, 0, 1, (1, 200), (1, 200)),
    (1, 1, 1, 1, (1, 100), (1, 100)),
];

/// Observed-law entries `(r1, r2, x*1, x*2, p)` with `None` for a missing proxy.
type ObservedEntry = (u8, u8, Option<usize>, Option<usize>, (i64, i64));
const REFERENCE_OBSERVED: [ObservedEntry; 9] = [
    (0, 0, None, None, (68, 100)),
    (0, 1, None, Some(0), (2, 10)),
    (0, 1, None, Some(1), (1, 20)),
    (1, 0, Some(0), None, (3, 200)),
    (1, 0, Some(1), None, (2, 100)),
    (1, 1, Some(0), Some(0), (1, 100)),
    (1, 1, Some(1), Some(0), (1, 100)),
    (1, 1, Some(0), Some(1), (1, 200)),
    (1, 1, Some(1), Some(1), (1, 100)),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullLawRow {
    pub r1: u8,
    pub r2: u8,
    pub x1: usize,
    pub x2: usize,
    pub m1: Rational,
    pub m2: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservedLawRow {
    pub r1: u8,
    pub r2: u8,
    /// `None` is the missing symbol.
    pub x1_star: Option<usize>,
    pub x2_star: Option<usize>,
    pub p: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRecord {
    pub passed: bool,
    /// Named checks and their outcomes, in evaluation order.
    pub checks: Vec<(String, bool)>,
    pub m1_p_x1_zero: Rational,
    pub m2_p_x1_zero: Rational,
    pub full_laws: Vec<FullLawRow>,
    pub observed_law: Vec<ObservedLawRow>,
}

/// Independence checks implied by the criss-cross factorization.
fn factorizes(law: &DiscreteLaw<Rational>) -> bool {
    let mut ok = true;
    for (x, r, _) in law.iter() {
        // R1 depends on X2 only
        ok &= law.indicator_conditional(0, &[0, 1], &[], &x, &r) == law.indicator_conditional(0, &[1], &[], &x, &r);
        // R2 depends on (R1, X1) only
        ok &= law.indicator_conditional(1, &[0, 1], &[0], &x, &r) == law.indicator_conditional(1, &[0], &[0], &x, &r);
        // X1 ⊥ R1 | X2 and X2 ⊥ R2 | X1, R1 follow from the two lines above
        // together with the joint of X being a free table
    }
    ok
}

fn observed_rows(obs: &ObservedLaw<Rational>) -> Vec<ObservedLawRow> {
    obs.entries
        .iter()
        .map(|((r, x), p)| ObservedLawRow {
            r1: r[0],
            r2: r[1],
            x1_star: x[0],
            x2_star: x[1],
            p: p.clone(),
        })
        .collect()
}

/// Builds both criss-cross full laws in exact arithmetic and checks that
/// they are distinct valid laws sharing one observed law.
pub fn verify_crisscross_counterexample() -> CounterexampleRecord {
    let (a, b) = (CrissCross::m1(), CrissCross::m2());
    let (m1, m2) = (a.full_law(), b.full_law());
    let (o1, o2) = (m1.observed(), m2.observed());
    let mut checks = Vec::new();
    let mut check = |name: &str, ok: bool| checks.push((name.to_string(), ok));

    check("M1 sums to one", m1.total() == Rational::one());
    check("M2 sums to one", m2.total() == Rational::one());
    check(
        "entries are non-negative",
        m1.iter().chain(m2.iter()).all(|(_, _, p)| !p.is_negative()),
    );
    check("M1 factorizes", factorizes(&m1));
    check("M2 factorizes", factorizes(&m2));
    check("full laws differ", m1 != m2);
    check("observed laws agree", o1 == o2);
    check(
        "full-law entries match the reference table",
        REFERENCE_FULL.iter().all(|&(r1, r2, x1, x2, e1, e2)| {
            *m1.prob(&[x1, x2], &[r1, r2]) == Rational::frac(e1.0, e1.1)
                && *m2.prob(&[x1, x2], &[r1, r2]) == Rational::frac(e2.0, e2.1)
        }),
    );
    check(
        "observed entries match the reference table",
        o1.len() == REFERENCE_OBSERVED.len()
            && REFERENCE_OBSERVED
                .iter()
                .all(|&(r1, r2, s1, s2, p)| o1.get(&[r1, r2], &[s1, s2]) == Some(&Rational::frac(p.0, p.1))),
    );

    let full_laws = m1
        .iter()
        .map(|(x, r, p)| FullLawRow {
            r1: r[0],
            r2: r[1],
            x1: x[0],
            x2: x[1],
            m1: p.clone(),
            m2: m2.prob(&x, &r).clone(),
        })
        .collect();
    CounterexampleRecord {
        passed: checks.iter().all(|(_, ok)| *ok),
        checks,
        m1_p_x1_zero: a.x1_zero,
        m2_p_x1_zero: b.x1_zero,
        full_laws,
        observed_law: observed_rows(&o1),
    }
}
