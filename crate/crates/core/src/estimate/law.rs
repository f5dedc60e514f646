use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Zero};
use serde::Serialize;

use super::EstimateError;

/// Scalar used for probability tables: `f64` or an exact rational.
pub trait Probability:
    Clone + Debug + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
}

impl<T> Probability for T where
    T: Clone + Debug + PartialEq + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>
{
}

/// Enumerated full law `p(X, R)` over finite-valued `X`.
///
/// Entries are stored at `x_index * 2^K + r_bits`, where `x_index` is mixed
/// radix with `X_1` as the fastest digit and bit `i` of `r_bits` is `R_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw<T> {
    cards: Vec<usize>,
    entries: Vec<T>,
}

/// Observed law `p(R, X*)`; `None` in the proxy vector is the missing symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservedLaw<T> {
    pub entries: BTreeMap<(Vec<u8>, Vec<Option<usize>>), T>,
}

impl<T: Probability> ObservedLaw<T> {
    pub fn get(&self, r: &[u8], x_star: &[Option<usize>]) -> Option<&T> {
        self.entries.get(&(r.to_vec(), x_star.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> T {
        self.entries.values().fold(T::zero(), |a, b| a + b.clone())
    }

    /// `p(R = r)`.
    pub fn pattern_probability(&self, r: &[u8]) -> T {
        self.entries
            .iter()
            .filter(|((rr, _), _)| rr == r)
            .fold(T::zero(), |a, (_, v)| a + v.clone())
    }
}

impl<T: Probability> DiscreteLaw<T> {
    /// Tabulates `f(x, r)` over every configuration.
    pub fn new(cards: Vec<usize>, mut f: impl FnMut(&[usize], &[u8]) -> T) -> Result<Self, EstimateError> {
        if cards.is_empty() || cards.contains(&0) {
            return Err(EstimateError::Data("every variable needs at least one level".into()));
        }
        let k = cards.len();
        let nx = cards
            .iter()
            .try_fold(1usize, |a, &c| a.checked_mul(c))
            .filter(|&n| k < 24 && n.checked_mul(1 << k).is_some_and(|t| t <= 1 << 26))
            .ok_or_else(|| EstimateError::Data("law too large to enumerate".into()))?;
        let mut entries = Vec::with_capacity(nx << k);
        let mut x = vec![0; k];
        let mut r = vec![0u8; k];
        for xi in 0..nx {
            decode(xi, &cards, &mut x);
            for bits in 0..1usize << k {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri = ((bits >> i) & 1) as u8;
                }
                entries.push(f(&x, &r));
            }
        }
        Ok(Self { cards, entries })
    }

    pub fn k(&self) -> usize {
        self.cards.len()
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    fn index(&self, x: &[usize], r: &[u8]) -> usize {
        let mut xi = 0;
        for (i, (&v, &c)) in x.iter().zip(&self.cards).enumerate().rev() {
            debug_assert!(v < c, "level {v} out of range for variable {i}");
            xi = xi * c + v;
        }
        let bits = r.iter().enumerate().fold(0, |a, (i, &v)| a | ((v as usize) << i));
        (xi << self.k()) | bits
    }

    pub fn prob(&self, x: &[usize], r: &[u8]) -> &T {
        &self.entries[self.index(x, r)]
    }

    /// Every `(x, r, p)` triple in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, Vec<u8>, &T)> + '_ {
        let k = self.k();
        self.entries.iter().enumerate().map(move |(idx, p)| {
            let mut x = vec![0; k];
            decode(idx >> k, &self.cards, &mut x);
            let r = (0..k).map(|i| ((idx >> i) & 1) as u8).collect();
            (x, r, p)
        })
    }

    pub fn total(&self) -> T {
        self.entries.iter().fold(T::zero(), |a, b| a + b.clone())
    }

    /// Sum of the entries whose configuration satisfies `keep`.
    pub fn sum_where(&self, mut keep: impl FnMut(&[usize], &[u8]) -> bool) -> T {
        self.iter()
            .filter(|(x, r, _)| keep(x, r))
            .fold(T::zero(), |a, (_, _, p)| a + p.clone())
    }

    /// Marginalizes `X_k` out wherever `R_k = 0`.
    pub fn observed(&self) -> ObservedLaw<T> {
        let mut entries = BTreeMap::new();
        for (x, r, p) in self.iter() {
            let xs: Vec<Option<usize>> = x.iter().zip(&r).map(|(&v, &ri)| (ri == 1).then_some(v)).collect();
            let slot = entries.entry((r, xs)).or_insert_with(T::zero);
            *slot = slot.clone() + p.clone();
        }
        ObservedLaw { entries }
    }

    /// `p(R_j = r_j | X_{xp} = x_{xp}, R_{rp} = r_{rp})` at the given configuration,
    /// or `None` when the conditioning event has probability zero.
    pub fn indicator_conditional(
        &self,
        j: usize,
        x_parents: &[usize],
        r_parents: &[usize],
        x: &[usize],
        r: &[u8],
    ) -> Option<T> {
        let matches = |xx: &[usize], rr: &[u8]| {
            x_parents.iter().all(|&i| xx[i] == x[i]) && r_parents.iter().all(|&i| rr[i] == r[i])
        };
        let den = self.sum_where(|xx, rr| matches(xx, rr));
        if den.is_zero() {
            return None;
        }
        let num = self.sum_where(|xx, rr| matches(xx, rr) && rr[j] == r[j]);
        Some(num / den)
    }

    /// Truncated factorization `p(V) / p(R_j | parents)`; for each fixed
    /// value of `R_j` the result sums to one over the remaining variables.
    /// Entries whose conditional is undefined or zero are set to zero.
    pub fn truncate(&self, j: usize, x_parents: &[usize], r_parents: &[usize]) -> DiscreteLaw<T> {
        let mut cache: BTreeMap<(Vec<usize>, Vec<u8>), Option<T>> = BTreeMap::new();
        let entries = self
            .iter()
            .map(|(x, r, p)| {
                let key = (
                    x_parents.iter().map(|&i| x[i]).collect::<Vec<_>>(),
                    r_parents.iter().map(|&i| r[i]).chain([r[j]]).collect::<Vec<_>>(),
                );
                let c = cache
                    .entry(key)
                    .or_insert_with(|| self.indicator_conditional(j, x_parents, r_parents, &x, &r));
                match c {
                    Some(c) if !c.is_zero() => p.clone() / c.clone(),
                    _ => T::zero(),
                }
            })
            .collect();
        DiscreteLaw {
            cards: self.cards.clone(),
            entries,
        }
    }

    /// Total mass of the entries with `R_j = value`.
    pub fn slice_total(&self, j: usize, value: u8) -> T {
        self.sum_where(|_, r| r[j] == value)
    }
}

fn decode(mut idx: usize, cards: &[usize], out: &mut [usize]) {
    for (o, &c) in out.iter_mut().zip(cards) {
        *o = idx % c;
        idx /= c;
    }
}
