use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::Serialize;

use super::{MDag, MDagError, Vertex};

/// State-space size of a substantive variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    Finite(u64),
    Continuous,
}

impl FromStr for Cardinality {
    type Err = MDagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "inf" | "continuous" | "c" => Ok(Cardinality::Continuous),
            _ => t
                .parse::<u64>()
                .map(Cardinality::Finite)
                .map_err(|_| MDagError::BadCardinality(t.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParameterCount {
    pub full_law: u128,
    pub saturated_observed: u128,
}

impl ParameterCount {
    /// Fewer full-law parameters than the saturated observed law means the
    /// model restricts the observed data (discrete case).
    pub fn imposes_restrictions(&self) -> bool {
        self.full_law < self.saturated_observed
    }
}

fn mul(a: u128, b: u128) -> Result<u128, MDagError> {
    a.checked_mul(b).ok_or(MDagError::Overflow)
}

fn add(a: u128, b: u128) -> Result<u128, MDagError> {
    a.checked_add(b).ok_or(MDagError::Overflow)
}

/// Number of jointly attainable configurations of a parent set. Parents that
/// share a variable index are counted together, since `X*_m` is `?` whenever
/// `R_m = 0` and equals `X_m` otherwise.
fn feasible_configurations(parents: &BTreeSet<Vertex>, cards: &[u64]) -> Result<u128, MDagError> {
    let mut roles: BTreeMap<usize, (bool, bool, bool)> = BTreeMap::new();
    for v in parents {
        let e = roles.entry(v.index()).or_default();
        match v {
            Vertex::Substantive(_) => e.0 = true,
            Vertex::Indicator(_) => e.1 = true,
            Vertex::Proxy(_) => e.2 = true,
        }
    }
    let mut total: u128 = 1;
    for (m, (x, r, p)) in roles {
        let c = cards[m] as u128;
        let n = match (x, r, p) {
            (true, false, false) => c,
            (false, true, false) => 2,
            (false, false, true) | (false, true, true) => c + 1,
            (true, true, _) | (true, _, true) => 2 * c,
            (false, false, false) => 1,
        };
        total = mul(total, n)?;
    }
    Ok(total)
}

/// Full-law parameter count under the graph factorization against the
/// saturated pattern-mixture count of the observed law.
///
/// Undirected `R_i -- R_j` edges are read as a chain-graph component: each
/// indicator keeps a conditional given its directed parents at the reference
/// level of its neighbours, and every complete set of two or more indicators
/// adds one odds-ratio term per configuration of their shared directed parents.
pub fn count_parameters(graph: &MDag, cardinalities: &[Cardinality]) -> Result<ParameterCount, MDagError> {
    graph.require_valid()?;
    if !graph.bidirected().is_empty() {
        return Err(MDagError::Bidirected("parameter counting"));
    }
    let k = graph.k();
    if cardinalities.len() != k {
        return Err(MDagError::CardinalityCount {
            expected: k,
            got: cardinalities.len(),
        });
    }
    let mut cards = Vec::with_capacity(k);
    for (i, c) in cardinalities.iter().enumerate() {
        match c {
            Cardinality::Finite(n) if *n >= 2 => cards.push(*n),
            _ => return Err(MDagError::BadCardinality(graph.variables()[i].clone())),
        }
    }

    let mut full: u128 = 0;
    for i in 0..k {
        let x = Vertex::Substantive(i);
        let term = mul(cards[i] as u128 - 1, feasible_configurations(&graph.parents(x), &cards)?)?;
        full = add(full, term)?;
        let r = Vertex::Indicator(i);
        full = add(full, feasible_configurations(&graph.parents(r), &cards)?)?;
    }
    for clique in undirected_cliques(graph) {
        let mut shared: Option<BTreeSet<Vertex>> = None;
        for &i in &clique {
            let pa = graph.parents(Vertex::Indicator(i));
            shared = Some(match shared {
                None => pa,
                Some(s) => s.intersection(&pa).copied().collect(),
            });
        }
        full = add(full, feasible_configurations(&shared.unwrap_or_default(), &cards)?)?;
    }

    if k >= 127 {
        return Err(MDagError::Overflow);
    }
    let mut saturated: u128 = (1u128 << k) - 1;
    for pattern in 0u128..(1u128 << k) {
        let mut cells: u128 = 1;
        for (i, &c) in cards.iter().enumerate() {
            if pattern >> i & 1 == 1 {
                cells = mul(cells, c as u128)?;
            }
        }
        saturated = add(saturated, cells - 1)?;
    }
    Ok(ParameterCount {
        full_law: full,
        saturated_observed: saturated,
    })
}

/// All complete indicator sets of size ≥ 2 in the undirected part.
fn undirected_cliques(graph: &MDag) -> Vec<Vec<usize>> {
    let mut adj: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(i, j) in graph.undirected() {
        adj.insert((i.min(j), i.max(j)));
    }
    let nodes: Vec<usize> = adj
        .iter()
        .flat_map(|&(i, j)| [i, j])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn extend(
        start: usize,
        nodes: &[usize],
        adj: &BTreeSet<(usize, usize)>,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        for idx in start..nodes.len() {
            let v = nodes[idx];
            if current.iter().all(|&u| adj.contains(&(u.min(v), u.max(v)))) {
                current.push(v);
                if current.len() >= 2 {
                    out.push(current.clone());
                }
                extend(idx + 1, nodes, adj, current, out);
                current.pop();
            }
        }
    }
    extend(0, &nodes, &adj, &mut current, &mut out);
    out
}
