use std::collections::BTreeSet;

use serde::Serialize;

use super::{IndependenceQuery, MDag, MDagError, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestabilityVerdict {
    DirectlyTestable,
    TestableAsVerma,
    /// The available criteria are exhausted; this is not a proof of untestability.
    UntestableByCriteria,
}

impl std::fmt::Display for TestabilityVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TestabilityVerdict::DirectlyTestable => "directly-testable",
            TestabilityVerdict::TestableAsVerma => "testable-as-verma",
            TestabilityVerdict::UntestableByCriteria => "untestable-by-criteria",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "indicators")]
pub enum TestabilityRoute {
    /// Add the listed indicators to the conditioning set.
    Condition(Vec<String>),
    /// Fix the listed indicators to 1 by intervention.
    Fix(Vec<String>),
    /// Pairwise odds ratio between two indicators given all substantive variables.
    OddsRatio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Testability {
    pub verdict: TestabilityVerdict,
    pub route: Option<TestabilityRoute>,
    pub reason: String,
}

impl Testability {
    fn untestable(reason: impl Into<String>) -> Self {
        Self {
            verdict: TestabilityVerdict::UntestableByCriteria,
            route: None,
            reason: reason.into(),
        }
    }
}

/// Decides whether a d-separation of `graph` implies a restriction on the
/// observed-data law, trying conditioning first, then fixing, then the
/// odds-ratio route.
pub fn testability_verdict(graph: &MDag, query: &IndependenceQuery) -> Result<Testability, MDagError> {
    graph.require_valid()?;
    if !graph.d_separated(query)? {
        return Ok(Testability::untestable("the independence does not hold in the graph"));
    }
    let mentioned: BTreeSet<usize> = query
        .left
        .iter()
        .chain(&query.right)
        .chain(&query.given)
        .filter_map(|v| match v {
            Vertex::Substantive(k) => Some(*k),
            _ => None,
        })
        .collect();
    let already: BTreeSet<usize> = graph.fixed().iter().chain(&query.interventions).copied().collect();
    let required: BTreeSet<usize> = mentioned.difference(&already).copied().collect();
    let on_sides = |k: usize| {
        let r = Vertex::Indicator(k);
        query.left.contains(&r) || query.right.contains(&r)
    };
    let names = |ks: &BTreeSet<usize>| ks.iter().map(|&k| graph.name(Vertex::Indicator(k))).collect::<Vec<_>>();

    if required.iter().all(|&k| !on_sides(k)) {
        // conditioning on every required indicator
        let mut q = query.clone();
        q.given.extend(required.iter().map(|&k| Vertex::Indicator(k)));
        if graph.d_separated(&q)? {
            let added: BTreeSet<usize> = required
                .iter()
                .copied()
                .filter(|&k| !query.given.contains(&Vertex::Indicator(k)))
                .collect();
            return Ok(Testability {
                verdict: TestabilityVerdict::DirectlyTestable,
                route: Some(TestabilityRoute::Condition(names(&added))),
                reason: "holds after conditioning on the required indicators".into(),
            });
        }
        // fixing the ones not already conditioned on
        let to_fix: BTreeSet<usize> = required
            .iter()
            .copied()
            .filter(|&k| !query.given.contains(&Vertex::Indicator(k)))
            .collect();
        let mut q = query.clone();
        q.interventions.extend(to_fix.iter().copied());
        if graph.d_separated(&q)? {
            return Ok(match unidentified_propensity(graph, &to_fix) {
                None => Testability {
                    verdict: TestabilityVerdict::TestableAsVerma,
                    route: Some(TestabilityRoute::Fix(names(&to_fix))),
                    reason: "holds in the intervened graph and every fixed propensity is identified".into(),
                },
                Some(why) => Testability::untestable(why),
            });
        }
    }

    if let Some(t) = odds_ratio_route(graph, query)? {
        return Ok(t);
    }
    Ok(Testability::untestable(
        "required indicators cannot be conditioned on or fixed without spoiling the separation",
    ))
}

/// Walks the fixing set and everything its propensities depend on; returns a
/// reason when some propensity is blocked by self-censoring or a colluder.
fn unidentified_propensity(graph: &MDag, to_fix: &BTreeSet<usize>) -> Option<String> {
    let mut stack: Vec<usize> = to_fix.iter().copied().collect();
    let mut seen = BTreeSet::new();
    while let Some(j) = stack.pop() {
        if !seen.insert(j) {
            continue;
        }
        let rj = Vertex::Indicator(j);
        for p in graph.parents(rj) {
            match p {
                Vertex::Substantive(m) if m == j => {
                    return Some(format!("{} is self-censored", graph.name(rj)));
                }
                Vertex::Substantive(m) => {
                    if graph.has_edge(Vertex::Indicator(m), rj) {
                        return Some(format!(
                            "colluder {} -> {} <- {}",
                            graph.name(p),
                            graph.name(rj),
                            graph.name(Vertex::Indicator(m))
                        ));
                    }
                    // the propensity of R_j needs X_m observed, which needs R_m's propensity
                    stack.push(m);
                }
                _ => {}
            }
        }
    }
    None
}

fn odds_ratio_route(graph: &MDag, query: &IndependenceQuery) -> Result<Option<Testability>, MDagError> {
    let single = |s: &BTreeSet<Vertex>| match (s.len(), s.iter().next()) {
        (1, Some(Vertex::Indicator(k))) => Some(*k),
        _ => None,
    };
    let (Some(a), Some(b)) = (single(&query.left), single(&query.right)) else {
        return Ok(None);
    };
    if !query.interventions.is_empty() || !graph.fixed().is_empty() || !graph.bidirected().is_empty() {
        return Ok(None);
    }
    let k = graph.k();
    let others: Vec<usize> = (0..k).filter(|&i| i != a && i != b).collect();
    let allowed: BTreeSet<Vertex> = (0..k)
        .map(Vertex::Substantive)
        .chain(others.iter().map(|&i| Vertex::Indicator(i)))
        .collect();
    if !query.given.is_subset(&allowed) {
        return Ok(None);
    }
    let all_x = || (0..k).map(Vertex::Substantive);
    // R_a ⊥ R_b | X, R_rest with no self-censoring at either end
    let pair = IndependenceQuery::new(
        [Vertex::Indicator(a)],
        [Vertex::Indicator(b)],
        all_x().chain(others.iter().map(|&i| Vertex::Indicator(i))),
    );
    if !graph.d_separated(&pair)? {
        return Ok(None);
    }
    for i in [a, b] {
        let nsc = IndependenceQuery::new(
            [Vertex::Indicator(i)],
            [Vertex::Substantive(i)],
            all_x()
                .filter(|v| *v != Vertex::Substantive(i))
                .chain((0..k).filter(|&m| m != i).map(Vertex::Indicator)),
        );
        if !graph.d_separated(&nsc)? {
            return Ok(None);
        }
    }
    Ok(Some(Testability {
        verdict: TestabilityVerdict::TestableAsVerma,
        route: Some(TestabilityRoute::OddsRatio),
        reason: "the pairwise odds ratio is identified and equals one under the independence".into(),
    }))
}
