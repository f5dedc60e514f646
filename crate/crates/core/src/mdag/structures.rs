use std::collections::BTreeSet;

use serde::Serialize;

use super::{MDag, Vertex};

/// Structures that obstruct identification of propensities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    /// `(X_k, R_k)` pairs.
    pub self_censoring_edges: Vec<(String, String)>,
    /// `(X_i, R_j, R_i)` with `X_i → R_j ← R_i`.
    pub colluders: Vec<(String, String, String)>,
    /// Unordered variable pairs, smaller index first.
    pub criss_crosses: Vec<(String, String)>,
    /// Collider-only paths from some `X_i` to its own `R_i`.
    pub colluding_paths: Vec<Vec<String>>,
}

impl StructureReport {
    pub fn is_empty(&self) -> bool {
        self.self_censoring_edges.is_empty()
            && self.colluders.is_empty()
            && self.criss_crosses.is_empty()
            && self.colluding_paths.is_empty()
    }

    /// True when a colluder, criss-cross or colluding path is present.
    pub fn blocks_identification(&self) -> bool {
        !(self.colluders.is_empty() && self.criss_crosses.is_empty() && self.colluding_paths.is_empty())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Forward,
    Backward,
    Bidirected,
}

/// Lists every self-censoring edge, colluder, criss-cross and colluding path.
pub fn detect_structures(graph: &MDag) -> StructureReport {
    let k = graph.k();
    let edges: BTreeSet<(Vertex, Vertex)> = graph.edges().iter().copied().collect();
    let has = |a: Vertex, b: Vertex| edges.contains(&(a, b));
    let x = Vertex::Substantive;
    let r = Vertex::Indicator;
    let mut rep = StructureReport::default();

    for i in 0..k {
        if has(x(i), r(i)) {
            rep.self_censoring_edges.push((graph.name(x(i)), graph.name(r(i))));
        }
    }
    for i in 0..k {
        for j in 0..k {
            if i != j && has(x(i), r(j)) && has(r(i), r(j)) {
                rep.colluders
                    .push((graph.name(x(i)), graph.name(r(j)), graph.name(r(i))));
            }
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            if has(x(i), r(j)) && has(x(j), r(i)) && (has(r(i), r(j)) || has(r(j), r(i))) {
                rep.criss_crosses.push((graph.name(x(i)), graph.name(x(j))));
            }
        }
    }

    // adjacency over non-proxy vertices; a proxy is a deterministic function
    // of its parents and never mediates a colluding path
    let verts: Vec<Vertex> = graph
        .all_vertices()
        .filter(|v| !matches!(v, Vertex::Proxy(_)))
        .collect();
    let mut adj: Vec<(Vertex, Vertex, Step)> = Vec::new();
    for &(a, b) in graph.edges() {
        if matches!(a, Vertex::Proxy(_)) || matches!(b, Vertex::Proxy(_)) {
            continue;
        }
        adj.push((a, b, Step::Forward));
        adj.push((b, a, Step::Backward));
    }
    for &(a, b) in graph.bidirected() {
        adj.push((a, b, Step::Bidirected));
        adj.push((b, a, Step::Bidirected));
    }
    for i in 0..k {
        let mut path = vec![x(i)];
        collider_paths(&adj, r(i), None, &mut path, &mut rep.colluding_paths, graph, verts.len());
    }
    rep
}

/// Extends `path` along edges such that every interior vertex is a collider
/// (arrowheads on both sides), recording paths that reach `target`.
fn collider_paths(
    adj: &[(Vertex, Vertex, Step)],
    target: Vertex,
    last: Option<Step>,
    path: &mut Vec<Vertex>,
    out: &mut Vec<Vec<String>>,
    graph: &MDag,
    limit: usize,
) {
    let here = *path.last().unwrap();
    if path.len() > limit {
        return;
    }
    for &(from, to, step) in adj {
        if from != here || path.contains(&to) {
            continue;
        }
        // `here` is interior when `last` is set: it needs an arrowhead on the
        // incoming edge (checked when it was entered) and on this edge
        if last.is_some() && step == Step::Forward {
            continue;
        }
        // an interior vertex must receive an arrowhead; endpoints are free
        let arrow_at_to = matches!(step, Step::Forward | Step::Bidirected);
        if to == target {
            if path.len() >= 2 {
                let mut p = path.clone();
                p.push(to);
                out.push(p.into_iter().map(|v| graph.name(v)).collect());
            }
            continue;
        }
        if !arrow_at_to {
            continue;
        }
        path.push(to);
        collider_paths(adj, target, Some(step), path, out, graph, limit);
        path.pop();
    }
}
