//! Brute-force d-separation by simple-path enumeration, with its own graph
//! surgery, plus random m-DAG and query generators.

use std::collections::BTreeSet;

use mdag_gof::mdag::{IndependenceQuery, MDag, Vertex};
use mdag_gof::numerics::RngStream;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Copy)]
enum Edge {
    Directed(usize, usize),
    Bidirected(usize, usize),
}

fn id(k: usize, v: Vertex) -> usize {
    match v {
        Vertex::Substantive(i) => i,
        Vertex::Indicator(i) => k + i,
        Vertex::Proxy(i) => 2 * k + i,
    }
}

/// Oracle: enumerate every simple path and check each one for blocking.
pub fn oracle_separated(g: &MDag, q: &IndependenceQuery) -> bool {
    let k = g.k();
    let n = 3 * k;
    let fixed: BTreeSet<usize> = g.fixed().iter().chain(&q.interventions).copied().collect();
    let map = |v: Vertex| match v {
        Vertex::Proxy(i) if fixed.contains(&i) => Vertex::Substantive(i),
        o => o,
    };
    let mut edges = Vec::new();
    for (a, b) in g.all_directed_edges() {
        let into_fixed = match b {
            Vertex::Indicator(j) | Vertex::Proxy(j) => fixed.contains(&j),
            _ => false,
        };
        if !into_fixed {
            edges.push(Edge::Directed(id(k, map(a)), id(k, b)));
        }
    }
    for &(a, b) in g.bidirected() {
        edges.push(Edge::Bidirected(id(k, a), id(k, b)));
    }
    let set = |s: &BTreeSet<Vertex>| s.iter().map(|&v| id(k, map(v))).collect::<BTreeSet<_>>();
    let xs = set(&q.left);
    let ys = set(&q.right);
    let mut zs = set(&q.given);
    zs.extend(fixed.iter().map(|&j| k + j));

    // descendants via directed edges, for collider activation
    let mut desc = vec![BTreeSet::new(); n];
    for (v, d) in desc.iter_mut().enumerate() {
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if d.insert(u) {
                for e in &edges {
                    if let Edge::Directed(a, b) = *e {
                        if a == u {
                            stack.push(b);
                        }
                    }
                }
            }
        }
    }
    let activated = |v: usize| desc[v].iter().any(|d| zs.contains(d));
    // (other end, arrowhead at here, arrowhead at other)
    let incident = |v: usize| -> Vec<(usize, bool, bool)> {
        edges
            .iter()
            .filter_map(|e| match *e {
                Edge::Directed(a, b) if a == v => Some((b, false, true)),
                Edge::Directed(a, b) if b == v => Some((a, true, false)),
                Edge::Bidirected(a, b) if a == v => Some((b, true, true)),
                Edge::Bidirected(a, b) if b == v => Some((a, true, true)),
                _ => None,
            })
            .collect()
    };

    let oracle = Oracle {
        ys: &ys,
        zs: &zs,
        incident: &incident,
        activated: &activated,
    };
    !xs.iter().any(|&x| oracle.search(x, None, &mut vec![x]))
}

struct Oracle<'a> {
    ys: &'a BTreeSet<usize>,
    zs: &'a BTreeSet<usize>,
    incident: &'a dyn Fn(usize) -> Vec<(usize, bool, bool)>,
    activated: &'a dyn Fn(usize) -> bool,
}

impl Oracle<'_> {
    /// True when some open simple path continues from `v` to a target.
    fn search(&self, v: usize, head_in: Option<bool>, visited: &mut Vec<usize>) -> bool {
        for (w, head_here, head_there) in (self.incident)(v) {
            if visited.contains(&w) {
                continue;
            }
            if let Some(h) = head_in {
                let open = if h && head_here {
                    (self.activated)(v)
                } else {
                    !self.zs.contains(&v)
                };
                if !open {
                    continue;
                }
            }
            if self.ys.contains(&w) {
                return true;
            }
            visited.push(w);
            let found = self.search(w, Some(head_there), visited);
            visited.pop();
            if found {
                return true;
            }
        }
        false
    }
}

pub fn random_mdag(rng: &mut RngStream, k: usize) -> MDag {
    loop {
        let names: Vec<String> = (1..=k).map(|i| format!("X{i}")).collect();
        let mut g = MDag::new(&names).unwrap();
        let mut xo: Vec<usize> = (0..k).collect();
        xo.shuffle(rng);
        let mut ro: Vec<usize> = (0..k).collect();
        ro.shuffle(rng);
        let density: f64 = rng.random_range(0.1..0.7);
        for a in 0..k {
            for b in 0..k {
                let pa = xo.iter().position(|&v| v == a).unwrap();
                let pb = xo.iter().position(|&v| v == b).unwrap();
                if pa < pb && rng.random_bool(density) {
                    g.add_edge(Vertex::Substantive(a), Vertex::Substantive(b));
                }
                if rng.random_bool(density) {
                    g.add_edge(Vertex::Substantive(a), Vertex::Indicator(b));
                }
                let ra = ro.iter().position(|&v| v == a).unwrap();
                let rb = ro.iter().position(|&v| v == b).unwrap();
                if ra < rb && rng.random_bool(density) {
                    g.add_edge(Vertex::Indicator(a), Vertex::Indicator(b));
                }
                if a != b && rng.random_bool(density * 0.5) {
                    g.add_edge(Vertex::Proxy(a), Vertex::Indicator(b));
                }
            }
        }
        if k >= 2 && rng.random_bool(0.2) {
            g.add_bidirected_by_name("X1", "X2").unwrap();
        }
        if g.is_valid() {
            return g;
        }
    }
}

pub fn random_query(rng: &mut RngStream, g: &MDag) -> IndependenceQuery {
    let k = g.k();
    let verts: Vec<Vertex> = g.all_vertices().collect();
    let mut q = IndependenceQuery::new([], [], []);
    for &v in &verts {
        match rng.random_range(0..5) {
            0 => {
                q.left.insert(v);
            }
            1 => {
                q.right.insert(v);
            }
            2 => {
                q.given.insert(v);
            }
            _ => {}
        }
    }
    for j in 0..k {
        if rng.random_bool(0.25) {
            q.interventions.insert(j);
        }
    }
    q
}

/// Runs `cases` random (graph, query) instances through both the library and
/// the oracle. Returns `(agreements, separated)` or the first disagreement.
pub fn dsep_agreement(seed: u64, cases: usize) -> Result<(usize, usize), String> {
    let mut rng = RngStream::new(seed);
    let mut checked = 0;
    let mut separated = 0;
    while checked < cases {
        let k = if rng.random_bool(0.8) { 2 } else { 1 };
        let g = random_mdag(&mut rng, k);
        let q = random_query(&mut rng, &g);
        let Ok(fast) = g.d_separated(&q) else {
            continue;
        };
        if fast != oracle_separated(&g, &q) {
            return Err(format!("graph {}\nquery {q:?}", g.to_json(None)));
        }
        checked += 1;
        separated += fast as usize;
    }
    Ok((checked, separated))
}
