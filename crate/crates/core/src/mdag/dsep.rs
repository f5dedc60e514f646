use std::collections::{BTreeSet, VecDeque};

use super::{IndependenceQuery, MDag, MDagError, Vertex};

/// Plain mixed graph over `0..n` with directed and bidirected edges.
#[derive(Debug, Clone, Default)]
pub struct AdmgSkeleton {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    siblings: Vec<Vec<usize>>,
}

impl AdmgSkeleton {
    pub fn new(n: usize) -> Self {
        Self {
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
            siblings: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn add_directed(&mut self, from: usize, to: usize) {
        self.children[from].push(to);
        self.parents[to].push(from);
    }

    pub fn add_bidirected(&mut self, a: usize, b: usize) {
        self.siblings[a].push(b);
        self.siblings[b].push(a);
    }

    /// Ancestors of `set`, the set itself included.
    pub fn ancestors(&self, set: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<usize> = set.to_vec();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(self.parents[v].iter().copied());
            }
        }
        mark
    }

    /// m-separation of `xs` and `ys` given `zs` by reachability over
    /// (vertex, arrived-with-arrowhead) states.
    pub fn m_separated(&self, xs: &[usize], ys: &[usize], zs: &[usize]) -> bool {
        let n = self.len();
        let mut in_z = vec![false; n];
        for &z in zs {
            in_z[z] = true;
        }
        let an_z = self.ancestors(zs);
        let mut is_y = vec![false; n];
        for &y in ys {
            is_y[y] = true;
        }
        // visited[v][0]: reached through a tail at v; [1]: through an arrowhead at v
        let mut visited = vec![[false; 2]; n];
        let mut queue = VecDeque::new();
        for &x in xs {
            // the source behaves like a non-collider that is not conditioned on
            for &p in &self.parents[x] {
                queue.push_back((p, 0usize));
            }
            for &c in &self.children[x] {
                queue.push_back((c, 1));
            }
            for &s in &self.siblings[x] {
                queue.push_back((s, 1));
            }
        }
        while let Some((v, head)) = queue.pop_front() {
            if visited[v][head] {
                continue;
            }
            visited[v][head] = true;
            if is_y[v] {
                return false;
            }
            if head == 1 {
                // v can be a collider (leave via an arrowhead) or a chain (leave via a tail)
                if !in_z[v] {
                    for &c in &self.children[v] {
                        queue.push_back((c, 1));
                    }
                }
                if an_z[v] {
                    for &p in &self.parents[v] {
                        queue.push_back((p, 0));
                    }
                    for &s in &self.siblings[v] {
                        queue.push_back((s, 1));
                    }
                }
            } else if !in_z[v] {
                // arrived through a tail: v is never a collider
                for &p in &self.parents[v] {
                    queue.push_back((p, 0));
                }
                for &c in &self.children[v] {
                    queue.push_back((c, 1));
                }
                for &s in &self.siblings[v] {
                    queue.push_back((s, 1));
                }
            }
        }
        true
    }
}

pub(super) fn vertex_id(k: usize, v: Vertex) -> usize {
    match v {
        Vertex::Substantive(i) => i,
        Vertex::Indicator(i) => k + i,
        Vertex::Proxy(i) => 2 * k + i,
    }
}

/// Skeleton of the graph after surgery on `fixed`, with each fixed proxy
/// merged into its substantive variable.
pub(super) fn surgery_skeleton(g: &MDag, fixed: &BTreeSet<usize>) -> AdmgSkeleton {
    let k = g.k();
    let mut s = AdmgSkeleton::new(3 * k);
    let merge = |v: Vertex| match v {
        Vertex::Proxy(i) if fixed.contains(&i) => Vertex::Substantive(i),
        other => other,
    };
    for (a, b) in g.all_directed_edges() {
        if matches!(b, Vertex::Indicator(j) if fixed.contains(&j)) {
            continue;
        }
        if matches!(b, Vertex::Proxy(j) if fixed.contains(&j)) {
            continue;
        }
        s.add_directed(vertex_id(k, merge(a)), vertex_id(k, b));
    }
    for &(a, b) in g.bidirected() {
        s.add_bidirected(vertex_id(k, a), vertex_id(k, b));
    }
    s
}

pub(super) fn d_separated(g: &MDag, q: &IndependenceQuery) -> Result<bool, MDagError> {
    if !g.undirected().is_empty() {
        return Err(MDagError::ChainGraph);
    }
    if q.left.is_empty() {
        return Err(MDagError::EmptyQuerySet("left"));
    }
    if q.right.is_empty() {
        return Err(MDagError::EmptyQuerySet("right"));
    }
    let k = g.k();
    let check = |v: &Vertex| {
        if v.index() < k {
            Ok(())
        } else {
            Err(MDagError::UnknownVertex(format!("{v:?}")))
        }
    };
    for v in q.left.iter().chain(&q.right).chain(&q.given) {
        check(v)?;
    }
    if let Some(&j) = q.interventions.iter().find(|&&j| j >= k) {
        return Err(MDagError::UnknownVertex(format!("intervention index {j}")));
    }
    let fixed: BTreeSet<usize> = g.fixed().iter().chain(&q.interventions).copied().collect();

    let merge = |v: Vertex| match v {
        Vertex::Proxy(i) if fixed.contains(&i) => Vertex::Substantive(i),
        other => other,
    };
    let mut sides: Vec<BTreeSet<Vertex>> = Vec::with_capacity(2);
    for side in [&q.left, &q.right] {
        let mut mapped = BTreeSet::new();
        for &v in side {
            if matches!(v, Vertex::Indicator(j) if fixed.contains(&j)) {
                return Err(MDagError::FixedInQuery(g.name(v)));
            }
            mapped.insert(merge(v));
        }
        sides.push(mapped);
    }
    let given: BTreeSet<Vertex> = q
        .given
        .iter()
        .map(|&v| merge(v))
        .chain(fixed.iter().map(|&j| Vertex::Indicator(j)))
        .collect();
    for (a, b) in [(&sides[0], &sides[1]), (&sides[0], &given), (&sides[1], &given)] {
        if let Some(v) = a.intersection(b).next() {
            return Err(MDagError::NotDisjoint(g.name(*v)));
        }
    }
    // raw query sets must not overlap either (fixed indicators in `given` are allowed)
    for (a, b) in [(&q.left, &q.right), (&q.left, &q.given), (&q.right, &q.given)] {
        if let Some(v) = a.intersection(b).next() {
            return Err(MDagError::NotDisjoint(g.name(*v)));
        }
    }

    let skel = surgery_skeleton(g, &fixed);
    let ids = |set: &BTreeSet<Vertex>| set.iter().map(|&v| vertex_id(k, v)).collect::<Vec<_>>();
    Ok(skel.m_separated(&ids(&sides[0]), &ids(&sides[1]), &ids(&given)))
}
