//! Missing-data DAGs over substantive variables `X`, missingness indicators
//! `R` and proxies `X*`.
//!
//! Only substantive names and non-deterministic edges are stored; the
//! deterministic `X_k → X*_k ← R_k` edges are implied for every variable.

mod classify;
mod dsep;
mod params;
mod structures;
mod testability;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::{classify_model, model_restrictions, satisfied_classes, ModelClass};
pub use dsep::AdmgSkeleton;
pub use params::{count_parameters, Cardinality, ParameterCount};
pub use structures::{detect_structures, StructureReport};
pub use testability::{testability_verdict, Testability, TestabilityRoute, TestabilityVerdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MDagError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("vertex name `{0}` is produced by more than one variable")]
    NameClash(String),
    #[error("graph must have at least one substantive variable")]
    Empty,
    #[error("query sets are not pairwise disjoint (shared vertex `{0}`)")]
    NotDisjoint(String),
    #[error("query set `{0}` is empty")]
    EmptyQuerySet(&'static str),
    #[error("`{0}` is not a missingness indicator and cannot be intervened on")]
    NotAnIndicator(String),
    #[error("`{0}` is fixed by intervention and cannot appear on either side of a query")]
    FixedInQuery(String),
    #[error("ordering must list every variable exactly once (problem with `{0}`)")]
    BadOrder(String),
    #[error("d-separation is undefined for graphs with undirected indicator edges")]
    ChainGraph,
    #[error("bidirected edges are not supported by {0}")]
    Bidirected(&'static str),
    #[error("graph is not a valid m-DAG: {0}")]
    Invalid(String),
    #[error("cardinality of `{0}` must be a finite integer >= 2")]
    BadCardinality(String),
    #[error("expected {expected} cardinalities, got {got}")]
    CardinalityCount { expected: usize, got: usize },
    #[error("parameter count overflowed")]
    Overflow,
    #[error("invalid graph file: {0}")]
    Parse(String),
}

/// A vertex of an m-DAG, identified by the index of its substantive variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Substantive(usize),
    Indicator(usize),
    Proxy(usize),
}

impl Vertex {
    pub fn index(self) -> usize {
        match self {
            Vertex::Substantive(k) | Vertex::Indicator(k) | Vertex::Proxy(k) => k,
        }
    }

    fn is_substantive(self) -> bool {
        matches!(self, Vertex::Substantive(_))
    }
}

/// One problem found by [`MDag::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SelfLoop(String),
    DuplicateEdge(String, String),
    /// An indicator or proxy pointing into a substantive variable.
    IntoSubstantive(String, String),
    /// The edge is one of the implied deterministic proxy edges.
    DeterministicListed(String, String),
    /// A proxy may only have its own `X_k` and `R_k` as parents.
    ProxyParent(String, String),
    BidirectedNotSubstantive(String, String),
    UndirectedNotIndicator(String, String),
    FixedHasParent(String, String),
    Cycle(Vec<String>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop(v) => write!(f, "self-loop on {v}"),
            Violation::DuplicateEdge(a, b) => write!(f, "duplicate edge {a} -> {b}"),
            Violation::IntoSubstantive(a, b) => {
                write!(f, "edge {a} -> {b}: indicators and proxies cannot point into substantive variables")
            }
            Violation::DeterministicListed(a, b) => {
                write!(f, "edge {a} -> {b} is deterministic and must be omitted")
            }
            Violation::ProxyParent(a, b) => {
                write!(f, "edge {a} -> {b}: a proxy has exactly its own variable and indicator as parents")
            }
            Violation::BidirectedNotSubstantive(a, b) => {
                write!(f, "bidirected edge {a} <-> {b} must join two distinct substantive variables")
            }
            Violation::UndirectedNotIndicator(a, b) => {
                write!(f, "undirected edge {a} -- {b} must join two distinct indicators")
            }
            Violation::FixedHasParent(a, b) => write!(f, "edge {a} -> {b} points into a fixed indicator"),
            Violation::Cycle(path) => write!(f, "directed cycle {}", path.join(" -> ")),
        }
    }
}

/// Name of the indicator for a substantive variable: `X3 → R3`, `age → R_age`.
pub fn indicator_name(variable: &str) -> String {
    match variable.strip_prefix('X') {
        Some(rest) if !rest.is_empty() => format!("R{rest}"),
        _ => format!("R_{variable}"),
    }
}

/// An m-DAG, or an m-CDAG when `fixed` is non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MDag {
    variables: Vec<String>,
    edges: Vec<(Vertex, Vertex)>,
    bidirected: Vec<(Vertex, Vertex)>,
    undirected: Vec<(usize, usize)>,
    fixed: BTreeSet<usize>,
    names: HashMap<String, Vertex>,
}

impl MDag {
    pub fn new<S: AsRef<str>>(variables: &[S]) -> Result<Self, MDagError> {
        if variables.is_empty() {
            return Err(MDagError::Empty);
        }
        let variables: Vec<String> = variables.iter().map(|s| s.as_ref().to_string()).collect();
        let mut names = HashMap::new();
        for (k, v) in variables.iter().enumerate() {
            if v.is_empty() || v.ends_with('*') {
                return Err(MDagError::Parse(format!("invalid variable name `{v}`")));
            }
            if variables[..k].contains(v) {
                return Err(MDagError::DuplicateVariable(v.clone()));
            }
            for (name, vertex) in [
                (v.clone(), Vertex::Substantive(k)),
                (indicator_name(v), Vertex::Indicator(k)),
                (format!("{v}*"), Vertex::Proxy(k)),
            ] {
                if names.insert(name.clone(), vertex).is_some() {
                    return Err(MDagError::NameClash(name));
                }
            }
        }
        Ok(Self {
            variables,
            edges: Vec::new(),
            bidirected: Vec::new(),
            undirected: Vec::new(),
            fixed: BTreeSet::new(),
            names,
        })
    }

    /// Convenience constructor from `("A", "B")` edge name pairs.
    pub fn from_edges<S: AsRef<str>>(variables: &[S], edges: &[(&str, &str)]) -> Result<Self, MDagError> {
        let mut g = Self::new(variables)?;
        for (a, b) in edges {
            g.add_edge_by_name(a, b)?;
        }
        Ok(g)
    }

    pub fn k(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn vertex(&self, name: &str) -> Result<Vertex, MDagError> {
        self.names
            .get(name.trim())
            .copied()
            .ok_or_else(|| MDagError::UnknownVertex(name.to_string()))
    }

    pub fn variable_index(&self, name: &str) -> Result<usize, MDagError> {
        match self.vertex(name)? {
            Vertex::Substantive(k) => Ok(k),
            _ => Err(MDagError::UnknownVertex(name.to_string())),
        }
    }

    pub fn name(&self, v: Vertex) -> String {
        match v {
            Vertex::Substantive(k) => self.variables[k].clone(),
            Vertex::Indicator(k) => indicator_name(&self.variables[k]),
            Vertex::Proxy(k) => format!("{}*", self.variables[k]),
        }
    }

    pub fn add_edge(&mut self, from: Vertex, to: Vertex) {
        self.edges.push((from, to));
    }

    pub fn add_edge_by_name(&mut self, from: &str, to: &str) -> Result<(), MDagError> {
        let e = (self.vertex(from)?, self.vertex(to)?);
        self.edges.push(e);
        Ok(())
    }

    pub fn add_bidirected_by_name(&mut self, a: &str, b: &str) -> Result<(), MDagError> {
        let e = (self.vertex(a)?, self.vertex(b)?);
        self.bidirected.push(e);
        Ok(())
    }

    /// Adds a chain-graph `R_i -- R_j` edge (used only for parameter counting).
    pub fn add_undirected_by_name(&mut self, a: &str, b: &str) -> Result<(), MDagError> {
        match (self.vertex(a)?, self.vertex(b)?) {
            (Vertex::Indicator(i), Vertex::Indicator(j)) => {
                self.undirected.push((i, j));
                Ok(())
            }
            _ => Err(MDagError::Invalid(format!("undirected edge {a} -- {b} must join indicators"))),
        }
    }

    /// User-listed (non-deterministic) directed edges.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn bidirected(&self) -> &[(Vertex, Vertex)] {
        &self.bidirected
    }

    pub fn undirected(&self) -> &[(usize, usize)] {
        &self.undirected
    }

    pub fn fixed(&self) -> &BTreeSet<usize> {
        &self.fixed
    }

    pub fn has_edge(&self, from: Vertex, to: Vertex) -> bool {
        self.all_directed_edges().any(|e| e == (from, to))
    }

    /// Every directed edge, including the implied deterministic ones that are
    /// still present (edges into fixed indicators are gone after surgery).
    pub fn all_directed_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        let deterministic = (0..self.k()).flat_map(|k| {
            [
                (Vertex::Substantive(k), Vertex::Proxy(k)),
                (Vertex::Indicator(k), Vertex::Proxy(k)),
            ]
        });
        self.edges.iter().copied().chain(deterministic)
    }

    pub fn parents(&self, v: Vertex) -> BTreeSet<Vertex> {
        self.all_directed_edges().filter(|e| e.1 == v).map(|e| e.0).collect()
    }

    pub fn children(&self, v: Vertex) -> BTreeSet<Vertex> {
        self.all_directed_edges().filter(|e| e.0 == v).map(|e| e.1).collect()
    }

    pub fn all_vertices(&self) -> impl Iterator<Item = Vertex> {
        let k = self.k();
        (0..k)
            .map(Vertex::Substantive)
            .chain((0..k).map(Vertex::Indicator))
            .chain((0..k).map(Vertex::Proxy))
    }

    /// Graph surgery for `do(R_j = 1)` on each listed variable index:
    /// removes every edge into `R_j` and marks it fixed.
    pub fn fix(&self, indicators: &[usize]) -> MDag {
        let mut g = self.clone();
        for &j in indicators {
            g.fixed.insert(j);
        }
        let fixed = g.fixed.clone();
        g.edges
            .retain(|(_, to)| !matches!(to, Vertex::Indicator(j) if fixed.contains(j)));
        g
    }

    /// Checks every structural invariant of an m-DAG; an empty list means the
    /// graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.edges {
            let (na, nb) = (self.name(a), self.name(b));
            if a == b {
                out.push(Violation::SelfLoop(na));
                continue;
            }
            if !seen.insert((a, b)) {
                out.push(Violation::DuplicateEdge(na, nb));
                continue;
            }
            match (a, b) {
                (Vertex::Indicator(_) | Vertex::Proxy(_), Vertex::Substantive(_)) => {
                    out.push(Violation::IntoSubstantive(na, nb))
                }
                (Vertex::Substantive(i) | Vertex::Indicator(i), Vertex::Proxy(k)) if i == k => {
                    out.push(Violation::DeterministicListed(na, nb))
                }
                (_, Vertex::Proxy(_)) => out.push(Violation::ProxyParent(na, nb)),
                (_, Vertex::Indicator(j)) if self.fixed.contains(&j) => {
                    out.push(Violation::FixedHasParent(na, nb))
                }
                _ => {}
            }
        }
        for &(a, b) in &self.bidirected {
            if !(a.is_substantive() && b.is_substantive()) || a == b {
                out.push(Violation::BidirectedNotSubstantive(self.name(a), self.name(b)));
            }
        }
        for &(i, j) in &self.undirected {
            if i == j {
                let n = self.name(Vertex::Indicator(i));
                out.push(Violation::UndirectedNotIndicator(n.clone(), n));
            }
        }
        if let Some(cycle) = self.find_cycle() {
            out.push(Violation::Cycle(cycle.into_iter().map(|v| self.name(v)).collect()));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn find_cycle(&self) -> Option<Vec<Vertex>> {
        let verts: Vec<Vertex> = self.all_vertices().collect();
        let index: HashMap<Vertex, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut children = vec![Vec::new(); verts.len()];
        for (a, b) in self.all_directed_edges() {
            if a != b {
                children[index[&a]].push(index[&b]);
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; verts.len()];
        let mut stack: Vec<usize> = Vec::new();
        fn dfs(u: usize, ch: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
            state[u] = 1;
            stack.push(u);
            for &w in &ch[u] {
                if state[w] == 1 {
                    let pos = stack.iter().position(|&s| s == w).unwrap();
                    let mut cyc = stack[pos..].to_vec();
                    cyc.push(w);
                    return Some(cyc);
                }
                if state[w] == 0 {
                    if let Some(c) = dfs(w, ch, state, stack) {
                        return Some(c);
                    }
                }
            }
            stack.pop();
            state[u] = 2;
            None
        }
        for s in 0..verts.len() {
            if state[s] == 0 {
                if let Some(c) = dfs(s, &children, &mut state, &mut stack) {
                    return Some(c.into_iter().map(|i| verts[i]).collect());
                }
            }
        }
        None
    }

    pub(crate) fn require_valid(&self) -> Result<(), MDagError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(MDagError::Invalid(
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    /// Resolves an ordering given as variable names into indices.
    pub fn resolve_order<S: AsRef<str>>(&self, order: &[S]) -> Result<Vec<usize>, MDagError> {
        let mut out = Vec::with_capacity(order.len());
        for name in order {
            let k = self
                .variable_index(name.as_ref())
                .map_err(|_| MDagError::BadOrder(name.as_ref().to_string()))?;
            if out.contains(&k) {
                return Err(MDagError::BadOrder(name.as_ref().to_string()));
            }
            out.push(k);
        }
        if out.len() != self.k() {
            let missing = (0..self.k()).find(|k| !out.contains(k)).unwrap_or(0);
            return Err(MDagError::BadOrder(self.variables[missing].clone()));
        }
        Ok(out)
    }

    pub fn d_separated(&self, query: &IndependenceQuery) -> Result<bool, MDagError> {
        dsep::d_separated(self, query)
    }

    /// Parses the JSON graph file format.
    pub fn from_json(text: &str) -> Result<(Self, Option<Vec<usize>>), MDagError> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| MDagError::Parse(e.to_string()))?;
        let mut g = MDag::new(&file.variables)?;
        for [a, b] in &file.edges {
            g.add_edge_by_name(a, b)?;
        }
        for [a, b] in &file.bidirected {
            g.add_bidirected_by_name(a, b)?;
        }
        for [a, b] in &file.undirected {
            g.add_undirected_by_name(a, b)?;
        }
        let order = match &file.order {
            Some(o) => Some(g.resolve_order(o)?),
            None => None,
        };
        Ok((g, order))
    }

    pub fn to_json(&self, order: Option<&[usize]>) -> String {
        let pair = |a: Vertex, b: Vertex| [self.name(a), self.name(b)];
        let file = GraphFile {
            variables: self.variables.clone(),
            edges: self.edges.iter().map(|&(a, b)| pair(a, b)).collect(),
            bidirected: self.bidirected.iter().map(|&(a, b)| pair(a, b)).collect(),
            undirected: self
                .undirected
                .iter()
                .map(|&(i, j)| pair(Vertex::Indicator(i), Vertex::Indicator(j)))
                .collect(),
            order: order.map(|o| o.iter().map(|&k| self.variables[k].clone()).collect()),
        };
        serde_json::to_string_pretty(&file).expect("graph serialization")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    variables: Vec<String>,
    #[serde(default)]
    edges: Vec<[String; 2]>,
    #[serde(default)]
    bidirected: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    undirected: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<Vec<String>>,
}

/// `left ⊥ right | given` in the graph after `do(R = 1)` for each listed
/// intervention (given as variable indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceQuery {
    pub left: BTreeSet<Vertex>,
    pub right: BTreeSet<Vertex>,
    pub given: BTreeSet<Vertex>,
    pub interventions: BTreeSet<usize>,
}

impl IndependenceQuery {
    pub fn new(
        left: impl IntoIterator<Item = Vertex>,
        right: impl IntoIterator<Item = Vertex>,
        given: impl IntoIterator<Item = Vertex>,
    ) -> Self {
        Self {
            left: left.into_iter().collect(),
            right: right.into_iter().collect(),
            given: given.into_iter().collect(),
            interventions: BTreeSet::new(),
        }
    }

    pub fn with_interventions(mut self, fixed: impl IntoIterator<Item = usize>) -> Self {
        self.interventions = fixed.into_iter().collect();
        self
    }

    /// Builds a query from vertex names; `interventions` must name indicators.
    pub fn parse<S: AsRef<str>>(
        graph: &MDag,
        left: &[S],
        right: &[S],
        given: &[S],
        interventions: &[S],
    ) -> Result<Self, MDagError> {
        let resolve = |names: &[S]| -> Result<BTreeSet<Vertex>, MDagError> {
            names.iter().map(|n| graph.vertex(n.as_ref())).collect()
        };
        let mut fixed = BTreeSet::new();
        for n in interventions {
            match graph.vertex(n.as_ref())? {
                Vertex::Indicator(k) => {
                    fixed.insert(k);
                }
                _ => return Err(MDagError::NotAnIndicator(n.as_ref().to_string())),
            }
        }
        Ok(Self {
            left: resolve(left)?,
            right: resolve(right)?,
            given: resolve(given)?,
            interventions: fixed,
        })
    }
}
