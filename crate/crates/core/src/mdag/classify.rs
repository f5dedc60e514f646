use serde::{Deserialize, Serialize};

use super::{IndependenceQuery, MDag, MDagError, Vertex};

/// Missingness model classes, listed from most to least restrictive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelClass {
    SeqMar,
    SeqMnar,
    BlockParallel,
    Permutation,
    NoSelfCensoring,
    Other,
}

impl ModelClass {
    pub const CHECKED: [ModelClass; 5] = [
        ModelClass::SeqMar,
        ModelClass::SeqMnar,
        ModelClass::BlockParallel,
        ModelClass::Permutation,
        ModelClass::NoSelfCensoring,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelClass::SeqMar => "seq-mar",
            ModelClass::SeqMnar => "seq-mnar",
            ModelClass::BlockParallel => "block-parallel",
            ModelClass::Permutation => "permutation",
            ModelClass::NoSelfCensoring => "no-self-censoring",
            ModelClass::Other => "other",
        }
    }
}

impl std::fmt::Display for ModelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The defining independences of `class` under `order` (variable indices,
/// earliest first). Order is ignored by the order-free classes.
pub fn model_restrictions(
    graph: &MDag,
    class: ModelClass,
    order: &[usize],
) -> Result<Vec<IndependenceQuery>, MDagError> {
    let k_total = graph.k();
    check_order(graph, order)?;
    let x = |ks: &[usize]| ks.iter().map(|&i| Vertex::Substantive(i)).collect::<Vec<_>>();
    let r = |ks: &[usize]| ks.iter().map(|&i| Vertex::Indicator(i)).collect::<Vec<_>>();
    let p = |ks: &[usize]| ks.iter().map(|&i| Vertex::Proxy(i)).collect::<Vec<_>>();
    let all: Vec<usize> = (0..k_total).collect();
    let mut out = Vec::with_capacity(k_total);
    for (pos, &k) in order.iter().enumerate() {
        let before = &order[..pos];
        let after = &order[pos + 1..];
        let upto = &order[..=pos];
        let others: Vec<usize> = all.iter().copied().filter(|&i| i != k).collect();
        let me = Vertex::Indicator(k);
        let q = match class {
            ModelClass::SeqMar => IndependenceQuery::new(
                [me],
                x(&all),
                r(before).into_iter().chain(p(before)),
            ),
            ModelClass::SeqMnar => IndependenceQuery::new(
                [me],
                x(upto).into_iter().chain(p(before)),
                r(before).into_iter().chain(x(after)),
            ),
            ModelClass::BlockParallel => IndependenceQuery::new(
                [me],
                r(&others).into_iter().chain([Vertex::Substantive(k)]),
                x(&others),
            ),
            ModelClass::Permutation => IndependenceQuery::new(
                [me],
                x(upto),
                r(before).into_iter().chain(p(before)).chain(x(after)),
            ),
            ModelClass::NoSelfCensoring => IndependenceQuery::new(
                [me],
                [Vertex::Substantive(k)],
                r(&others).into_iter().chain(x(&others)),
            ),
            ModelClass::Other => return Ok(Vec::new()),
        };
        out.push(q);
    }
    Ok(out)
}

fn check_order(graph: &MDag, order: &[usize]) -> Result<(), MDagError> {
    let mut seen = vec![false; graph.k()];
    for &k in order {
        if k >= graph.k() || seen[k] {
            return Err(MDagError::BadOrder(format!("index {k}")));
        }
        seen[k] = true;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(MDagError::BadOrder(graph.variables()[k].clone()));
    }
    Ok(())
}

/// Every class whose defining independences all hold in `graph`.
pub fn satisfied_classes(graph: &MDag, order: &[usize]) -> Result<Vec<ModelClass>, MDagError> {
    graph.require_valid()?;
    if !graph.undirected().is_empty() {
        return Err(MDagError::ChainGraph);
    }
    let mut out = Vec::new();
    for class in ModelClass::CHECKED {
        let mut ok = true;
        for q in model_restrictions(graph, class, order)? {
            if !graph.d_separated(&q)? {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(class);
        }
    }
    Ok(out)
}

/// The most restrictive class the graph belongs to under `order`.
pub fn classify_model(graph: &MDag, order: &[usize]) -> Result<ModelClass, MDagError> {
    Ok(satisfied_classes(graph, order)?
        .first()
        .copied()
        .unwrap_or(ModelClass::Other))
}
