use std::collections::HashSet;

use crate::numerics::DesignMatrix;

use super::{EstimateError, ObservedDataset};

/// One group of regressors in a propensity model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// `R_j`.
    Indicator(usize),
    /// `R_j` and `R_j · X*_j` (the product is exact with `X*_j` zero-imputed).
    Proxy(usize),
    /// Raw `X_j`; restricts the rows to those with `R_j = 1`.
    Counterfactual(usize),
}

/// A propensity design over the rows where every counterfactual block is observed.
#[derive(Debug, Clone)]
pub struct Features {
    pub design: DesignMatrix,
    /// Dataset row index of each design row.
    pub rows: Vec<usize>,
    pub mask: Vec<bool>,
    /// `R_target` on the selected rows.
    pub outcome: Vec<u8>,
}

/// Builds the design for `p(R_target | blocks)`.
pub fn build_features(data: &ObservedDataset, target: usize, blocks: &[Block]) -> Result<Features, EstimateError> {
    let k = data.k();
    if target >= k {
        return Err(EstimateError::IllegalBlock(format!("target index {target}")));
    }
    let mut mask = vec![true; data.n()];
    for b in blocks {
        let j = match *b {
            Block::Indicator(j) | Block::Proxy(j) | Block::Counterfactual(j) => j,
        };
        if j >= k || j == target {
            return Err(EstimateError::IllegalBlock(format!("{b:?}")));
        }
        if let Block::Counterfactual(j) = *b {
            for (m, &r) in mask.iter_mut().zip(data.r(j)) {
                *m &= r == 1;
            }
        }
    }
    let rows: Vec<usize> = (0..data.n()).filter(|&i| mask[i]).collect();
    if rows.is_empty() {
        return Err(EstimateError::EmptyMask {
            variable: data.names()[target].clone(),
        });
    }
    let names = data.names();
    let mut seen = HashSet::new();
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    let mut push = |name: String, col: Vec<f64>| {
        if seen.insert(name.clone()) {
            columns.push((name, col));
        }
    };
    for b in blocks {
        match *b {
            Block::Indicator(j) => push(format!("R[{}]", names[j]), rows.iter().map(|&i| data.r(j)[i] as f64).collect()),
            Block::Proxy(j) => {
                push(format!("R[{}]", names[j]), rows.iter().map(|&i| data.r(j)[i] as f64).collect());
                // zero-imputed proxy times its indicator
                push(
                    format!("R*X[{}]", names[j]),
                    rows.iter().map(|&i| data.r(j)[i] as f64 * data.x_imputed(j)[i]).collect(),
                );
            }
            Block::Counterfactual(j) => push(format!("X[{}]", names[j]), rows.iter().map(|&i| data.x_imputed(j)[i]).collect()),
        }
    }
    let design = DesignMatrix::with_intercept(rows.len(), columns)?;
    let outcome = rows.iter().map(|&i| data.r(target)[i]).collect();
    Ok(Features {
        design,
        rows,
        mask,
        outcome,
    })
}
