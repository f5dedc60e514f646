use super::EstimateError;

/// Observed data `(R, X*)`: per variable an indicator column and the proxy
/// values, stored zero-imputed where the indicator is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDataset {
    names: Vec<String>,
    r: Vec<Vec<u8>>,
    x: Vec<Vec<f64>>,
    n: usize,
}

impl ObservedDataset {
    /// Builds a dataset from proxy columns where `None` marks a missing cell.
    pub fn new(names: Vec<String>, columns: Vec<Vec<Option<f64>>>) -> Result<Self, EstimateError> {
        if names.len() != columns.len() {
            return Err(EstimateError::Data(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut r = Vec::with_capacity(columns.len());
        let mut x = Vec::with_capacity(columns.len());
        for (name, col) in names.iter().zip(&columns) {
            let mut rc = Vec::with_capacity(col.len());
            let mut xc = Vec::with_capacity(col.len());
            for (i, v) in col.iter().enumerate() {
                match v {
                    Some(v) if v.is_finite() => {
                        rc.push(1);
                        xc.push(*v);
                    }
                    Some(_) => {
                        return Err(EstimateError::Data(format!("non-finite value in `{name}` at row {}", i + 1)))
                    }
                    None => {
                        rc.push(0);
                        xc.push(0.0);
                    }
                }
            }
            r.push(rc);
            x.push(xc);
        }
        Self::checked(names, r, x)
    }

    /// Masks full columns `x` (one per variable) with indicator columns `r`.
    pub fn from_full(names: Vec<String>, x: &[Vec<f64>], r: Vec<Vec<u8>>) -> Result<Self, EstimateError> {
        if x.len() != r.len() {
            return Err(EstimateError::Data("x and r disagree on the number of variables".into()));
        }
        let mut masked = Vec::with_capacity(x.len());
        for (xc, rc) in x.iter().zip(&r) {
            if xc.len() != rc.len() {
                return Err(EstimateError::Data("x and r columns differ in length".into()));
            }
            if rc.iter().any(|&v| v > 1) {
                return Err(EstimateError::Data("indicators must be 0 or 1".into()));
            }
            if xc.iter().zip(rc).any(|(v, &ri)| ri == 1 && !v.is_finite()) {
                return Err(EstimateError::Data("non-finite observed value".into()));
            }
            masked.push(xc.iter().zip(rc).map(|(v, &ri)| if ri == 1 { *v } else { 0.0 }).collect());
        }
        Self::checked(names, r, masked)
    }

    fn checked(names: Vec<String>, r: Vec<Vec<u8>>, x: Vec<Vec<f64>>) -> Result<Self, EstimateError> {
        if names.is_empty() {
            return Err(EstimateError::Data("no variables".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(EstimateError::Data(format!("duplicate variable `{n}`")));
            }
        }
        let n = r[0].len();
        if n == 0 {
            return Err(EstimateError::Data("no rows".into()));
        }
        if r.iter().any(|c| c.len() != n) {
            return Err(EstimateError::Data("columns differ in length".into()));
        }
        Ok(Self { names, r, x, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize, EstimateError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| EstimateError::UnknownVariable(name.to_string()))
    }

    /// Resolves variable names into an ordering over column indices.
    pub fn resolve_order<S: AsRef<str>>(&self, order: &[S]) -> Result<Vec<usize>, EstimateError> {
        let mut out = Vec::with_capacity(order.len());
        for name in order {
            let i = self
                .index_of(name.as_ref())
                .map_err(|_| EstimateError::BadOrder(name.as_ref().to_string()))?;
            if out.contains(&i) {
                return Err(EstimateError::BadOrder(name.as_ref().to_string()));
            }
            out.push(i);
        }
        self.check_order(&out)?;
        Ok(out)
    }

    pub(crate) fn check_order(&self, order: &[usize]) -> Result<(), EstimateError> {
        let mut seen = vec![false; self.k()];
        for &i in order {
            if i >= self.k() || seen[i] {
                return Err(EstimateError::BadOrder(format!("index {i}")));
            }
            seen[i] = true;
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(EstimateError::BadOrder(self.names[i].clone())),
            None => Ok(()),
        }
    }

    /// Indicator column of variable `k`.
    pub fn r(&self, k: usize) -> &[u8] {
        &self.r[k]
    }

    /// Proxy column of variable `k` with missing cells set to 0.
    pub fn x_imputed(&self, k: usize) -> &[f64] {
        &self.x[k]
    }

    pub fn x_star(&self, k: usize, row: usize) -> Option<f64> {
        (self.r[k][row] == 1).then(|| self.x[k][row])
    }

    pub fn observed_fraction(&self, k: usize) -> f64 {
        self.r[k].iter().map(|&v| v as usize).sum::<usize>() as f64 / self.n as f64
    }

    /// Fraction of rows with every indicator equal to 1.
    pub fn complete_case_fraction(&self) -> f64 {
        let complete = (0..self.n).filter(|&i| self.r.iter().all(|c| c[i] == 1)).count();
        complete as f64 / self.n as f64
    }

    /// Rows drawn by index (with repetition), as used by the bootstrap.
    pub fn select_rows(&self, rows: &[usize]) -> ObservedDataset {
        ObservedDataset {
            names: self.names.clone(),
            r: self.r.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect(),
            x: self.x.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect(),
            n: rows.len(),
        }
    }

    /// Cells in row-major order with `None` for missing values.
    pub fn row(&self, i: usize) -> Vec<Option<f64>> {
        (0..self.k()).map(|k| self.x_star(k, i)).collect()
    }
}
