use crate::scalar::Scalar;

/// A matrix of probability rows, stored densely or as per-row sparse
/// lists. Both layouts answer the same queries.
#[derive(Debug, Clone, PartialEq)]
pub enum StochasticTable<S> {
    Dense { cols: usize, data: Vec<S> },
    Sparse { cols: usize, rows: Vec<Vec<(usize, S)>> },
}

impl<S: Scalar> StochasticTable<S> {
    /// Build from sparse rows (column indices unique within a row).
    pub fn from_rows(rows: Vec<Vec<(usize, S)>>, cols: usize, dense: bool) -> Self {
        if !dense {
            return StochasticTable::Sparse { cols, rows };
        }
        let mut data = vec![S::zero(); rows.len() * cols];
        for (r, row) in rows.into_iter().enumerate() {
            for (c, p) in row {
                data[r * cols + c] = p;
            }
        }
        StochasticTable::Dense { cols, data }
    }

    pub fn n_rows(&self) -> usize {
        match self {
            StochasticTable::Dense { cols, data } => {
                if *cols == 0 {
                    0
                } else {
                    data.len() / cols
                }
            }
            StochasticTable::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            StochasticTable::Dense { cols, .. } | StochasticTable::Sparse { cols, .. } => *cols,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, StochasticTable::Sparse { .. })
    }

    pub fn get(&self, row: usize, col: usize) -> S {
        match self {
            StochasticTable::Dense { cols, data } => data[row * cols + col].clone(),
            StochasticTable::Sparse { rows, .. } => rows[row]
                .iter()
                .find(|(c, _)| *c == col)
                .map_or_else(S::zero, |(_, p)| p.clone()),
        }
    }

    /// Visit the nonzero entries of a row in column order.
    pub fn for_each_nonzero(&self, row: usize, mut f: impl FnMut(usize, &S)) {
        match self {
            StochasticTable::Dense { cols, data } => {
                for (c, p) in data[row * cols..(row + 1) * cols].iter().enumerate() {
                    if !p.is_zero() {
                        f(c, p);
                    }
                }
            }
            StochasticTable::Sparse { rows, .. } => {
                for (c, p) in &rows[row] {
                    if !p.is_zero() {
                        f(*c, p);
                    }
                }
            }
        }
    }

    pub fn row_entries(&self, row: usize) -> Vec<(usize, S)> {
        let mut out = Vec::new();
        self.for_each_nonzero(row, |c, p| out.push((c, p.clone())));
        out
    }

    pub fn row_sum(&self, row: usize) -> S {
        S::sum_all(self.row_entries(row).into_iter().map(|(_, p)| p))
    }

    pub fn dense_row(&self, row: usize) -> Vec<S> {
        let mut out = vec![S::zero(); self.n_cols()];
        self.for_each_nonzero(row, |c, p| out[c] = p.clone());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_agree() {
        let rows = vec![vec![(1, 0.25), (2, 0.75)], vec![(0, 1.0)]];
        let d = StochasticTable::from_rows(rows.clone(), 3, true);
        let s = StochasticTable::from_rows(rows, 3, false);
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(d.get(r, c), s.get(r, c));
            }
            assert_eq!(d.row_entries(r), s.row_entries(r));
            assert_eq!(d.row_sum(r), 1.0);
        }
        assert_eq!(d.n_rows(), 2);
        assert!(s.is_sparse() && !d.is_sparse());
    }
}
