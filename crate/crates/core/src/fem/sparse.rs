use crate::par;

/// Symmetric matrix in compressed sparse row layout with sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpd {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSpd {
    /// Builds the sparsity layout from per-row column sets; values start at zero.
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        SparseSpd {
            dim,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseSpd {
            dim,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![1.0; dim],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Position of `(row, col)` in `values`, if stored.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.col_idx[lo..hi].binary_search(&col).ok().map(|k| lo + k)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        par::fill(y, |i| {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            acc
        });
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        par::dot(x, &self.matvec(x))
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        par::dot(x, &self.matvec(y))
    }

    pub fn same_pattern(&self, other: &SparseSpd) -> bool {
        self.dim == other.dim && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }

    /// `a * self + b * other`; both matrices must share one layout.
    pub fn lincomb(&self, a: f64, other: &SparseSpd, b: f64) -> SparseSpd {
        assert!(self.same_pattern(other), "sparsity layouts differ");
        SparseSpd {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).all(|k| self.get(self.col_idx[k], i) == self.values[k])
        })
    }

    pub fn sum_entries(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.col_idx[k]] = self.values[k];
            }
        }
        d
    }

    #[allow(clippy::needless_range_loop)]
    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let rows = a
            .iter()
            .map(|r| (0..r.len()).filter(|&j| r[j] != 0.0).collect())
            .collect();
        let mut m = SparseSpd::from_pattern(rows);
        for i in 0..m.dim {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.values[k] = a[i][m.col_idx[k]];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_roundtrip_and_matvec() {
        let a = vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, -1.0], vec![0.0, -1.0, 2.0]];
        let m = SparseSpd::from_dense(&a);
        assert_eq!(m.nnz(), 7);
        assert!(m.is_symmetric());
        assert_eq!(m.to_dense(), a);
        assert_eq!(m.matvec(&[1.0, 2.0, 3.0]), vec![6.0, 4.0, 4.0]);
        assert_eq!(m.quad_form(&[1.0, 0.0, 0.0]), 4.0);
    }
}
