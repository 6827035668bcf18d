//! Compressed sparse row storage for the assembled operators.

use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-block row data produced in order.
    pub(crate) fn from_blocks(nrows: usize, blocks: Vec<(Vec<usize>, Vec<u32>, Vec<f64>)>) -> Self {
        let nnz: usize = blocks.iter().map(|b| b.1.len()).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (counts, cols, vals) in blocks {
            for c in counts {
                let last = *row_ptr.last().unwrap();
                row_ptr.push(last + c);
            }
            col_idx.extend_from_slice(&cols);
            values.extend_from_slice(&vals);
        }
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        Self { nrows, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// From `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
        for &(i, j, v) in triplets {
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        let counts = rows.iter().map(|r| r.len()).collect();
        let cols = rows.iter().flat_map(|r| r.keys().map(|&j| j as u32)).collect();
        let vals = rows.iter().flat_map(|r| r.values().copied()).collect();
        Self::from_blocks(n, vec![(counts, cols, vals)])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().position(|&c| c as usize == j).map_or(0.0, |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&c, v)| v * x[c as usize]).sum()
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64], exec: Execution) {
        par::fill(exec, y, |i| self.row_dot(i, x));
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y, Execution::default());
        y
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c as usize, i)).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_and_product() {
        let a = CsrMatrix::from_triplets(3, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (2, 2, 1.0), (2, 2, 1.0)]);
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(2, 2), 2.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![1.0, 1.0, 2.0]);
        assert_eq!(a.symmetry_defect(), 0.0);
        assert_eq!(CsrMatrix::identity(4).mul_vec(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }
}
