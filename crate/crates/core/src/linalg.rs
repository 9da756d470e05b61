//! Fixed-pattern sparse matrices and a reusable sparse LU built on `faer`.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::Col;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("symbolic factorization failed: {0}")]
    Symbolic(String),
    #[error("numeric factorization failed: {0}")]
    Numeric(String),
    #[error("linear system is singular or ill-conditioned (non-finite solution)")]
    Singular,
}

/// Compressed-sparse-column structure with sorted row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SparsePattern {
    /// Pattern of a matrix where all indices inside each block are coupled.
    pub fn from_blocks<'a>(n: usize, blocks: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for b in blocks {
            for &j in b {
                cols[j].extend_from_slice(b);
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for (j, mut c) in cols.into_iter().enumerate() {
            c.push(j);
            c.sort_unstable();
            c.dedup();
            row_idx.extend(c);
            col_ptr.push(row_idx.len());
        }
        Self { n, col_ptr, row_idx }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Storage slot of entry `(row, col)`.
    #[inline]
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (a, b) = (self.col_ptr[col], self.col_ptr[col + 1]);
        self.row_idx[a..b].binary_search(&row).ok().map(|k| a + k)
    }

    pub fn col_range(&self, col: usize) -> std::ops::Range<usize> {
        self.col_ptr[col]..self.col_ptr[col + 1]
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }
}

/// Square sparse matrix over a shared pattern.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    pattern: Arc<SparsePattern>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(pattern: Arc<SparsePattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<SparsePattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Add to an entry that must be part of the pattern.
    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let k = self
            .pattern
            .position(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.position(row, col).map_or(0.0, |k| self.values[k])
    }

    /// Scatter a dense block `block[a * dofs.len() + b]` at rows `dofs[a]`, cols `dofs[b]`.
    pub fn add_block(&mut self, dofs: &[usize], block: &[f64]) {
        let m = dofs.len();
        for (b, &col) in dofs.iter().enumerate() {
            let range = self.pattern.col_range(col);
            let rows = &self.pattern.row_idx[range.clone()];
            for (a, &row) in dofs.iter().enumerate() {
                let v = block[a * m + b];
                if v != 0.0 {
                    let k = rows.binary_search(&row).expect("block entry in pattern");
                    self.values[range.start + k] += v;
                }
            }
        }
    }

    /// Replace rows flagged in `mask` by identity rows.
    pub fn set_identity_rows(&mut self, mask: &[bool]) {
        for col in 0..self.pattern.n {
            for k in self.pattern.col_range(col) {
                let row = self.pattern.row_idx[k];
                if mask[row] {
                    self.values[k] = if row == col { 1.0 } else { 0.0 };
                }
            }
        }
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.pattern.n];
        for (col, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            for k in self.pattern.col_range(col) {
                y[self.pattern.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    /// `self += alpha * other` for matrices sharing one pattern.
    pub fn axpy(&mut self, alpha: f64, other: &CscMatrix) {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.pattern.n;
        let mut d = vec![vec![0.0; n]; n];
        for col in 0..n {
            for k in self.pattern.col_range(col) {
                d[self.pattern.row_idx[k]][col] = self.values[k];
            }
        }
        d
    }
}

/// Sparse LU whose symbolic analysis is computed once per pattern.
pub struct SparseLu {
    pattern: Arc<SparsePattern>,
    symbolic_mat: SymbolicSparseColMat<usize>,
    symbolic: SymbolicLu<usize>,
}

/// Numeric factorization ready for repeated solves.
pub struct LuFactors {
    lu: Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn new(pattern: Arc<SparsePattern>) -> Result<Self, LinalgError> {
        let symbolic_mat = SymbolicSparseColMat::new_checked(
            pattern.n,
            pattern.n,
            pattern.col_ptr.clone(),
            None,
            pattern.row_idx.clone(),
        );
        let symbolic = SymbolicLu::try_new(symbolic_mat.as_ref())
            .map_err(|e| LinalgError::Symbolic(format!("{e:?}")))?;
        Ok(Self { pattern, symbolic_mat, symbolic })
    }

    pub fn factor(&self, a: &CscMatrix) -> Result<LuFactors, LinalgError> {
        assert_eq!(*a.pattern, *self.pattern, "matrix pattern differs from the analysed one");
        let m = SparseColMatRef::new(self.symbolic_mat.as_ref(), &a.values);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), m)
            .map_err(|e| LinalgError::Numeric(format!("{e:?}")))?;
        Ok(LuFactors { lu, n: self.pattern.n })
    }

    pub fn solve(&self, a: &CscMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.factor(a)?.solve(b)
    }
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(LinalgError::Singular)
        }
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_from_blocks_and_solve() {
        let blocks: Vec<Vec<usize>> = vec![vec![0, 1], vec![1, 2], vec![2, 3]];
        let p = Arc::new(SparsePattern::from_blocks(4, blocks.iter().map(|b| b.as_slice())));
        assert_eq!(p.nnz(), 10);
        let mut a = CscMatrix::zeros(p.clone());
        for b in &blocks {
            a.add_block(b, &[2.0, -1.0, -1.0, 2.0]);
        }
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let rhs = a.mul_vec(&x_true);
        let lu = SparseLu::new(p).unwrap();
        let x = lu.solve(&a, &rhs).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn identity_rows() {
        let blocks: Vec<Vec<usize>> = vec![vec![0, 1, 2]];
        let p = Arc::new(SparsePattern::from_blocks(3, blocks.iter().map(|b| b.as_slice())));
        let mut a = CscMatrix::zeros(p);
        a.add_block(&[0, 1, 2], &[4.0, 1.0, 2.0, 1.0, 5.0, 1.0, 2.0, 1.0, 6.0]);
        a.set_identity_rows(&[false, true, false]);
        assert_eq!(a.to_dense()[1], vec![0.0, 1.0, 0.0]);
        assert_eq!(a.get(0, 1), 1.0);
    }

    #[test]
    fn singular_system_reported() {
        let blocks: Vec<Vec<usize>> = vec![vec![0, 1]];
        let p = Arc::new(SparsePattern::from_blocks(2, blocks.iter().map(|b| b.as_slice())));
        let mut a = CscMatrix::zeros(p.clone());
        a.add_block(&[0, 1], &[1.0, 1.0, 1.0, 1.0]);
        let lu = SparseLu::new(p).unwrap();
        assert!(lu.solve(&a, &[1.0, 2.0]).is_err());
    }
}
