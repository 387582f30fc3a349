//! Compressed sparse row matrices.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A `rows × cols` matrix in compressed sparse row layout.
///
/// Column indices are sorted and unique within each row. The constructor
/// validates the layout; [`SparseMatrix::from_csr_unchecked`] skips that and
/// leaves bounds checking to the kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_csr(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 || indptr[0] != 0 {
            return Err(Error::CorruptMatrix(format!("row offsets must have {} entries starting at 0", rows + 1)));
        }
        if indptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::CorruptMatrix("row offsets decrease".into()));
        }
        let nnz = indptr[rows];
        if indices.len() != nnz || values.len() != nnz {
            return Err(Error::CorruptMatrix(format!(
                "last row offset is {nnz} but {} indices / {} values stored",
                indices.len(),
                values.len()
            )));
        }
        for r in 0..rows {
            let row = &indices[indptr[r]..indptr[r + 1]];
            if row.iter().any(|&c| c >= cols) {
                return Err(Error::CorruptMatrix(format!("row {r} has a column index >= {cols}")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::CorruptMatrix(format!("row {r} columns not strictly increasing")));
            }
        }
        Ok(Self { rows, cols, indptr, indices, values })
    }

    /// Builds a matrix without validating the layout.
    pub fn from_csr_unchecked(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        Self { rows, cols, indptr, indices, values }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::CorruptMatrix(format!("entry ({r}, {c}) outside ({rows}, {cols})")));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self { rows, cols, indptr, indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: n, cols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: vec![1.0; n] }
    }

    /// A matrix with no stored entries.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, indptr: vec![0; rows + 1], indices: Vec::new(), values: Vec::new() }
    }

    /// Exact conversion: every nonzero entry of `dense` is stored.
    pub fn from_dense(dense: &Tensor) -> Self {
        let mut indptr = Vec::with_capacity(dense.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..dense.rows() {
            for (c, &v) in dense.row(r).iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { rows: dense.rows(), cols: dense.cols(), indptr, indices, values }
    }

    pub fn to_dense(&self) -> Tensor {
        let mut out = Tensor::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            out.set(r, c, out.get(r, c) + v);
        }
        out
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices stored in row `r`.
    pub fn row_indices(&self, r: usize) -> &[usize] {
        &self.indices[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn row_values(&self, r: usize) -> &[f64] {
        &self.values[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = self.row_indices(r);
        match row.binary_search(&c) {
            Ok(k) => self.values[self.indptr[r] + k],
            Err(_) => 0.0,
        }
    }

    /// Row index of every stored entry, in storage order.
    pub fn entry_rows(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            out.extend(std::iter::repeat_n(r, self.row_nnz(r)));
        }
        out
    }

    /// Iterates `(row, col, value)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows)
            .flat_map(move |r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k])))
    }

    /// Same sparsity pattern with new stored values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.nnz() {
            return Err(Error::dim("with_values", format!("{} values for {} entries", values.len(), self.nnz())));
        }
        Ok(Self { values, ..self.clone() })
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, triplets).expect("transpose of a valid matrix is valid")
    }

    /// Sub-matrix of rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Result<Self> {
        if r0 > r1 || r1 > self.rows || c0 > c1 || c1 > self.cols {
            return Err(Error::dim("block", format!("[{r0}..{r1}, {c0}..{c1}] of {:?}", self.shape())));
        }
        let triplets = self
            .iter()
            .filter(|&(r, c, _)| r >= r0 && r < r1 && c >= c0 && c < c1)
            .map(|(r, c, v)| (r - r0, c - c0, v))
            .collect();
        Self::from_triplets(r1 - r0, c1 - c0, triplets)
    }

    /// Sparse × dense product.
    pub fn spmm(&self, dense: &Tensor) -> Result<Tensor> {
        self.spmm_with_values(&self.values, dense)
    }

    /// Sparse × dense product using `values` in place of the stored values.
    pub fn spmm_with_values(&self, values: &[f64], dense: &Tensor) -> Result<Tensor> {
        if self.cols != dense.rows() {
            return Err(Error::dim("spmm", format!("{:?} x {:?}", self.shape(), dense.shape())));
        }
        if values.len() != self.indices.len() || self.indptr.len() != self.rows + 1 {
            return Err(Error::CorruptMatrix("value/index arrays disagree".into()));
        }
        let n = dense.cols();
        let mut out = Tensor::zeros(self.rows, n);
        for r in 0..self.rows {
            let (start, end) = (self.indptr[r], self.indptr[r + 1]);
            if end > self.indices.len() || start > end {
                return Err(Error::CorruptMatrix(format!("row {r} offsets out of range")));
            }
            let out_row = out.row_mut(r);
            for (&c, &v) in self.indices[start..end].iter().zip(&values[start..end]) {
                if c >= self.cols {
                    return Err(Error::CorruptMatrix(format!("column index {c} >= {}", self.cols)));
                }
                for (o, &d) in out_row.iter_mut().zip(dense.row(c)) {
                    *o += v * d;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ × dense`, computed by scattering rows.
    pub fn spmm_t_with_values(&self, values: &[f64], dense: &Tensor) -> Result<Tensor> {
        if self.rows != dense.rows() {
            return Err(Error::dim("spmm_t", format!("{:?}ᵀ x {:?}", self.shape(), dense.shape())));
        }
        let mut out = Tensor::zeros(self.cols, dense.cols());
        for (k, (r, c, _)) in self.iter().enumerate() {
            if c >= self.cols {
                return Err(Error::CorruptMatrix(format!("column index {c} >= {}", self.cols)));
            }
            let v = values[k];
            let src = dense.row(r).to_vec();
            for (o, d) in out.row_mut(c).iter_mut().zip(src) {
                *o += v * d;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> Tensor {
        let data =
            (0..rows * cols).map(|_| if rng.gen::<f64>() < density { rng.gen_range(-2.0..2.0) } else { 0.0 }).collect();
        Tensor::new(rows, cols, data).unwrap()
    }

    #[test]
    fn identity_and_empty() {
        let d = Tensor::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(SparseMatrix::identity(3).spmm(&d).unwrap(), d);
        assert_eq!(SparseMatrix::empty(4, 3).spmm(&d).unwrap(), Tensor::zeros(4, 2));
    }

    #[test]
    fn spmm_matches_densified_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_dense(&mut rng, 5, 5, 0.3);
        let d = random_dense(&mut rng, 5, 2, 1.0);
        let sparse = SparseMatrix::from_dense(&s);
        assert_eq!(sparse.to_dense(), s);
        let got = sparse.spmm(&d).unwrap();
        assert!(got.max_abs_diff(&s.matmul(&d).unwrap()).unwrap() < 1e-12);
        let got_t = sparse.spmm_t_with_values(sparse.values(), &d).unwrap();
        assert!(got_t.max_abs_diff(&s.transpose().matmul(&d).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_layouts() {
        assert!(matches!(
            SparseMatrix::from_csr(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]),
            Err(Error::CorruptMatrix(_))
        ));
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 1, 2], vec![0, 5], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 2], vec![1], vec![1.0]).is_err());
    }

    #[test]
    fn spmm_reports_out_of_bounds_columns() {
        let bad = SparseMatrix::from_csr_unchecked(1, 2, vec![0, 1], vec![4], vec![1.0]);
        assert!(matches!(bad.spmm(&Tensor::ones(2, 1)), Err(Error::CorruptMatrix(_))));
        assert!(matches!(SparseMatrix::identity(2).spmm(&Tensor::ones(3, 1)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn triplets_sum_duplicates_and_block_extracts() {
        let m = SparseMatrix::from_triplets(3, 3, vec![(2, 0, 1.0), (0, 1, 2.0), (2, 0, 0.5)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(2, 0), 1.5);
        let b = m.block(1, 3, 0, 2).unwrap();
        assert_eq!(b.shape(), (2, 2));
        assert_eq!(b.get(1, 0), 1.5);
        assert_eq!(m.transpose().get(0, 2), 1.5);
    }
}
