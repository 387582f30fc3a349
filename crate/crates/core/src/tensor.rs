//! Dense row-major `f64` matrices.

use std::fmt;

use crate::error::{Error, Result};

/// A dense `rows × cols` matrix of `f64` values in row-major order.
///
/// Tensors are plain values. Whether a tensor takes part in gradient
/// computation is decided when it is placed on a [`Tape`](crate::autodiff::Tape),
/// either as a parameter or as a constant.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("Tensor::new", format!("{} values for shape ({rows}, {cols})", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::full(rows, cols, 0.0)
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::full(rows, cols, 1.0)
    }

    pub fn full(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn scalar(value: f64) -> Self {
        Self { rows: 1, cols: 1, data: vec![value] }
    }

    /// Builds a tensor from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::dim(
                    "Tensor::from_rows",
                    format!("row {i} has {} values, expected {cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Column vector of shape `(n, 1)`.
    pub fn column(values: Vec<f64>) -> Self {
        Self { rows: values.len(), cols: 1, data: values }
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
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// The single value of a `1 × 1` tensor.
    pub fn item(&self) -> Result<f64> {
        if self.shape() != (1, 1) {
            return Err(Error::dim("Tensor::item", format!("shape {:?} is not 1x1", self.shape())));
        }
        Ok(self.data[0])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_shape("zip_map", other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        self.same_shape("add_assign", other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(
                "matmul",
                format!("({}, {}) x ({}, {})", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ × other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Tensor) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::dim(
                "t_matmul",
                format!("({}, {})ᵀ x ({}, {})", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        let n = other.cols;
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self × otherᵀ` without materializing the transpose.
    pub fn matmul_t(&self, other: &Tensor) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::dim(
                "matmul_t",
                format!("({}, {}) x ({}, {})ᵀ", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = a.iter().zip(other.row(j)).map(|(x, y)| x * y).sum();
            }
        }
        Ok(out)
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Tensor) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::dim("vstack", format!("{} vs {} columns", self.cols, other.cols)));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, data })
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &Tensor) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::dim("hstack", format!("{} vs {} rows", self.rows, other.rows)));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Self { rows: self.rows, cols, data })
    }

    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.rows {
            return Err(Error::dim("slice_rows", format!("{start}..{end} of {} rows", self.rows)));
        }
        Ok(Self { rows: end - start, cols: self.cols, data: self.data[start * self.cols..end * self.cols].to_vec() })
    }

    pub fn select_rows(&self, ids: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(ids.len() * self.cols);
        for &i in ids {
            if i >= self.rows {
                return Err(Error::dim("select_rows", format!("row {i} of {}", self.rows)));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self { rows: ids.len(), cols: self.cols, data })
    }

    /// Index of the largest entry in each row; ties go to the lowest index.
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut best = 0;
                for (c, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.same_shape("max_abs_diff", other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub(crate) fn same_shape(&self, op: &'static str, other: &Tensor) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim(op, format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor({}x{}) ", self.rows, self.cols)?;
        f.debug_list().entries((0..self.rows).map(|r| self.row(r))).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matmul(a: &Tensor, b: &Tensor) -> Tensor {
        let mut out = Tensor::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    #[test]
    fn identity_and_zero_products() {
        let b = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(Tensor::eye(2).matmul(&b).unwrap(), b);

        let b = Tensor::from_rows(&[vec![1.0; 4], vec![2.0; 4], vec![-3.0; 4]]).unwrap();
        assert_eq!(Tensor::zeros(2, 3).matmul(&b).unwrap(), Tensor::zeros(2, 4));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let a = Tensor::new(3, 2, vec![0.3, -1.2, 2.5, 0.7, -0.4, 1.9]).unwrap();
        let b = Tensor::new(2, 3, vec![1.1, -0.6, 0.2, 0.8, 1.7, -2.3]).unwrap();
        let got = a.matmul(&b).unwrap();
        assert!(got.max_abs_diff(&naive_matmul(&a, &b)).unwrap() < 1e-12);
        assert!(a.t_matmul(&got).unwrap().max_abs_diff(&naive_matmul(&a.transpose(), &got)).unwrap() < 1e-12);
        assert!(got.matmul_t(&b).unwrap().max_abs_diff(&naive_matmul(&got, &b.transpose())).unwrap() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(Tensor::zeros(2, 3).matmul(&Tensor::zeros(2, 3)), Err(Error::Dimension { .. })));
        assert!(Tensor::new(2, 2, vec![1.0]).is_err());
        assert!(Tensor::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        let t = Tensor::new(2, 3, vec![0.2, 0.4, 0.4, 0.5, 0.1, 0.5]).unwrap();
        assert_eq!(t.argmax_rows(), vec![1, 0]);
    }
}
