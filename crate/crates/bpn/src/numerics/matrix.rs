//! Dense row-major matrices.
//!
//! The whole crate uses one batch-first convention: activations are
//! `[batch x units]`, weights are `[in_dim x out_dim]`. Keeping a single
//! layout rules out silent transpose bugs between forward and backward
//! passes.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "from_vec",
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::shape("from_rows", c, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// One row as a `1 x n` matrix (used for rank-1 bias factors).
    pub fn row_vector(values: Vec<T>) -> Self {
        let cols = values.len();
        Matrix {
            rows: 1,
            cols,
            data: values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    /// Copies the given rows of `self` into a new matrix (minibatch gather).
    pub fn gather_rows(&self, indices: &[usize]) -> Matrix<T> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Copies the given columns of `self` into a new matrix (head gather).
    pub fn gather_cols(&self, indices: &[usize]) -> Matrix<T> {
        let mut out = Matrix::zeros(self.rows, indices.len());
        for r in 0..self.rows {
            let src = self.row(r);
            let dst = out.row_mut(r);
            for (j, &c) in indices.iter().enumerate() {
                dst[j] = src[c];
            }
        }
        out
    }

    /// `self[m x k] . rhs[k x n]`.
    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != rhs.rows {
            return Err(Error::shape("matmul", self.shape_str(), rhs.shape_str()));
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = Matrix::zeros(m, n);
        for i in 0..m {
            let a_row = self.row(i);
            let c_row = out.row_mut(i);
            for (l, &a) in a_row.iter().enumerate().take(k) {
                let b_row = rhs.row(l);
                for (c, &b) in c_row.iter_mut().zip(b_row) {
                    *c += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T . rhs`, without materializing the transpose.
    ///
    /// With `self = [b x m]` and `rhs = [b x n]` this is the `[m x n]`
    /// outer-product accumulation used for weight gradients.
    pub fn matmul_tn(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.rows != rhs.rows {
            return Err(Error::shape("matmul_tn", self.shape_str(), rhs.shape_str()));
        }
        let (b, m, n) = (self.rows, self.cols, rhs.cols);
        let mut out = Matrix::zeros(m, n);
        for batch in 0..b {
            let a_row = self.row(batch);
            let b_row = rhs.row(batch);
            for (i, &a) in a_row.iter().enumerate().take(m) {
                let c_row = out.row_mut(i);
                for (c, &v) in c_row.iter_mut().zip(b_row) {
                    *c += a * v;
                }
            }
        }
        Ok(out)
    }

    /// `self . rhs^T`, without materializing the transpose.
    ///
    /// With `self = [b x n]` and `rhs = [m x n]` this is the `[b x m]`
    /// back-propagation product (each output entry is a dot of two rows).
    pub fn matmul_nt(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != rhs.cols {
            return Err(Error::shape("matmul_nt", self.shape_str(), rhs.shape_str()));
        }
        let (b, n, m) = (self.rows, self.cols, rhs.rows);
        let mut out = Matrix::zeros(b, m);
        for batch in 0..b {
            let a_row = self.row(batch);
            let c_row = out.row_mut(batch);
            for (i, c) in c_row.iter_mut().enumerate().take(m) {
                let r_row = rhs.row(i);
                let mut acc = T::zero();
                for l in 0..n {
                    acc += a_row[l] * r_row[l];
                }
                *c = acc;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn add(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(rhs, "hadamard", |a, b| a * b)
    }

    fn zip_with(
        &self,
        rhs: &Matrix<T>,
        op: &'static str,
        f: impl Fn(T, T) -> T,
    ) -> Result<Matrix<T>> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape(op, self.shape_str(), rhs.shape_str()));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add_assign(&mut self, rhs: &Matrix<T>) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape("add_assign", self.shape_str(), rhs.shape_str()));
        }
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        Ok(())
    }

    /// `self += scale * rhs` (fused AXPY update).
    pub fn add_scaled(&mut self, rhs: &Matrix<T>, scale: T) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape("add_scaled", self.shape_str(), rhs.shape_str()));
        }
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scaled(&self, s: T) -> Matrix<T> {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Adds `v` to every row (bias broadcast over the batch).
    pub fn add_row_broadcast(&mut self, v: &[T]) -> Result<()> {
        if v.len() != self.cols {
            return Err(Error::shape("add_row_broadcast", self.cols, v.len()));
        }
        for r in 0..self.rows {
            for (a, &b) in self.row_mut(r).iter_mut().zip(v) {
                *a += b;
            }
        }
        Ok(())
    }

    /// Multiplies every row by `v` element-wise (binary-key broadcast).
    pub fn mul_row_broadcast(&mut self, v: &[T]) -> Result<()> {
        if v.len() != self.cols {
            return Err(Error::shape("mul_row_broadcast", self.cols, v.len()));
        }
        for r in 0..self.rows {
            for (a, &b) in self.row_mut(r).iter_mut().zip(v) {
                *a *= b;
            }
        }
        Ok(())
    }

    /// Column sums (batch reduction for bias gradients).
    pub fn col_sums(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for r in 0..self.rows {
            for (acc, &v) in out.iter_mut().zip(self.row(r)) {
                *acc += v;
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest entry-wise |self - rhs|, widened to f64 (test/diagnostic aid).
    pub fn max_abs_diff(&self, rhs: &Matrix<T>) -> f64 {
        assert_eq!(self.shape(), rhs.shape(), "max_abs_diff shape");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| (a.to_f64_lossy() - b.to_f64_lossy()).abs())
            .fold(0.0, f64::max)
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;
    use proptest::prelude::*;

    /// Independent oracle: plain triple loop, no shared code with `matmul`.
    fn matmul_triple_loop(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
        let mut c = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for l in 0..a.cols() {
                    acc += a.get(i, l) * b.get(l, j);
                }
                c.set(i, j, acc);
            }
        }
        c
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix<f64> {
        Matrix::from_fn(rows, cols, |_, _| rng.uniform_in(-1.0, 1.0))
    }

    #[test]
    fn matmul_identity_passthrough() {
        let a = Matrix::from_rows(&[vec![1.0f64, 2.0], vec![3.0, 4.0]]).unwrap();
        let i2 = Matrix::identity(2);
        assert_eq!(i2.matmul(&a).unwrap(), a);
    }

    #[test]
    fn matmul_hand_computed_1x2_2x1() {
        let a = Matrix::from_rows(&[vec![1.0f64, 2.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![3.0f64], vec![4.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), (1, 1));
        assert_eq!(c.get(0, 0), 11.0);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = RngStream::new(7, 0);
        let a = random_matrix(5, 4, &mut rng);
        let b = random_matrix(4, 3, &mut rng);
        let expect = matmul_triple_loop(&a, &b);
        let got = a.matmul(&b).unwrap();
        assert!(got.max_abs_diff(&expect) <= 1e-12);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::<f64>::zeros(2, 3);
        let b = Matrix::<f64>::zeros(4, 2);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("4x2"), "{msg}");
    }

    #[test]
    fn transposed_products_match_explicit_transpose() {
        let mut rng = RngStream::new(11, 0);
        let a = random_matrix(6, 4, &mut rng);
        let b = random_matrix(6, 5, &mut rng);
        let tn = a.matmul_tn(&b).unwrap();
        assert!(tn.max_abs_diff(&a.transpose().matmul(&b).unwrap()) <= 1e-12);

        let c = random_matrix(3, 4, &mut rng);
        let d = random_matrix(5, 4, &mut rng);
        let nt = c.matmul_nt(&d).unwrap();
        assert!(nt.max_abs_diff(&c.matmul(&d.transpose()).unwrap()) <= 1e-12);
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Matrix::from_vec(2, 2, vec![1.0f64, 2.0, 3.0]).is_err());
    }

    proptest! {
        // Bilinearity: A(B + C) = AB + AC on random small shapes.
        #[test]
        fn matmul_is_bilinear(
            m in 1usize..=8, k in 1usize..=8, n in 1usize..=8, seed in 0u64..1000
        ) {
            let mut rng = RngStream::new(seed, 1);
            let a = random_matrix(m, k, &mut rng);
            let b = random_matrix(k, n, &mut rng);
            let c = random_matrix(k, n, &mut rng);
            let lhs = a.matmul(&b.add(&c).unwrap()).unwrap();
            let rhs = a.matmul(&b).unwrap().add(&a.matmul(&c).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
        }

        // Public ops keep entries finite when inputs are finite.
        #[test]
        fn products_stay_finite(m in 1usize..=6, k in 1usize..=6, seed in 0u64..500) {
            let mut rng = RngStream::new(seed, 2);
            let a = random_matrix(m, k, &mut rng);
            let b = random_matrix(k, m, &mut rng);
            prop_assert!(a.matmul(&b).unwrap().all_finite());
            prop_assert!(a.matmul_tn(&a).unwrap().all_finite());
            prop_assert!(a.matmul_nt(&b.transpose()).unwrap().all_finite());
        }
    }
}
