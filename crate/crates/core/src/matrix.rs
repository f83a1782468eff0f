//! Dense row-major matrices and the handful of kernels the solvers need.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// A dense `rows x cols` matrix of finite `f64` values stored row-major.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::contract(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "non-finite value {} at ({}, {})",
                data[pos],
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::contract(format!(
                    "row {i} has {} values, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix whose `(i, j)` entry is `f(i, j)`.
    ///
    /// # Panics
    /// If a dimension is zero or `f` returns a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                assert!(
                    v.is_finite(),
                    "from_fn produced non-finite value at ({i}, {j})"
                );
                m.data[i * cols + j] = v;
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(rows > 0 && cols > 0);
        Self { rows, cols, data }
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

    /// Row-major view of all entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                t.data[j * self.rows + i] = v;
            }
        }
        t
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        self.check_same_shape(other, op)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub(crate) fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Keeps the first `k` columns.
    pub(crate) fn leading_columns(&self, k: usize) -> Self {
        debug_assert!(k >= 1 && k <= self.cols);
        let mut out = Self::zeros(self.rows, k);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[..k]);
        }
        out
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for v in self.row(i).iter().take(8) {
                write!(f, "{v:>12.5e} ")?;
            }
            writeln!(f, "{}", if self.cols > 8 { "..." } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Standard matrix product `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    Ok(gemm(m, k, n, &a.data, (k, 1), &b.data, (n, 1)))
}

/// `aᵀ * b` without forming the transpose.
pub(crate) fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.rows, b.rows, "matmul_tn inner dimensions");
    let (m, k, n) = (a.cols, a.rows, b.cols);
    gemm(m, k, n, &a.data, (1, a.cols), &b.data, (n, 1))
}

/// `a * bᵀ` without forming the transpose.
pub(crate) fn matmul_nt(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols, b.cols, "matmul_nt inner dimensions");
    let (m, k, n) = (a.rows, a.cols, b.rows);
    gemm(m, k, n, &a.data, (k, 1), &b.data, (1, b.cols))
}

/// Row-major `m x n` product of strided `m x k` and `k x n` operands.
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (a_row, a_col): (usize, usize),
    b: &[f64],
    (b_row, b_col): (usize, usize),
) -> DenseMatrix {
    let mut out = vec![0.0; m * n];
    if k > 0 {
        assert!(a.len() >= m * k && b.len() >= k * n);
        // SAFETY: the operands hold m*k and k*n elements under the given
        // strides (checked above) and `out` holds m*n in row-major order.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                a_row as isize,
                a_col as isize,
                b.as_ptr(),
                b_row as isize,
                b_col as isize,
                0.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
    DenseMatrix::from_raw(m, n, out)
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0f64; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += x[i] * y[i];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..x.len() {
        s += x[i] * y[i];
    }
    s
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖a − b‖_F` without allocating the difference.
pub fn frobenius_distance(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    a.check_same_shape(b, "frobenius_distance")?;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `‖a − x‖_F / ‖a‖_F`.
pub fn relative_residual(a: &DenseMatrix, x: &DenseMatrix) -> Result<f64> {
    let norm_a = frobenius_norm(a);
    if norm_a == 0.0 {
        return Err(Error::degenerate("relative residual against a zero matrix"));
    }
    Ok(frobenius_distance(a, x)? / norm_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{uniform_matrix, RandomSource};

    fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a.get(i, k) * b.get(k, j);
            }
            s
        })
    }

    fn signed(rng: &mut RandomSource, rows: usize, cols: usize) -> DenseMatrix {
        uniform_matrix(rng, rows, cols).map(|v| 2.0 * v - 1.0)
    }

    #[test]
    fn identity_product() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(matmul(&DenseMatrix::identity(2), &m).unwrap(), m);
    }

    #[test]
    fn hand_product() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let p = matmul(&a, &b).unwrap();
        assert_eq!(p.shape(), (2, 1));
        assert_eq!(p.as_slice(), &[2.0, 4.0]);
    }

    #[test]
    fn random_product_matches_triple_loop() {
        let mut rng = RandomSource::new(11);
        let a = signed(&mut rng, 7, 3);
        let b = signed(&mut rng, 3, 5);
        let fast = matmul(&a, &b).unwrap();
        let slow = naive_matmul(&a, &b);
        assert!(relative_residual(&slow, &fast).unwrap() <= 1e-12);
    }

    #[test]
    fn transposed_products_match() {
        let mut rng = RandomSource::new(5);
        let a = signed(&mut rng, 9, 4);
        let b = signed(&mut rng, 9, 6);
        let c = signed(&mut rng, 7, 4);
        let tn = matmul_tn(&a, &b);
        assert!(relative_residual(&naive_matmul(&a.transpose(), &b), &tn).unwrap() <= 1e-14);
        let nt = matmul_nt(&a, &c);
        assert!(relative_residual(&naive_matmul(&a, &c.transpose()), &nt).unwrap() <= 1e-14);
    }

    #[test]
    fn matmul_mismatch_names_both_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                left: (2, 3),
                right: (2, 3),
                ..
            }
        ));
    }

    #[test]
    fn norms() {
        assert_eq!(frobenius_norm(&DenseMatrix::zeros(3, 4)), 0.0);
        let m = DenseMatrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_norm(&m), 5.0);

        let mut rng = RandomSource::new(3);
        let r = signed(&mut rng, 6, 6);
        let mut oracle = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                oracle += r.get(i, j).powi(2);
            }
        }
        assert!((frobenius_norm(&r) - oracle.sqrt()).abs() <= 1e-14 * oracle.sqrt());
    }

    #[test]
    fn relative_residual_cases() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [0.5, -3.0]]).unwrap();
        assert_eq!(relative_residual(&a, &a).unwrap(), 0.0);
        let i2 = DenseMatrix::identity(2);
        assert_eq!(
            relative_residual(&i2, &DenseMatrix::zeros(2, 2)).unwrap(),
            1.0
        );

        let mut rng = RandomSource::new(8);
        let x = signed(&mut rng, 4, 5);
        let y = signed(&mut rng, 4, 5);
        let composed = frobenius_norm(&x.sub(&y).unwrap()) / frobenius_norm(&x);
        assert!((relative_residual(&x, &y).unwrap() - composed).abs() <= 1e-15);

        assert!(matches!(
            relative_residual(&DenseMatrix::zeros(2, 2), &i2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(DenseMatrix::new(0, 3, vec![]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn matmul_agrees_with_naive(m in 1usize..=50, k in 1usize..=50, n in 1usize..=50, seed: u64) {
                let mut rng = RandomSource::new(seed);
                let a = signed(&mut rng, m, k);
                let b = signed(&mut rng, k, n);
                let fast = matmul(&a, &b).unwrap();
                let slow = naive_matmul(&a, &b);
                let denom = frobenius_norm(&slow).max(f64::MIN_POSITIVE);
                prop_assert!(frobenius_distance(&fast, &slow).unwrap() / denom <= 1e-12);
            }

            #[test]
            fn norm_is_absolutely_homogeneous(rows in 1usize..20, cols in 1usize..20, c in -1e3f64..1e3, seed: u64) {
                let mut rng = RandomSource::new(seed);
                let a = signed(&mut rng, rows, cols);
                let lhs = frobenius_norm(&a.scaled(c));
                let rhs = c.abs() * frobenius_norm(&a);
                prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs.max(f64::MIN_POSITIVE));
            }
        }
    }
}
