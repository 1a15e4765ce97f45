//! Dense matrix kernel at small fixed dimension.
//!
//! Row-major storage, no sparsity: every benchmark system lives in
//! dimension two or three. Provides the commutator algebra, the
//! (skew-)symmetry classification, the matrix exponential and the spectral
//! norm the splitting schemes are built from.

mod eig;
mod expm;

use crate::{Error, Scalar};

pub use eig::sym_eigenvalues;

/// Dense row-major matrix.
///
/// Entries are checked to be finite on construction; the arithmetic here
/// cannot produce non-finite values from finite operands except through
/// overflow, which the steppers detect on the state instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Outcome of the (skew-)symmetry classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Skew,
    Neither,
}

impl<T: Scalar> Matrix<T> {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Square diagonal matrix from the given entries.
    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i];
        }
        m
    }

    /// Matrix from a row-major flat buffer. Rejects non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, Error> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "from_vec",
                lhs: format!("{rows}x{cols}"),
                rhs: format!("{} entries", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix construction"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Matrix from nested rows. Rejects ragged input and non-finite entries.
    pub fn from_rows(rows: &[&[T]]) -> Result<Self, Error> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                op: "from_rows",
                lhs: format!("{r} rows"),
                rhs: "ragged row lengths".into(),
            });
        }
        let data: Vec<T> = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Flat row-major view of the entries.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `self * alpha`.
    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v * alpha;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b, "add")
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b, "sub")
    }

    /// In-place `self += alpha * rhs`.
    pub fn axpy(&mut self, alpha: T, rhs: &Self) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "axpy shape");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += alpha * *b;
        }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T, op: &'static str) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "{op}: shape mismatch"
        );
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product `self * x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "apply: dimension mismatch");
        let mut out = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// One-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> T {
        let mut best = T::zero();
        for j in 0..self.cols {
            let mut sum = T::zero();
            for i in 0..self.rows {
                sum += self[(i, j)].abs();
            }
            best = best.max(sum);
        }
        best
    }

    /// Max-entry defect of `X - X^T`; zero iff symmetric.
    pub fn symmetry_defect(&self) -> T {
        self.pair_defect(|a, b| (a - b).abs())
    }

    /// Max-entry defect of `X + X^T`; zero iff skew-symmetric.
    pub fn skewness_defect(&self) -> T {
        self.pair_defect(|a, b| (a + b).abs())
    }

    fn pair_defect(&self, f: impl Fn(T, T) -> T) -> T {
        assert!(self.is_square(), "symmetry defect of non-square matrix");
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max(f(self[(i, j)], self[(j, i)]));
            }
        }
        worst
    }

    /// Classify by max-entry test of `X - X^T` and `X + X^T` against `tol`.
    ///
    /// The zero matrix is both; it reports as symmetric.
    pub fn symmetry_class(&self, tol: T) -> Symmetry {
        if self.symmetry_defect() <= tol {
            Symmetry::Symmetric
        } else if self.skewness_defect() <= tol {
            Symmetry::Skew
        } else {
            Symmetry::Neither
        }
    }

    /// Commutator `[X, Y] = XY - YX`.
    pub fn commutator(x: &Self, y: &Self) -> Result<Self, Error> {
        if !x.is_square() || !y.is_square() || x.rows != y.rows {
            return Err(Error::DimensionMismatch {
                op: "commutator",
                lhs: format!("{}x{}", x.rows, x.cols),
                rhs: format!("{}x{}", y.rows, y.cols),
            });
        }
        Ok(x.matmul(y).sub(&y.matmul(x)))
    }

    /// Right-nested commutator `[x1, [x2, [..., xk]]]` of a chain, k >= 2.
    pub fn nested_commutator(chain: &[Self]) -> Result<Self, Error> {
        let (last, init) = chain.split_last().ok_or(Error::DimensionMismatch {
            op: "nested_commutator",
            lhs: "empty chain".into(),
            rhs: String::new(),
        })?;
        if init.is_empty() {
            return Err(Error::DimensionMismatch {
                op: "nested_commutator",
                lhs: "chain of length 1".into(),
                rhs: "need length >= 2".into(),
            });
        }
        let mut acc = last.clone();
        for x in init.iter().rev() {
            acc = Self::commutator(x, &acc)?;
        }
        Ok(acc)
    }

    /// Matrix exponential by scaling and squaring with a degree-13 diagonal
    /// Padé approximant.
    pub fn expm(&self) -> Result<Self, Error> {
        expm::expm(self)
    }

    /// Largest singular value (two-norm), via a symmetric Jacobi
    /// eigensolve of the smaller Gram matrix.
    pub fn spectral_norm(&self) -> T {
        if self.rows == 0 || self.cols == 0 {
            return T::zero();
        }
        let gram = if self.rows >= self.cols {
            self.transpose().matmul(self)
        } else {
            self.matmul(&self.transpose())
        };
        let lambda_max = sym_eigenvalues(&gram)
            .into_iter()
            .fold(T::zero(), T::max);
        lambda_max.max(T::zero()).sqrt()
    }

    /// Solve `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self, Error> {
        expm::lu_solve(self, rhs)
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Euclidean inner product.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2<T: Scalar>(x: &[T]) -> T {
    dot(x, x).sqrt()
}
