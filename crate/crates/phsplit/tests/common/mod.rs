//! Shared test helpers: an independent matrix-exponential oracle and
//! small vector utilities.

use phsplit::matcore::Matrix;
use phsplit::Real;

/// 30-term scaled-and-squared Taylor series for `exp(X)`, independent of
/// the Padé implementation under test.
pub fn expm_taylor_oracle(x: &Matrix<Real>) -> Matrix<Real> {
    let n = x.rows();
    let norm = x.norm_one();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = x.scaled(0.5f64.powi(squarings));

    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=30 {
        term = term.matmul(&scaled).scaled(1.0 / k as Real);
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

pub fn vec_diff_norm(a: &[Real], b: &[Real]) -> Real {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<Real>()
        .sqrt()
}
