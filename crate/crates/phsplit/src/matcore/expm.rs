//! Matrix exponential: scaling and squaring with the degree-13 diagonal
//! Padé approximant, plus the LU solve it needs.

use super::Matrix;
use crate::{Error, Scalar};

/// Padé [13/13] numerator coefficients for exp (denominator is `p(-x)`).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// One-norm threshold above which the argument is scaled down.
const THETA13: f64 = 5.371920351148152;

pub fn expm<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>, Error> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            op: "expm",
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("expm input"));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let theta = T::from_f64_lit(THETA13);
    let norm = a.norm_one();
    let squarings = if norm > theta {
        let ratio = (norm / theta).log2().ceil();
        ratio.to_usize().unwrap_or(0).max(1)
    } else {
        0
    };
    let scale = T::from_f64_lit(0.5).powi(squarings as i32);
    let a_scaled = a.scaled(scale);

    let b: Vec<T> = PADE13.iter().map(|&c| T::from_f64_lit(c)).collect();
    let ident = Matrix::identity(n);
    let a2 = a_scaled.matmul(&a_scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    // u = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let mut w = a6.scaled(b[13]);
    w.axpy(b[11], &a4);
    w.axpy(b[9], &a2);
    let mut u_inner = a6.matmul(&w);
    u_inner.axpy(b[7], &a6);
    u_inner.axpy(b[5], &a4);
    u_inner.axpy(b[3], &a2);
    u_inner.axpy(b[1], &ident);
    let u = a_scaled.matmul(&u_inner);

    // v = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut w = a6.scaled(b[12]);
    w.axpy(b[10], &a4);
    w.axpy(b[8], &a2);
    let mut v = a6.matmul(&w);
    v.axpy(b[6], &a6);
    v.axpy(b[4], &a4);
    v.axpy(b[2], &a2);
    v.axpy(b[0], &ident);

    // (v - u) X = (v + u)
    let mut result = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

/// Solve `A X = B` with partial pivoting. `A` is consumed as a working copy.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, rhs: &Matrix<T>) -> Result<Matrix<T>, Error> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            op: "solve",
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() != rhs.rows() {
        return Err(Error::DimensionMismatch {
            op: "solve",
            lhs: format!("{}x{}", a.rows(), a.cols()),
            rhs: format!("{}x{}", rhs.rows(), rhs.cols()),
        });
    }
    let n = a.rows();
    let m = rhs.cols();
    let mut lu = a.clone();
    let mut x = rhs.clone();

    for k in 0..n {
        // pivot
        let mut piv = k;
        let mut best = lu[(k, k)].abs();
        for i in (k + 1)..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == T::zero() || !best.is_finite() {
            return Err(Error::Singular);
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            for j in 0..m {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = tmp;
            }
        }
        // eliminate
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                let v = lu[(k, j)];
                lu[(i, j)] = lu[(i, j)] - factor * v;
            }
            for j in 0..m {
                let v = x[(k, j)];
                x[(i, j)] = x[(i, j)] - factor * v;
            }
        }
    }
    // back substitution
    for j in 0..m {
        for i in (0..n).rev() {
            let mut acc = x[(i, j)];
            for k in (i + 1)..n {
                acc = acc - lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = acc / lu[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = Matrix::<f64>::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        let rhs = Matrix::from_vec(2, 1, vec![5.0, 10.0]).unwrap();
        let x = lu_solve(&a, &rhs).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((x[(1, 0)] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lu_reports_singular() {
        let a = Matrix::<f64>::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        let rhs = Matrix::identity(2);
        assert!(matches!(lu_solve(&a, &rhs), Err(Error::Singular)));
    }

    #[test]
    fn expm_inverse_of_negation() {
        let a = Matrix::<f64>::from_rows(&[&[0.3, -1.2, 0.0], &[0.7, 0.1, 0.4], &[0.0, 2.0, -0.5]])
            .unwrap();
        let e = expm(&a).unwrap();
        let e_neg = expm(&a.scaled(-1.0)).unwrap();
        let prod = e.matmul(&e_neg);
        assert!(prod.sub(&Matrix::identity(3)).max_abs() < 1e-13);
    }
}
