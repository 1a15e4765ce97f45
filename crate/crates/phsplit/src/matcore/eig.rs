//! Symmetric eigenvalues by cyclic Jacobi rotations.
//!
//! A handful of sweeps on matrices of dimension <= 6 reaches round-off;
//! quadratic convergence makes the sweep cap generous.

use super::Matrix;
use crate::Scalar;

const MAX_SWEEPS: usize = 50;

/// Eigenvalues of the symmetric part of a square matrix, ascending.
///
/// Callers pass (numerically) symmetric input; the routine symmetrizes
/// first so that round-off asymmetry cannot break the rotations.
pub fn sym_eigenvalues<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    assert!(a.is_square(), "sym_eigenvalues of non-square matrix");
    let n = a.rows();
    if n == 0 {
        return Vec::new();
    }
    let half = T::from_f64_lit(0.5);
    let mut m = a.add(&a.transpose()).scaled(half);

    let scale = m.max_abs();
    if scale == T::zero() {
        return vec![T::zero(); n];
    }
    let tol = T::epsilon() * scale * T::from_f64_lit(n as f64);

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * T::from_f64_lit(1e-3) {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::from_f64_lit(2.0) * apq);
                // smaller-angle root of t^2 + 2 t theta - 1 = 0
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }

    let mut eigs: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eigs
}
