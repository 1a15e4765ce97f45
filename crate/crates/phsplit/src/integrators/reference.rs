//! Exact and reference flows: the homogeneous matrix exponential flow and
//! the variation-of-constants solution for driven systems.
//!
//! The driven reference is deliberately independent of the splitting code
//! it judges: it only uses the matrix exponential and adaptive quadrature.

use super::quad;
use crate::matcore::{dot, Matrix};
use crate::phmodel::{InputSignal, PHSystem};
use crate::{Error, Scalar};

/// Flow matrix `exp(t (J - R))` of the homogeneous system.
pub fn exact_flow_matrix<T: Scalar>(system: &PHSystem<T>, t: T) -> Result<Matrix<T>, Error> {
    system.a_matrix().scaled(t).expm()
}

/// Exact homogeneous solution `x(t) = exp(t (J - R)) x0`.
pub fn exact_flow<T: Scalar>(system: &PHSystem<T>, t: T, x0: &[T]) -> Result<Vec<T>, Error> {
    if x0.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            op: "exact_flow",
            lhs: format!("state of length {}", x0.len()),
            rhs: format!("system dimension {}", system.dim()),
        });
    }
    Ok(exact_flow_matrix(system, t)?.apply(x0))
}

/// Variation-of-constants solution of the driven system at `t1`:
///
/// ```text
/// x(t1) = exp((t1 - t0) A) x0 + integral_{t0}^{t1} exp((t1 - s) A) B u(s) ds
/// ```
///
/// with the integral evaluated by adaptive Gauss-Kronrod quadrature to the
/// given absolute tolerance.
pub fn reference_nonautonomous<T: Scalar>(
    system: &PHSystem<T>,
    u: &InputSignal<T>,
    t0: T,
    t1: T,
    x0: &[T],
    abs_tol: T,
) -> Result<Vec<T>, Error> {
    let flow = exact_flow_matrix(system, t1 - t0)?;
    reference_step_with_flow(system, u, &flow, t0, t1 - t0, x0, abs_tol)
}

/// Same as [`reference_nonautonomous`] over one window, reusing a
/// precomputed flow matrix `exp(h A)` across windows of equal length.
pub fn reference_step_with_flow<T: Scalar>(
    system: &PHSystem<T>,
    u: &InputSignal<T>,
    flow_h: &Matrix<T>,
    t0: T,
    h: T,
    x0: &[T],
    abs_tol: T,
) -> Result<Vec<T>, Error> {
    let n = system.dim();
    let mut out = flow_h.apply(x0);
    if system.ports() == 0 || h == T::zero() {
        return Ok(out);
    }
    let a_mat = system.a_matrix();
    let t1 = t0 + h;
    let integrand = |s: T| -> Vec<T> {
        let drive = system
            .port_drive(u, s)
            .expect("input signal must stay finite over the window");
        a_mat
            .scaled(t1 - s)
            .expm()
            .expect("finite system matrix has a finite exponential")
            .apply(&drive)
    };
    let particular = quad::adaptive_vec(&integrand, t0, t1, n, abs_tol)?;
    for i in 0..n {
        out[i] += particular[i];
    }
    Ok(out)
}

/// Exact supplied energy over one window along the reference trajectory:
/// `integral_{t0}^{t0+h} y(t)^T u(t) dt` with `y = B^T x_ref` and `x_ref`
/// the variation-of-constants solution started from `x_start`.
pub fn supplied_energy_window<T: Scalar>(
    system: &PHSystem<T>,
    u: &InputSignal<T>,
    t0: T,
    h: T,
    x_start: &[T],
    abs_tol: T,
) -> Result<T, Error> {
    if system.ports() == 0 {
        return Ok(T::zero());
    }
    let x_owned = x_start.to_vec();
    let integrand = |t: T| -> T {
        let x_ref = reference_nonautonomous(system, u, t0, t, &x_owned, abs_tol)
            .expect("reference solvable inside the window");
        let y = system.output(&x_ref).expect("dimensions fixed");
        let ut = u.eval(t);
        dot(&y, &ut)
    };
    quad::adaptive_scalar(integrand, t0, t0 + h, abs_tol * T::one().max(h))
}
