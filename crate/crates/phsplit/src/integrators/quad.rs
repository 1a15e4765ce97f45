//! Adaptive Gauss-Kronrod (7-15) quadrature for smooth vector integrands.

use crate::{Error, Scalar};

/// Kronrod abscissae (positive half, descending).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// 15-point Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// 7-point Gauss weights on the odd Kronrod abscissae and the center.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod panel: returns `(integral, error_estimate)` where the
/// estimate is the max-component gap between the two embedded rules.
fn panel<T: Scalar, F: Fn(T) -> Vec<T>>(f: &F, a: T, b: T, dim: usize) -> (Vec<T>, T) {
    let half = (b - a) * T::from_f64_lit(0.5);
    let center = (a + b) * T::from_f64_lit(0.5);

    let mut kronrod = vec![T::zero(); dim];
    let mut gauss = vec![T::zero(); dim];
    let fc = f(center);
    for i in 0..dim {
        kronrod[i] += T::from_f64_lit(WGK[7]) * fc[i];
        gauss[i] += T::from_f64_lit(WG[3]) * fc[i];
    }
    for (i, &node) in XGK.iter().enumerate().take(7) {
        let offset = half * T::from_f64_lit(node);
        let f_lo = f(center - offset);
        let f_hi = f(center + offset);
        let wk = T::from_f64_lit(WGK[i]);
        for d in 0..dim {
            kronrod[d] += wk * (f_lo[d] + f_hi[d]);
        }
        if i % 2 == 1 {
            let wg = T::from_f64_lit(WG[(i - 1) / 2]);
            for d in 0..dim {
                gauss[d] += wg * (f_lo[d] + f_hi[d]);
            }
        }
    }

    let mut err = T::zero();
    for d in 0..dim {
        err = err.max((kronrod[d] - gauss[d]).abs());
        kronrod[d] = kronrod[d] * half;
    }
    (kronrod, err * half.abs())
}

const MAX_DEPTH: usize = 48;

/// Integrate a vector-valued function over `[a, b]` to the given absolute
/// tolerance (max component), bisecting until each panel meets its share.
pub fn adaptive_vec<T: Scalar, F: Fn(T) -> Vec<T>>(
    f: &F,
    a: T,
    b: T,
    dim: usize,
    abs_tol: T,
) -> Result<Vec<T>, Error> {
    if a == b {
        return Ok(vec![T::zero(); dim]);
    }
    let mut total = vec![T::zero(); dim];
    recurse(f, a, b, dim, abs_tol, MAX_DEPTH, &mut total)?;
    Ok(total)
}

fn recurse<T: Scalar, F: Fn(T) -> Vec<T>>(
    f: &F,
    a: T,
    b: T,
    dim: usize,
    tol: T,
    depth: usize,
    total: &mut [T],
) -> Result<(), Error> {
    let (value, err) = panel(f, a, b, dim);
    if err <= tol || depth == 0 {
        if err > tol {
            return Err(Error::QuadratureNoConvergence {
                requested: tol.to_f64().unwrap_or(f64::NAN),
                achieved: err.to_f64().unwrap_or(f64::NAN),
            });
        }
        for d in 0..dim {
            total[d] += value[d];
        }
        return Ok(());
    }
    let mid = (a + b) * T::from_f64_lit(0.5);
    let half_tol = tol * T::from_f64_lit(0.5);
    recurse(f, a, mid, dim, half_tol, depth - 1, total)?;
    recurse(f, mid, b, dim, half_tol, depth - 1, total)
}

/// Scalar convenience wrapper around [`adaptive_vec`].
pub fn adaptive_scalar<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, abs_tol: T) -> Result<T, Error> {
    let wrapped = |t: T| vec![f(t)];
    Ok(adaptive_vec(&wrapped, a, b, 1, abs_tol)?[0])
}
