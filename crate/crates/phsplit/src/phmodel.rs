//! Port-Hamiltonian system representation, validation and the two
//! benchmark models (damped/driven oscillator, linearized rigid body).
//!
//! Systems are of the form `x' = (J - R) x + B u(t)`, `y = B^T x` with
//! quadratic Hamiltonian `H(x) = |x|^2 / 2` (the energy weight is the
//! identity; the rigid-body builder performs its congruence transform once
//! at construction so downstream code never sees another weight).

use std::fmt;
use std::sync::Arc;

use crate::matcore::{dot, norm2, sym_eigenvalues, Matrix};
use crate::{Error, Scalar};

/// Base factor of the structure tolerances: defects are measured against
/// `DEFAULT_TOL * max(1, |M|max)`.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Relative slack on the smallest eigenvalue of `R` in the PSD check.
pub const PSD_SLACK: f64 = 1e-10;

/// Linear port-Hamiltonian system with constant matrices.
#[derive(Debug, Clone)]
pub struct PHSystem<T> {
    j: Matrix<T>,
    r: Matrix<T>,
    b: Matrix<T>,
}

impl<T: Scalar> PHSystem<T> {
    /// Build and validate a system. `j` must be skew, `r` symmetric positive
    /// semidefinite, `b` of shape `n x p` (`p = 0` for autonomous systems).
    pub fn new(j: Matrix<T>, r: Matrix<T>, b: Matrix<T>) -> Result<Self, Error> {
        Self::new_with_tol(j, r, b, T::from_f64_lit(DEFAULT_TOL))
    }

    /// Like [`PHSystem::new`] with a custom base tolerance for the
    /// structure checks.
    pub fn new_with_tol(j: Matrix<T>, r: Matrix<T>, b: Matrix<T>, tol: T) -> Result<Self, Error> {
        let n = j.rows();
        if !j.is_square() || !r.is_square() || r.rows() != n || b.rows() != n {
            return Err(Error::InvalidSystem(format!(
                "shape mismatch: J {}x{}, R {}x{}, B {}x{}",
                j.rows(),
                j.cols(),
                r.rows(),
                r.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if !j.is_finite() || !r.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite("system matrices"));
        }
        let report = ValidationReport::check(&j, &r, tol);
        if !report.passed() {
            return Err(Error::InvalidSystem(report.to_string()));
        }
        Ok(Self { j, r, b })
    }

    pub fn dim(&self) -> usize {
        self.j.rows()
    }

    /// Input dimension `p` (number of columns of `B`).
    pub fn ports(&self) -> usize {
        self.b.cols()
    }

    pub fn structure(&self) -> &Matrix<T> {
        &self.j
    }

    pub fn dissipation(&self) -> &Matrix<T> {
        &self.r
    }

    pub fn port_map(&self) -> &Matrix<T> {
        &self.b
    }

    /// Full system matrix `A = J - R`.
    pub fn a_matrix(&self) -> Matrix<T> {
        self.j.sub(&self.r)
    }

    /// Dissipative generator `L1 = -R`.
    pub fn l1(&self) -> Matrix<T> {
        self.r.scaled(-T::one())
    }

    /// Conservative generator `L2 = J`.
    pub fn l2(&self) -> Matrix<T> {
        self.j.clone()
    }

    /// Collocated output `y = B^T x`.
    pub fn output(&self, x: &[T]) -> Result<Vec<T>, Error> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                op: "output",
                lhs: format!("state of length {}", x.len()),
                rhs: format!("system dimension {}", self.dim()),
            });
        }
        Ok(self.b.transpose().apply(x))
    }

    /// Port drive `B u(t)`.
    pub fn port_drive(&self, u: &InputSignal<T>, t: T) -> Result<Vec<T>, Error> {
        let ut = u.eval_checked(t)?;
        if ut.len() != self.ports() {
            return Err(Error::DimensionMismatch {
                op: "port_drive",
                lhs: format!("input of length {}", ut.len()),
                rhs: format!("{} ports", self.ports()),
            });
        }
        Ok(self.b.apply(&ut))
    }

    /// Re-check the structure assumptions at a custom base tolerance.
    pub fn validate(&self, tol: T) -> ValidationReport<T> {
        ValidationReport::check(&self.j, &self.r, tol)
    }
}

/// Quadratic stored energy `H(x) = |x|^2 / 2`.
pub fn hamiltonian<T: Scalar>(x: &[T]) -> T {
    dot(x, x) * T::from_f64_lit(0.5)
}

/// Diagnostics from the structure check of a matrix pair `(J, R)`.
#[derive(Debug, Clone)]
pub struct ValidationReport<T> {
    /// `max |J + J^T|` entry.
    pub j_skew_defect: T,
    /// `max |R - R^T|` entry.
    pub r_sym_defect: T,
    /// Smallest eigenvalue of the symmetric part of `R`.
    pub r_min_eig: T,
    /// Violated properties, empty when the check passes.
    pub violations: Vec<String>,
}

impl<T: Scalar> ValidationReport<T> {
    /// Check skewness of `j` and symmetry/semidefiniteness of `r` against
    /// `tol * max(1, |M|max)` per matrix.
    pub fn check(j: &Matrix<T>, r: &Matrix<T>, tol: T) -> Self {
        let j_scale = T::one().max(j.max_abs());
        let r_scale = T::one().max(r.max_abs());
        let j_skew_defect = j.skewness_defect();
        let r_sym_defect = r.symmetry_defect();
        let r_min_eig = sym_eigenvalues(r)
            .into_iter()
            .fold(T::infinity(), T::min);
        let r_norm = r.spectral_norm();

        let mut violations = Vec::new();
        if j_skew_defect > tol * j_scale {
            violations.push(format!("J not skew-symmetric: defect {j_skew_defect:e}"));
        }
        if r_sym_defect > tol * r_scale {
            violations.push(format!("R not symmetric: defect {r_sym_defect:e}"));
        }
        if r_min_eig < -T::from_f64_lit(PSD_SLACK) * r_norm {
            violations.push(format!(
                "R not positive semidefinite: min eigenvalue {r_min_eig:e}"
            ));
        }
        Self {
            j_skew_defect,
            r_sym_defect,
            r_min_eig,
            violations,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<T: Scalar> fmt::Display for ValidationReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            write!(
                f,
                "ok (skew defect {:e}, symmetry defect {:e}, min eig {:e})",
                self.j_skew_defect, self.r_sym_defect, self.r_min_eig
            )
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

/// Time-dependent input `u(t)`, an opaque stateless evaluator plus a
/// human-readable descriptor. No symbolic derivatives anywhere: the
/// steppers and estimators only sample `u` pointwise.
#[derive(Clone)]
pub struct InputSignal<T> {
    ports: usize,
    descriptor: String,
    eval: Arc<dyn Fn(T) -> Vec<T> + Send + Sync>,
}

impl<T: Scalar> InputSignal<T> {
    /// Zero input of the given dimension.
    pub fn zero(ports: usize) -> Self {
        Self {
            ports,
            descriptor: "u(t) = 0".into(),
            eval: Arc::new(move |_| vec![T::zero(); ports]),
        }
    }

    /// Scalar cosine drive `u(t) = f0 cos(omega t)`.
    pub fn cosine(f0: T, omega: T) -> Self {
        Self {
            ports: 1,
            descriptor: format!("u(t) = {f0} cos({omega} t)"),
            eval: Arc::new(move |t| vec![f0 * (omega * t).cos()]),
        }
    }

    /// Custom evaluator. The closure must be stateless and deterministic.
    pub fn custom(
        ports: usize,
        descriptor: impl Into<String>,
        eval: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            ports,
            descriptor: descriptor.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn eval(&self, t: T) -> Vec<T> {
        (self.eval)(t)
    }

    /// Evaluate and reject non-finite samples.
    pub fn eval_checked(&self, t: T) -> Result<Vec<T>, Error> {
        let out = self.eval(t);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input signal"));
        }
        Ok(out)
    }
}

impl<T> fmt::Debug for InputSignal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InputSignal")
            .field("ports", &self.ports)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

/// Damped linear oscillator `m q'' = -d q' - k q - f(t)` in first-order
/// port-Hamiltonian form for the state `x = (k^(1/2) q, m^(1/2) q')`.
///
/// With `driven = Some((f0, omega))` the input is `u(t) = f0 cos(omega t)`
/// through `B = (0, -m^(-1/2))^T`; otherwise the system is autonomous
/// (`p = 0`).
pub fn oscillator<T: Scalar>(
    m: T,
    d: T,
    k: T,
    driven: Option<(T, T)>,
) -> Result<(PHSystem<T>, InputSignal<T>), Error> {
    if m <= T::zero() || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("mass m = {m} must be positive")));
    }
    if d < T::zero() || k < T::zero() {
        return Err(Error::InvalidParameter(
            "damping d and stiffness k must be nonnegative".into(),
        ));
    }
    let omega0 = (k / m).sqrt();
    let j = Matrix::from_rows(&[&[T::zero(), omega0], &[-omega0, T::zero()]])?;
    let r = Matrix::diag(&[T::zero(), d / m]);
    let (b, u) = match driven {
        Some((f0, omega)) => (
            Matrix::from_vec(2, 1, vec![T::zero(), -(T::one() / m).sqrt()])?,
            InputSignal::cosine(f0, omega),
        ),
        None => (Matrix::zeros(2, 0), InputSignal::zero(0)),
    };
    Ok((PHSystem::new(j, r, b)?, u))
}

/// Linearized rigid-body dynamics with friction, transformed to the
/// identity energy weight: `J = Q^(1/2) J_Q Q^(1/2)` and likewise for `R`,
/// where `Q = diag(1/I_i)` holds the moments of inertia.
pub fn rigid_body<T: Scalar>(friction: [T; 3], inertia: [T; 3]) -> Result<PHSystem<T>, Error> {
    if inertia.iter().any(|&i| i <= T::zero() || !i.is_finite()) {
        return Err(Error::InvalidParameter(
            "moments of inertia must be positive".into(),
        ));
    }
    if friction.iter().any(|&r| r < T::zero()) {
        return Err(Error::InvalidParameter(
            "friction coefficients must be nonnegative".into(),
        ));
    }
    let o = T::zero();
    let l = T::one();
    let j_q = Matrix::from_rows(&[&[o, -l, l], &[l, o, -l], &[-l, l, o]])?;
    let r_q = Matrix::diag(&friction);
    let q_sqrt: Vec<T> = inertia.iter().map(|&i| (T::one() / i).sqrt()).collect();
    let congruence = |m: &Matrix<T>| {
        let mut out = m.clone();
        for i in 0..3 {
            for j in 0..3 {
                out[(i, j)] = q_sqrt[i] * m[(i, j)] * q_sqrt[j];
            }
        }
        out
    };
    PHSystem::new(congruence(&j_q), congruence(&r_q), Matrix::zeros(3, 0))
}

/// Grid of states with energies and per-step dissipation records.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    /// Node times, strictly increasing, length `N + 1`.
    pub times: Vec<T>,
    /// States at the nodes, length `N + 1`.
    pub states: Vec<Vec<T>>,
    /// Hamiltonian at the nodes, length `N + 1`.
    pub energies: Vec<T>,
    /// Per-step energy differences `H(x_{n+1}) - H(x_n)`, length `N`.
    pub energy_steps: Vec<T>,
    /// Per-step estimator values `d_n` (port-based or quadrature bound),
    /// present on driven runs.
    pub estimator: Option<Vec<T>>,
    /// Per-step exact supplied energy along the reference trajectory,
    /// filled by the diagnostics layer on request.
    pub supplied: Option<Vec<T>>,
    /// Set when `(T - t0)/h` was not an integer and a shorter final step
    /// was taken.
    pub partial_final_step: bool,
}

impl<T: Scalar> Trajectory<T> {
    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.energy_steps.len()
    }

    pub fn final_state(&self) -> &[T] {
        self.states.last().expect("non-empty trajectory")
    }

    /// Step lengths `t_{n+1} - t_n`.
    pub fn step_sizes(&self) -> Vec<T> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Dissipation rates `(H(x_{n+1}) - H(x_n)) / (t_{n+1} - t_n)`.
    pub fn dissipation_rates(&self) -> Vec<T> {
        self.energy_steps
            .iter()
            .zip(self.step_sizes())
            .map(|(&dh, dt)| dh / dt)
            .collect()
    }

    /// Largest state norm over the trajectory.
    pub fn max_state_norm(&self) -> T {
        self.states
            .iter()
            .map(|x| norm2(x))
            .fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillator_matches_stated_matrices() {
        let (sys, u) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let omega = 1000.0_f64.sqrt();
        assert!((sys.structure()[(0, 1)] - omega).abs() < 1e-12);
        assert!((omega - 31.6228).abs() < 1e-4);
        assert_eq!(sys.dissipation()[(1, 1)], 1.0);
        assert_eq!(sys.ports(), 0);
        assert_eq!(u.ports(), 0);
    }

    #[test]
    fn driven_oscillator_port_and_signal() {
        let (sys, u) = oscillator(1.0, 1.0, 1000.0, Some((5.0, 3.0))).unwrap();
        assert_eq!(sys.ports(), 1);
        assert_eq!(sys.port_map()[(1, 0)], -1.0);
        assert_eq!(u.eval(0.0), vec![5.0]);
        // u(pi/6) = 5 cos(pi/2) = 0
        let at = u.eval(std::f64::consts::FRAC_PI_6);
        assert!(at[0].abs() < 1e-14);
    }

    #[test]
    fn undamped_oscillator_is_energy_conserving() {
        let (sys, _) = oscillator(1.0, 0.0, 1000.0, None).unwrap();
        assert_eq!(sys.dissipation().max_abs(), 0.0);
    }

    #[test]
    fn oscillator_rejects_nonpositive_mass() {
        assert!(oscillator(0.0, 1.0, 1.0, None).is_err());
        assert!(oscillator(-1.0, 1.0, 1.0, None).is_err());
    }

    #[test]
    fn hamiltonian_values() {
        assert_eq!(hamiltonian::<f64>(&[0.0, 0.0]), 0.0);
        assert_eq!(hamiltonian(&[0.0, 1.0]), 0.5);
        assert_eq!(hamiltonian(&[1.0, 0.0, 0.0]), 0.5);
    }

    #[test]
    fn output_is_b_transpose_x() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, Some((5.0, 3.0))).unwrap();
        assert_eq!(sys.output(&[0.0, 1.0]).unwrap(), vec![-1.0]);
        assert_eq!(sys.output(&[3.0, 0.0]).unwrap(), vec![0.0]);
        assert!(sys.output(&[1.0]).is_err());
    }

    #[test]
    fn output_of_autonomous_system_is_empty() {
        let sys = rigid_body::<f64>([0.0, 5.0, 1000.0], [1.0 / 4900.0, 1.0, 25.0]).unwrap();
        assert!(sys.output(&[1.0, 0.0, 0.0]).unwrap().is_empty());
    }

    #[test]
    fn rigid_body_congruence_transform() {
        let sys = rigid_body::<f64>([0.0, 5.0, 1000.0], [1.0 / 4900.0, 1.0, 25.0]).unwrap();
        let j = sys.structure();
        assert!((j[(0, 1)] + 70.0).abs() < 1e-10);
        assert!((j[(0, 2)] - 14.0).abs() < 1e-12);
        assert!((j[(1, 2)] + 0.2).abs() < 1e-14);
        let r = sys.dissipation();
        assert!((r[(0, 0)]).abs() < 1e-14);
        assert!((r[(1, 1)] - 5.0).abs() < 1e-12);
        assert!((r[(2, 2)] - 40.0).abs() < 1e-10);
    }

    #[test]
    fn rigid_body_frictionless_and_unit_inertia() {
        let sys = rigid_body::<f64>([0.0; 3], [1.0; 3]).unwrap();
        assert_eq!(sys.dissipation().max_abs(), 0.0);
        assert_eq!(sys.structure()[(0, 1)], -1.0);
        assert!(rigid_body::<f64>([0.0; 3], [1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn validation_flags_constructed_violations() {
        let omega = 1000.0_f64.sqrt();
        let mut j = Matrix::from_rows(&[&[0.0, omega], &[-omega, 0.0]]).unwrap();
        let r = Matrix::diag(&[0.0, 1.0]);
        assert!(ValidationReport::check(&j, &r, 1e-12).passed());

        j[(0, 1)] += 1e-3;
        let report = ValidationReport::check(&j, &r, 1e-12);
        assert!(!report.passed());
        assert!((report.j_skew_defect - 1e-3).abs() < 1e-9);

        let j_ok = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        let r_bad = Matrix::diag(&[0.0, -1.0]);
        let report = ValidationReport::check(&j_ok, &r_bad, 1e-12);
        assert!(!report.passed());
        assert!(report.r_min_eig < -0.5);
        assert!(report.to_string().contains("semidefinite"));
    }

    #[test]
    fn instantaneous_dissipation_sign() {
        let sys = rigid_body::<f64>([0.0, 5.0, 1000.0], [1.0 / 4900.0, 1.0, 25.0]).unwrap();
        let a = sys.a_matrix();
        for x in [[1.0, 0.0, 0.0], [0.3, -0.7, 0.2], [-1.0, 2.0, 0.5]] {
            let ax = a.apply(&x);
            let q = dot(&x, &ax);
            let scale = dot(&x, &x) * a.max_abs();
            assert!(q <= 1e-12 * scale.max(1.0), "x^T (J - R) x = {q} > 0");
        }
    }
}
