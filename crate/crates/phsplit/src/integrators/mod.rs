//! Steppers for the splitting schemes.
//!
//! * [`AutonomousStepper`] runs the energy-associated decomposition
//!   `L1 = -R`, `L2 = J` with optional commutator corrections, including
//!   the general sixth-order class-a composition with its central `S`
//!   factor.
//! * [`PbsStepper`] runs the port-based decomposition for driven systems:
//!   drift stages with the input frozen at the current inner-dynamics
//!   clock, alternating with homogeneous flows of the full `J - R`.
//! * [`EsqStepper`] combines an energy-associated splitting with a Simpson
//!   rule on the variation-of-constants integral.
//!
//! Stage matrices are exponentials of constant matrices, precomputed once
//! per `(system, scheme, h)` and reused across all steps.

pub mod quad;
mod reference;

pub use reference::{
    exact_flow, exact_flow_matrix, reference_nonautonomous, reference_step_with_flow,
    supplied_energy_window,
};

use crate::matcore::{dot, norm2, Matrix};
use crate::phmodel::{InputSignal, PHSystem};
use crate::schemes::{SchemeKind, SchemeSpec, STerm, SVariant, Subproblem};
use crate::{Error, Scalar};

/// The commutators entering the force-gradient corrections, with their
/// parities checked: `c`, `l1d` and the three `z` constituents are
/// skew-symmetric, `d` and `l2l2d` symmetric.
#[derive(Debug, Clone)]
pub struct ForceGradients<T> {
    /// `C = [L1, [L1, L2]]` (skew).
    pub c: Matrix<T>,
    /// `D = [L2, [L1, L2]]` (symmetric).
    pub d: Matrix<T>,
    /// `[L1, D]` (skew); vanishes for the damped oscillator family.
    pub l1d: Matrix<T>,
    /// `[L1, [L1, C]]` (skew).
    pub l1l1c: Matrix<T>,
    /// `[L1, [L2, D]]` (skew).
    pub l1l2d: Matrix<T>,
    /// `[L2, [L2, C]]` (skew).
    pub l2l2c: Matrix<T>,
    /// `[L2, [L2, D]]` (symmetric; using it as a force gradient breaks
    /// the dissipation inequality).
    pub l2l2d: Matrix<T>,
}

/// Build the commutators of the energy-associated decomposition and check
/// each against its parity class.
pub fn force_gradient_matrices<T: Scalar>(
    system: &PHSystem<T>,
) -> Result<ForceGradients<T>, Error> {
    let l1 = system.l1();
    let l2 = system.l2();
    let k = Matrix::commutator(&l1, &l2)?;
    let c = Matrix::commutator(&l1, &k)?;
    let d = Matrix::commutator(&l2, &k)?;
    let l1d = Matrix::commutator(&l1, &d)?;
    let l1c = Matrix::commutator(&l1, &c)?;
    let l2d = Matrix::commutator(&l2, &d)?;
    let l2c = Matrix::commutator(&l2, &c)?;
    let fg = ForceGradients {
        l1l1c: Matrix::commutator(&l1, &l1c)?,
        l1l2d: Matrix::commutator(&l1, &l2d)?,
        l2l2c: Matrix::commutator(&l2, &l2c)?,
        l2l2d: Matrix::commutator(&l2, &l2d)?,
        c,
        d,
        l1d,
    };

    let tol = |m: &Matrix<T>| T::from_f64_lit(1e-12) * T::one().max(m.max_abs());
    let skew: [(&str, &Matrix<T>); 5] = [
        ("C", &fg.c),
        ("[L1,D]", &fg.l1d),
        ("[L1,[L1,C]]", &fg.l1l1c),
        ("[L1,[L2,D]]", &fg.l1l2d),
        ("[L2,[L2,C]]", &fg.l2l2c),
    ];
    for (name, m) in skew {
        if m.skewness_defect() > tol(m) {
            return Err(Error::ParityViolation(format!("{name} is not skew-symmetric")));
        }
    }
    let symmetric: [(&str, &Matrix<T>); 2] = [("D", &fg.d), ("[L2,[L2,D]]", &fg.l2l2d)];
    for (name, m) in symmetric {
        if m.symmetry_defect() > tol(m) {
            return Err(Error::ParityViolation(format!("{name} is not symmetric")));
        }
    }
    Ok(fg)
}

/// Precomputed stage exponentials of an energy-associated scheme at a
/// fixed step size, in application order (first entry acts first).
#[derive(Debug, Clone)]
pub struct AutonomousStepper<T> {
    name: String,
    dim: usize,
    h: T,
    stages: Vec<Matrix<T>>,
}

impl<T: Scalar> AutonomousStepper<T> {
    pub fn new(system: &PHSystem<T>, spec: &SchemeSpec<T>, h: T) -> Result<Self, Error> {
        if spec.kind == SchemeKind::PortBased {
            return Err(Error::WrongSchemeFamily {
                name: spec.name.clone(),
                reason: "port-based tuples belong to the port-based stepper".into(),
            });
        }
        if !h.is_finite() || h < T::zero() {
            return Err(Error::InvalidStep(h.to_f64().unwrap_or(f64::NAN)));
        }

        let l1 = system.l1();
        let l2 = system.l2();
        let needs_commutators = !spec.fg.is_empty() || spec.z.is_some() || spec.s_term.is_some();
        let fg = if needs_commutators {
            Some(force_gradient_matrices(system)?)
        } else {
            None
        };
        let h3 = h * h * h;
        let h4 = h3 * h;
        let h5 = h4 * h;

        let z_matrix = spec.z.as_ref().map(|w| {
            let f = fg.as_ref().expect("commutators built when z is present");
            let mut z = f.l1l1c.scaled(w.l1l1c);
            z.axpy(w.l1l2d, &f.l1l2d);
            z.axpy(w.l2l2c, &f.l2l2c);
            z.axpy(w.l2l2d, &f.l2l2d);
            z
        });

        let fg_coeff = |stage: usize, sub: Subproblem| -> T {
            spec.fg
                .iter()
                .filter(|t| t.stage == stage && t.subproblem == sub)
                .map(|t| t.coeff)
                .sum()
        };

        // conservative stage j: exp(b_j h J - c_j h^3 C - b_j h^5 Z)
        let conservative_stage = |j: usize| -> Result<Option<Matrix<T>>, Error> {
            let cj = fg_coeff(j, Subproblem::Conservative);
            if spec.b[j] == T::zero() && cj == T::zero() {
                return Ok(None);
            }
            let mut exponent = l2.scaled(spec.b[j] * h);
            if cj != T::zero() {
                exponent.axpy(-cj * h3, &fg.as_ref().expect("fg built").c);
            }
            if let Some(z) = &z_matrix {
                if spec.b[j] != T::zero() {
                    exponent.axpy(-spec.b[j] * h5, z);
                }
            }
            Ok(Some(exponent.expm()?))
        };
        // dissipative stage j: exp(a_j h L1 - c_j h^3 C)
        let dissipative_stage = |j: usize| -> Result<Option<Matrix<T>>, Error> {
            let cj = fg_coeff(j, Subproblem::Dissipative);
            if spec.a[j] == T::zero() && cj == T::zero() {
                return Ok(None);
            }
            let mut exponent = l1.scaled(spec.a[j] * h);
            if cj != T::zero() {
                exponent.axpy(-cj * h3, &fg.as_ref().expect("fg built").c);
            }
            Ok(Some(exponent.expm()?))
        };

        let mut stages = Vec::new();
        if let Some(s_term) = &spec.s_term {
            // palindromic sixth-order composition around the central S factor
            for j in 0..2 {
                stages.extend(dissipative_stage(j)?);
                stages.extend(conservative_stage(j)?);
            }
            let f = fg.as_ref().expect("commutators built for s_term");
            stages.extend(s_factor_stages(&l1, &f.l1d, spec.a[2], h, s_term)?);
            for j in [1, 0] {
                stages.extend(conservative_stage(j)?);
                stages.extend(dissipative_stage(j)?);
            }
        } else {
            for j in 0..spec.m {
                stages.extend(dissipative_stage(j)?);
                stages.extend(conservative_stage(j)?);
            }
        }

        Ok(Self {
            name: spec.name.clone(),
            dim: system.dim(),
            h,
            stages,
        })
    }

    pub fn scheme_name(&self) -> &str {
        &self.name
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Stage exponentials in application order.
    pub fn stage_matrices(&self) -> &[Matrix<T>] {
        &self.stages
    }

    /// Advance one step: applies the stage exponentials in order.
    pub fn step(&self, x: &[T]) -> Result<Vec<T>, Error> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                op: "step",
                lhs: format!("state of length {}", x.len()),
                rhs: format!("system dimension {}", self.dim),
            });
        }
        let mut cur = x.to_vec();
        for stage in &self.stages {
            cur = stage.apply(&cur);
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: 0 });
        }
        Ok(cur)
    }

    /// Full one-step matrix (product of the stages).
    pub fn step_matrix(&self) -> Matrix<T> {
        let mut acc = Matrix::identity(self.dim);
        for stage in &self.stages {
            acc = stage.matmul(&acc);
        }
        acc
    }
}

/// Stages realizing `exp(a3 h L1 - e h^5 [L1,[L1,D]])` up to higher order,
/// in application order.
fn s_factor_stages<T: Scalar>(
    l1: &Matrix<T>,
    l1d: &Matrix<T>,
    a3: T,
    h: T,
    s_term: &STerm<T>,
) -> Result<Vec<Matrix<T>>, Error> {
    let h4 = h * h * h * h;
    let mut out = Vec::new();
    match s_term.variant {
        SVariant::SplitPair => {
            // exp(a3 h/2 L1 + F) exp(a3 h/2 L1 - F), F = 2e h^4/a3 [L1,D];
            // the minus factor acts first
            let base = l1.scaled(a3 * h * T::from_f64_lit(0.5));
            let f_mat = l1d.scaled(T::from_f64_lit(2.0) * s_term.e * h4 / a3);
            out.push(base.sub(&f_mat).expm()?);
            out.push(base.add(&f_mat).expm()?);
        }
        SVariant::Conjugated => {
            // exp(E) exp(a3 h L1) exp(-E), E = e h^4/a3 [L1,D];
            // exp(-E) acts first
            let e_mat = l1d.scaled(s_term.e * h4 / a3);
            out.push(e_mat.scaled(-T::one()).expm()?);
            out.push(l1.scaled(a3 * h).expm()?);
            out.push(e_mat.expm()?);
        }
    }
    Ok(out)
}

/// Port-based splitting stepper for driven systems.
///
/// One step alternates, for `j = 1..m`, a drift `x += a_j h B u(t2)` with
/// the input frozen at the inner-dynamics clock `t2`, and the homogeneous
/// flow `x = exp(b_j h (J - R)) x` which advances that clock. Both clocks
/// start at `t0` and end at `t0 + h`.
#[derive(Debug, Clone)]
pub struct PbsStepper<T> {
    system: PHSystem<T>,
    h: T,
    a_steps: Vec<T>,
    b_steps: Vec<T>,
    flows: Vec<Option<Matrix<T>>>,
}

impl<T: Scalar> PbsStepper<T> {
    pub fn new(system: &PHSystem<T>, spec: &SchemeSpec<T>, h: T) -> Result<Self, Error> {
        if !spec.is_pbs_compatible() {
            return Err(Error::WrongSchemeFamily {
                name: spec.name.clone(),
                reason: "port-based stepping needs a plain positive step tuple".into(),
            });
        }
        if !h.is_finite() || h < T::zero() {
            return Err(Error::InvalidStep(h.to_f64().unwrap_or(f64::NAN)));
        }
        let a_mat = system.a_matrix();
        let flows = spec
            .b
            .iter()
            .map(|&bj| {
                if bj == T::zero() {
                    Ok(None)
                } else {
                    a_mat.scaled(bj * h).expm().map(Some)
                }
            })
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(Self {
            system: system.clone(),
            h,
            a_steps: spec.a.clone(),
            b_steps: spec.b.clone(),
            flows,
        })
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Advance one step from `(t0, x)`.
    pub fn step(&self, u: &InputSignal<T>, t0: T, x: &[T]) -> Result<Vec<T>, Error> {
        Ok(self.step_with_estimator(u, t0, x)?.0)
    }

    /// Advance one step and return the supplied-energy estimator
    ///
    /// ```text
    /// d = sum_j integral y_j(t)^T dt u(t2_j)
    /// ```
    ///
    /// evaluated in closed form: within a drift stage the state is affine
    /// in `t`, so each integral is
    /// `delta x_start^T (B u) + delta^2/2 |B u|^2` with `delta = a_j h`.
    pub fn step_with_estimator(
        &self,
        u: &InputSignal<T>,
        t0: T,
        x: &[T],
    ) -> Result<(Vec<T>, T), Error> {
        if x.len() != self.system.dim() {
            return Err(Error::DimensionMismatch {
                op: "pbs step",
                lhs: format!("state of length {}", x.len()),
                rhs: format!("system dimension {}", self.system.dim()),
            });
        }
        let mut cur = x.to_vec();
        let mut inner_clock = t0;
        let mut estimator = T::zero();
        let half = T::from_f64_lit(0.5);

        for j in 0..self.a_steps.len() {
            let delta = self.a_steps[j] * self.h;
            if delta != T::zero() {
                let drive = self.system.port_drive(u, inner_clock)?;
                estimator += delta * dot(&cur, &drive) + half * delta * delta * dot(&drive, &drive);
                for (xi, di) in cur.iter_mut().zip(&drive) {
                    *xi += delta * *di;
                }
            }
            if let Some(flow) = &self.flows[j] {
                cur = flow.apply(&cur);
                inner_clock += self.b_steps[j] * self.h;
            }
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: 0 });
        }
        Ok((cur, estimator))
    }
}

/// Energy-associated splitting combined with a Simpson rule on the
/// variation-of-constants integral:
///
/// ```text
/// Psi x = Phi_h(x + h/6 B u(t0)) + 2h/3 Phi_{h/2}(B u(t0 + h/2)) + h/6 B u(t0 + h)
/// ```
///
/// The half step may optionally use the third-order four-stage method,
/// which saves one subflow per step without losing the overall order.
#[derive(Debug, Clone)]
pub struct EsqStepper<T> {
    system: PHSystem<T>,
    full: AutonomousStepper<T>,
    half: AutonomousStepper<T>,
    h: T,
    port_norm: T,
}

impl<T: Scalar> EsqStepper<T> {
    pub fn new(
        system: &PHSystem<T>,
        inner: &SchemeSpec<T>,
        h: T,
        tilde3_half: bool,
    ) -> Result<Self, Error> {
        let conservative_only = !inner.fg.is_empty()
            && inner
                .fg
                .iter()
                .all(|t| t.subproblem == Subproblem::Conservative);
        if inner.order != 4
            || inner.kind != SchemeKind::EnergyAssociated
            || !inner.dissipation_preserving
            || !conservative_only
            || inner.z.is_some()
            || inner.s_term.is_some()
        {
            return Err(Error::WrongSchemeFamily {
                name: inner.name.clone(),
                reason: "inner scheme must be a fourth-order commutator scheme \
                         with the commutator in the energy-conserving subproblem"
                    .into(),
            });
        }
        let half_spec = if tilde3_half {
            crate::schemes::preset::<T>("tilde3")?
        } else {
            inner.clone()
        };
        let half_h = h * T::from_f64_lit(0.5);
        Ok(Self {
            system: system.clone(),
            full: AutonomousStepper::new(system, inner, h)?,
            half: AutonomousStepper::new(system, &half_spec, half_h)?,
            h,
            port_norm: system.port_map().spectral_norm(),
        })
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn step(&self, u: &InputSignal<T>, t0: T, x: &[T]) -> Result<Vec<T>, Error> {
        Ok(self.step_with_estimator(u, t0, x)?.0)
    }

    /// Advance one step and return the quadrature-type energy bound
    /// `d = (|x| + |x'|)/2 |B|_2 Q(|u|_2)` with `Q` the Simpson
    /// approximation of `integral |u(s)|_2 ds` over the step.
    pub fn step_with_estimator(
        &self,
        u: &InputSignal<T>,
        t0: T,
        x: &[T],
    ) -> Result<(Vec<T>, T), Error> {
        let h = self.h;
        let half = T::from_f64_lit(0.5);
        let sixth = T::from_f64_lit(1.0 / 6.0);
        let two_thirds = T::from_f64_lit(2.0 / 3.0);

        let u0 = u.eval_checked(t0)?;
        let u1 = u.eval_checked(t0 + h * half)?;
        let u2 = u.eval_checked(t0 + h)?;
        let b = self.system.port_map();
        let v0 = b.apply(&u0);
        let v1 = b.apply(&u1);
        let v2 = b.apply(&u2);

        let mut arg = x.to_vec();
        for (ai, vi) in arg.iter_mut().zip(&v0) {
            *ai += h * sixth * *vi;
        }
        let full_part = self.full.step(&arg)?;
        let half_part = self.half.step(&v1)?;

        let mut out = full_part;
        for i in 0..out.len() {
            out[i] += h * two_thirds * half_part[i] + h * sixth * v2[i];
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: 0 });
        }

        let q = h * (sixth * norm2(&u0) + two_thirds * norm2(&u1) + sixth * norm2(&u2));
        let d = half * (norm2(x) + norm2(&out)) * self.port_norm * q;
        Ok((out, d))
    }
}
