//! Experiment harness: trajectory integration with energy traces,
//! convergence-order studies against exact or variation-of-constants
//! references, and dissipation studies with estimator comparisons.

use crate::integrators::{
    exact_flow, exact_flow_matrix, reference_nonautonomous, reference_step_with_flow,
    supplied_energy_window, AutonomousStepper, EsqStepper, PbsStepper,
};
use crate::matcore::norm2;
use crate::phmodel::{hamiltonian, InputSignal, PHSystem, Trajectory};
use crate::schemes::{guarded_order_fit, SchemeSpec};
use crate::{Error, Scalar};

/// Absolute tolerance factor of the driven reference and the supplied
/// energy quadrature.
pub const REFERENCE_TOL: f64 = 1e-12;

/// Round-off floor factor of convergence errors.
pub const ERROR_FLOOR: f64 = 1e-13;

/// How a trajectory is advanced.
#[derive(Debug, Clone)]
pub enum Method<T> {
    /// Energy-associated splitting of an autonomous system.
    Autonomous(SchemeSpec<T>),
    /// Port-based splitting of a driven system.
    PortBased(SchemeSpec<T>),
    /// Energy-associated splitting plus Simpson quadrature (driven).
    Esq {
        inner: SchemeSpec<T>,
        tilde3_half: bool,
    },
}

impl<T: Scalar> Method<T> {
    pub fn label(&self) -> String {
        match self {
            Method::Autonomous(s) | Method::PortBased(s) => s.name.clone(),
            Method::Esq { inner, tilde3_half } => {
                if *tilde3_half {
                    format!("esq-tilde3[{}]", inner.name)
                } else {
                    format!("esq[{}]", inner.name)
                }
            }
        }
    }

    fn needs_input(&self) -> bool {
        !matches!(self, Method::Autonomous(_))
    }
}

enum Stepper<T> {
    Auto(AutonomousStepper<T>),
    Pbs(PbsStepper<T>),
    Esq(EsqStepper<T>),
}

impl<T: Scalar> Stepper<T> {
    fn build(system: &PHSystem<T>, method: &Method<T>, h: T) -> Result<Self, Error> {
        Ok(match method {
            Method::Autonomous(spec) => Stepper::Auto(AutonomousStepper::new(system, spec, h)?),
            Method::PortBased(spec) => Stepper::Pbs(PbsStepper::new(system, spec, h)?),
            Method::Esq { inner, tilde3_half } => {
                Stepper::Esq(EsqStepper::new(system, inner, h, *tilde3_half)?)
            }
        })
    }

    /// Returns the new state and, for driven methods, the step estimator.
    fn advance(
        &self,
        u: Option<&InputSignal<T>>,
        t: T,
        x: &[T],
    ) -> Result<(Vec<T>, Option<T>), Error> {
        match self {
            Stepper::Auto(s) => Ok((s.step(x)?, None)),
            Stepper::Pbs(s) => {
                let (x1, d) = s.step_with_estimator(u.expect("checked"), t, x)?;
                Ok((x1, Some(d)))
            }
            Stepper::Esq(s) => {
                let (x1, d) = s.step_with_estimator(u.expect("checked"), t, x)?;
                Ok((x1, Some(d)))
            }
        }
    }
}

/// Number of uniform steps covering `[t0, t_end]`, plus the length of a
/// final partial step when the span is not an integer multiple of `h`.
fn step_plan<T: Scalar>(t0: T, t_end: T, h: T) -> Result<(usize, Option<T>), Error> {
    if !h.is_finite() || h <= T::zero() {
        return Err(Error::InvalidStep(h.to_f64().unwrap_or(f64::NAN)));
    }
    if t_end <= t0 {
        return Err(Error::InvalidParameter(format!(
            "empty time span [{t0}, {t_end}]"
        )));
    }
    let ratio = (t_end - t0) / h;
    let nearest = ratio.round();
    let slack = T::epsilon() * T::from_f64_lit(4.0) * T::one().max(ratio);
    if (ratio - nearest).abs() <= slack && nearest >= T::one() {
        let n = nearest.to_usize().ok_or_else(|| {
            Error::InvalidParameter(format!("step count {nearest} out of range"))
        })?;
        Ok((n, None))
    } else {
        let full = ratio.floor().to_usize().unwrap_or(0);
        let rest = t_end - t0 - T::from_f64_lit(full as f64) * h;
        Ok((full, Some(rest)))
    }
}

/// Integrate on a uniform grid, recording states, energies and per-step
/// energy differences (plus estimators on driven methods).
///
/// `(t_end - t0)/h` should be an integer; a remainder is covered by a
/// final shorter step and flagged on the trajectory.
pub fn integrate<T: Scalar>(
    system: &PHSystem<T>,
    u: Option<&InputSignal<T>>,
    method: &Method<T>,
    x0: &[T],
    t0: T,
    t_end: T,
    h: T,
) -> Result<Trajectory<T>, Error> {
    if method.needs_input() && u.is_none() {
        return Err(Error::InvalidParameter(
            "driven method needs an input signal".into(),
        ));
    }
    let (full_steps, partial) = step_plan(t0, t_end, h)?;
    let stepper = Stepper::build(system, method, h)?;
    let driven = method.needs_input();

    let mut times = Vec::with_capacity(full_steps + 2);
    let mut states = Vec::with_capacity(full_steps + 2);
    let mut energies = Vec::with_capacity(full_steps + 2);
    let mut energy_steps = Vec::with_capacity(full_steps + 1);
    let mut estimators = Vec::with_capacity(full_steps + 1);

    let mut x = x0.to_vec();
    times.push(t0);
    states.push(x.clone());
    energies.push(hamiltonian(&x));

    let mut record = |n: usize,
                      t_next: T,
                      result: Result<(Vec<T>, Option<T>), Error>|
     -> Result<Vec<T>, Error> {
        let (x_next, d) = result.map_err(|e| match e {
            Error::NonFiniteState { .. } => Error::NonFiniteState { step: n },
            other => other,
        })?;
        let h_next = hamiltonian(&x_next);
        energy_steps.push(h_next - energies.last().copied().expect("nonempty"));
        if let Some(d) = d {
            estimators.push(d);
        }
        times.push(t_next);
        states.push(x_next.clone());
        energies.push(h_next);
        Ok(x_next)
    };

    for n in 0..full_steps {
        let t = t0 + T::from_f64_lit(n as f64) * h;
        let t_next = if n + 1 == full_steps && partial.is_none() {
            t_end
        } else {
            t0 + T::from_f64_lit((n + 1) as f64) * h
        };
        x = record(n, t_next, stepper.advance(u, t, &x))?;
    }
    if let Some(h_last) = partial {
        let t = t0 + T::from_f64_lit(full_steps as f64) * h;
        let last_stepper = Stepper::build(system, method, h_last)?;
        record(full_steps, t_end, last_stepper.advance(u, t, &x))?;
    }

    Ok(Trajectory {
        times,
        states,
        energies,
        energy_steps,
        estimator: if driven { Some(estimators) } else { None },
        supplied: None,
        partial_final_step: partial.is_some(),
    })
}

/// Fill the per-step exact supplied energy of a driven trajectory from the
/// variation-of-constants reference propagated along the same grid.
pub fn attach_supplied<T: Scalar>(
    system: &PHSystem<T>,
    u: &InputSignal<T>,
    traj: &mut Trajectory<T>,
) -> Result<(), Error> {
    let tol = T::from_f64_lit(REFERENCE_TOL) * T::one().max(traj.max_state_norm());
    let mut supplied = Vec::with_capacity(traj.steps());
    let mut x_ref = traj.states[0].clone();
    let mut flow_cache: Option<(T, crate::matcore::Matrix<T>)> = None;
    for n in 0..traj.steps() {
        let t = traj.times[n];
        let h = traj.times[n + 1] - t;
        supplied.push(supplied_energy_window(system, u, t, h, &x_ref, tol)?);
        let flow = match &flow_cache {
            Some((hc, m)) if *hc == h => m.clone(),
            _ => {
                let m = exact_flow_matrix(system, h)?;
                flow_cache = Some((h, m.clone()));
                m
            }
        };
        x_ref = reference_step_with_flow(system, u, &flow, t, h, &x_ref, tol)?;
    }
    traj.supplied = Some(supplied);
    Ok(())
}

/// Exact supplied power `y(t_n)^T u(t_n)` along the reference trajectory
/// at the given grid times.
pub fn supplied_power_on_grid<T: Scalar>(
    system: &PHSystem<T>,
    u: &InputSignal<T>,
    x0: &[T],
    times: &[T],
) -> Result<Vec<T>, Error> {
    let tol = T::from_f64_lit(REFERENCE_TOL) * T::one().max(norm2(x0));
    let mut powers = Vec::with_capacity(times.len());
    let mut x_ref = x0.to_vec();
    let mut flow_cache: Option<(T, crate::matcore::Matrix<T>)> = None;
    for (n, &t) in times.iter().enumerate() {
        let y = system.output(&x_ref)?;
        let ut = u.eval_checked(t)?;
        powers.push(crate::matcore::dot(&y, &ut));
        if n + 1 < times.len() {
            let h = times[n + 1] - t;
            let flow = match &flow_cache {
                Some((hc, m)) if *hc == h => m.clone(),
                _ => {
                    let m = exact_flow_matrix(system, h)?;
                    flow_cache = Some((h, m.clone()));
                    m
                }
            };
            x_ref = reference_step_with_flow(system, u, &flow, t, h, &x_ref, tol)?;
        }
    }
    Ok(powers)
}

/// Per-scheme outcome of a convergence study.
#[derive(Debug, Clone)]
pub struct StudyResult<T> {
    pub scheme: String,
    pub model: String,
    /// Step sizes, strictly decreasing.
    pub h: Vec<T>,
    /// Final-time errors `|x_N - x_ref(T)|_2`.
    pub errors: Vec<T>,
    /// Pairwise observed orders `log2(e_k / e_{k+1})`.
    pub pairwise_orders: Vec<T>,
    /// Least-squares slope over the points above the round-off floor and
    /// inside the asymptotic regime; `None` when fewer than two qualify.
    pub slope: Option<T>,
    /// Which grid points entered the fit.
    pub included: Vec<bool>,
    /// Per-point round-off floors `1e-13 * max_n |x_n|`.
    pub floors: Vec<T>,
}

impl<T: Scalar> StudyResult<T> {
    pub fn indeterminate(&self) -> bool {
        self.slope.is_none()
    }
}

/// Default study grid `h = 0.1 * 2^-k` for `k0 <= k <= k1`.
pub fn h_grid<T: Scalar>(k0: u32, k1: u32) -> Vec<T> {
    (k0..=k1)
        .map(|k| T::from_f64_lit(0.1) * T::from_f64_lit(0.5).powi(k as i32))
        .collect()
}

/// Reference state at `t_end`: matrix exponential flow for autonomous
/// runs, variation of constants for driven runs.
pub fn reference_state<T: Scalar>(
    system: &PHSystem<T>,
    u: Option<&InputSignal<T>>,
    x0: &[T],
    t0: T,
    t_end: T,
) -> Result<Vec<T>, Error> {
    match u {
        Some(u) if system.ports() > 0 => {
            let tol = T::from_f64_lit(REFERENCE_TOL) * T::one().max(norm2(x0));
            reference_nonautonomous(system, u, t0, t_end, x0, tol)
        }
        _ => exact_flow(system, t_end - t0, x0),
    }
}

/// Run one method across a step-size grid and fit the observed order.
pub fn convergence_study<T: Scalar>(
    system: &PHSystem<T>,
    u: Option<&InputSignal<T>>,
    method: &Method<T>,
    model: &str,
    x0: &[T],
    t0: T,
    t_end: T,
    grid: &[T],
) -> Result<StudyResult<T>, Error> {
    let x_ref = reference_state(system, u, x0, t0, t_end)?;
    let mut errors = Vec::with_capacity(grid.len());
    let mut floors = Vec::with_capacity(grid.len());
    for &h in grid {
        let traj = integrate(system, u, method, x0, t0, t_end, h)?;
        let x_num = traj.final_state();
        let diff: Vec<T> = x_num.iter().zip(&x_ref).map(|(&a, &b)| a - b).collect();
        errors.push(norm2(&diff));
        floors.push(T::from_f64_lit(ERROR_FLOOR) * traj.max_state_norm());
    }

    let pairwise_orders = errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect::<Vec<_>>();

    let hundred = T::from_f64_lit(100.0);
    let above_floor: Vec<bool> = errors
        .iter()
        .zip(&floors)
        .map(|(&e, &f)| e >= hundred * f && e > T::zero())
        .collect();
    let (slope, included) =
        guarded_order_fit(grid, &errors, &above_floor, T::from_f64_lit(0.5), 3);

    Ok(StudyResult {
        scheme: method.label(),
        model: model.to_string(),
        h: grid.to_vec(),
        errors,
        pairwise_orders,
        slope,
        included,
        floors,
    })
}

/// Per-step dissipation record of one run.
#[derive(Debug, Clone)]
pub struct DissipationTrace<T> {
    /// Node times, length `N + 1`.
    pub times: Vec<T>,
    /// `(H(x_{n+1}) - H(x_n)) / h`, length `N`.
    pub dh_rate: Vec<T>,
    /// Raw energy differences `H(x_{n+1}) - H(x_n)`, length `N`.
    pub dh: Vec<T>,
    /// Estimator rates `d_n / h` (driven runs).
    pub estimator_rate: Option<Vec<T>>,
    /// Exact supplied-energy rates `(1/h) integral y^T u` (driven runs).
    pub supplied_rate: Option<Vec<T>>,
    pub max_dh_rate: T,
    /// Start time of the first step with `dH > threshold`, if any.
    pub first_violation: Option<T>,
    /// Violation threshold on the raw energy difference.
    pub threshold: T,
}

/// Integrate at a single step size and extract the dissipation trace.
///
/// `threshold` defaults to `1e-12 * max(1, H(x0))`; `with_supplied` adds
/// the exact supplied-energy column (driven runs only, needs quadrature
/// along the reference).
pub fn dissipation_study<T: Scalar>(
    system: &PHSystem<T>,
    u: Option<&InputSignal<T>>,
    method: &Method<T>,
    x0: &[T],
    t0: T,
    t_end: T,
    h: T,
    threshold: Option<T>,
    with_supplied: bool,
) -> Result<DissipationTrace<T>, Error> {
    let mut traj = integrate(system, u, method, x0, t0, t_end, h)?;
    if with_supplied {
        if let Some(u) = u {
            attach_supplied(system, u, &mut traj)?;
        }
    }
    let threshold =
        threshold.unwrap_or_else(|| T::from_f64_lit(1e-12) * T::one().max(hamiltonian(x0)));
    Ok(trace_from_trajectory(&traj, threshold))
}

/// Derive the dissipation trace of an existing trajectory.
pub fn trace_from_trajectory<T: Scalar>(traj: &Trajectory<T>, threshold: T) -> DissipationTrace<T> {
    let steps = traj.step_sizes();
    let dh_rate = traj.dissipation_rates();
    let rate_of = |values: &Vec<T>| -> Vec<T> {
        values
            .iter()
            .zip(&steps)
            .map(|(&v, &dt)| v / dt)
            .collect()
    };
    let max_dh_rate = dh_rate
        .iter()
        .copied()
        .fold(T::neg_infinity(), T::max);
    let first_violation = traj
        .energy_steps
        .iter()
        .position(|&dh| dh > threshold)
        .map(|n| traj.times[n]);
    DissipationTrace {
        times: traj.times.clone(),
        dh: traj.energy_steps.clone(),
        dh_rate,
        estimator_rate: traj.estimator.as_ref().map(&rate_of),
        supplied_rate: traj.supplied.as_ref().map(&rate_of),
        max_dh_rate,
        first_violation,
        threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phmodel::oscillator;
    use crate::schemes::preset;

    fn autonomous(name: &str) -> Method<f64> {
        Method::Autonomous(preset(name).unwrap())
    }

    #[test]
    fn single_step_trajectory_has_two_nodes() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let traj = integrate(&sys, None, &autonomous("ea5-a"), &[0.0, 1.0], 0.0, 0.5, 0.5).unwrap();
        assert_eq!(traj.times.len(), 2);
        assert_eq!(traj.steps(), 1);
        assert!(!traj.partial_final_step);
        assert_eq!(traj.times[1], 0.5);
    }

    #[test]
    fn conservative_run_keeps_energy_constant() {
        let (sys, _) = oscillator(1.0, 0.0, 1000.0, None).unwrap();
        let traj =
            integrate(&sys, None, &autonomous("ea7-a"), &[0.0, 1.0], 0.0, 2.0, 0.05).unwrap();
        let h0 = traj.energies[0];
        for &hn in &traj.energies {
            assert!((hn - h0).abs() <= 1e-12);
        }
    }

    #[test]
    fn oscillator_energy_monotone_for_commutator_scheme() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let traj =
            integrate(&sys, None, &autonomous("ea5-a"), &[0.0, 1.0], 0.0, 5.0, 0.09).unwrap();
        for &dh in &traj.energy_steps {
            assert!(dh <= 1e-12, "positive energy step {dh}");
        }
    }

    #[test]
    fn partial_final_step_is_flagged_and_lands_on_t_end() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let traj =
            integrate(&sys, None, &autonomous("ea5-a"), &[0.0, 1.0], 0.0, 1.0, 0.3).unwrap();
        assert!(traj.partial_final_step);
        assert_eq!(traj.steps(), 4);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        let sizes = traj.step_sizes();
        assert!((sizes[3] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn integrate_rejects_bad_spans() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let m = autonomous("ea5-a");
        assert!(integrate(&sys, None, &m, &[0.0, 1.0], 0.0, 1.0, 0.0).is_err());
        assert!(integrate(&sys, None, &m, &[0.0, 1.0], 1.0, 1.0, 0.1).is_err());
        assert!(integrate(&sys, None, &m, &[0.0, 1.0], 2.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn driven_method_requires_input() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, Some((5.0, 3.0))).unwrap();
        let m = Method::PortBased(preset("pbs4-a").unwrap());
        assert!(integrate(&sys, None, &m, &[0.0, 1.0], 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn study_grid_and_slope_on_strang() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let grid: Vec<f64> = h_grid(3, 6);
        let study = convergence_study(
            &sys,
            None,
            &autonomous("strang-a"),
            "oscillator",
            &[0.0, 1.0],
            0.0,
            1.0,
            &grid,
        )
        .unwrap();
        let slope = study.slope.expect("determinate");
        assert!((slope - 2.0).abs() < 0.3, "strang slope {slope}");
    }

    #[test]
    fn trace_matches_recomputed_energy_differences() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let traj =
            integrate(&sys, None, &autonomous("ea5-a"), &[0.0, 1.0], 0.0, 1.0, 0.01).unwrap();
        let trace = trace_from_trajectory(&traj, 1e-12);
        for n in 0..traj.steps() {
            let recomputed = hamiltonian(&traj.states[n + 1]) - hamiltonian(&traj.states[n]);
            assert_eq!(trace.dh[n], recomputed, "bit-exact energy record");
        }
    }

    #[test]
    fn violation_detection_on_triple_jump() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let trace = dissipation_study(
            &sys,
            None,
            &autonomous("tj4"),
            &[0.0, 1.0],
            0.0,
            5.0,
            0.09,
            None,
            false,
        )
        .unwrap();
        assert!(trace.first_violation.is_some(), "triple jump must violate");
        assert!(trace.max_dh_rate > 0.0);
    }
}
