//! CSV and JSON writers. Floats are rendered with Rust's shortest
//! round-trip formatting, so files parse back bit-exactly.

use phsplit::diagnostics::{DissipationTrace, StudyResult};
use phsplit::{Real, Traj};
use serde::Serialize;

fn fmt(v: Real) -> String {
    if v == 0.0 {
        // normalizes negative zero so identical configs give identical bytes
        "0".into()
    } else if (1e-4..1e16).contains(&v.abs()) {
        format!("{v}")
    } else {
        // keep extreme magnitudes in scientific notation; both forms are
        // shortest round-trip
        format!("{v:e}")
    }
}

fn fmt_opt(v: Option<Real>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub struct RunMeta<'a> {
    pub model: &'a str,
    pub scheme: &'a str,
    pub t0: Real,
    pub t_end: Real,
    pub h: Real,
}

/// Trajectory rows: `t, x_1..x_n, H, dH_per_h`, plus `d_est_per_h` and
/// `supplied_rate` on driven runs; the step-rate columns are blank on the
/// first row.
pub fn run_csv(traj: &Traj) -> String {
    let n = traj.states[0].len();
    let driven = traj.estimator.is_some();
    let mut out = String::new();
    out.push('t');
    for i in 1..=n {
        out.push_str(&format!(",x_{i}"));
    }
    out.push_str(",H,dH_per_h");
    if driven {
        out.push_str(",d_est_per_h");
        if traj.supplied.is_some() {
            out.push_str(",supplied_rate");
        }
    }
    out.push('\n');

    let steps = traj.step_sizes();
    for (row, t) in traj.times.iter().enumerate() {
        out.push_str(&fmt(*t));
        for v in &traj.states[row] {
            out.push(',');
            out.push_str(&fmt(*v));
        }
        out.push(',');
        out.push_str(&fmt(traj.energies[row]));
        let rate = |values: &Vec<Real>| {
            (row > 0).then(|| values[row - 1] / steps[row - 1])
        };
        out.push(',');
        out.push_str(&fmt_opt(rate(&traj.energy_steps)));
        if driven {
            out.push(',');
            out.push_str(&fmt_opt(traj.estimator.as_ref().and_then(rate)));
            if let Some(supplied) = &traj.supplied {
                out.push(',');
                out.push_str(&fmt_opt(rate(supplied)));
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct RunRow {
    t: Real,
    x: Vec<Real>,
    #[serde(rename = "H")]
    energy: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    dh_per_h: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_est_per_h: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    supplied_rate: Option<Real>,
}

#[derive(Serialize)]
struct RunDoc<'a> {
    model: &'a str,
    scheme: &'a str,
    t0: Real,
    t_end: Real,
    h: Real,
    partial_final_step: bool,
    rows: Vec<RunRow>,
}

pub fn run_json(traj: &Traj, meta: &RunMeta) -> String {
    let steps = traj.step_sizes();
    let rate = |values: &Vec<Real>, row: usize| (row > 0).then(|| values[row - 1] / steps[row - 1]);
    let rows = traj
        .times
        .iter()
        .enumerate()
        .map(|(row, &t)| RunRow {
            t,
            x: traj.states[row].clone(),
            energy: traj.energies[row],
            dh_per_h: rate(&traj.energy_steps, row),
            d_est_per_h: traj.estimator.as_ref().and_then(|v| rate(v, row)),
            supplied_rate: traj.supplied.as_ref().and_then(|v| rate(v, row)),
        })
        .collect();
    let doc = RunDoc {
        model: meta.model,
        scheme: meta.scheme,
        t0: meta.t0,
        t_end: meta.t_end,
        h: meta.h,
        partial_final_step: traj.partial_final_step,
        rows,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

/// Study rows `scheme,h,error,pairwise_order` followed by a footer section
/// `scheme,fitted_slope`.
pub fn converge_csv(studies: &[StudyResult<Real>]) -> String {
    let mut out = String::from("scheme,h,error,pairwise_order\n");
    for study in studies {
        for (k, (&h, &e)) in study.h.iter().zip(&study.errors).enumerate() {
            let pairwise = if k > 0 {
                fmt(study.pairwise_orders[k - 1])
            } else {
                String::new()
            };
            out.push_str(&format!("{},{},{},{}\n", study.scheme, fmt(h), fmt(e), pairwise));
        }
    }
    out.push_str("scheme,fitted_slope\n");
    for study in studies {
        out.push_str(&format!("{},{}\n", study.scheme, fmt_opt(study.slope)));
    }
    out
}

#[derive(Serialize)]
struct StudyDoc<'a> {
    scheme: &'a str,
    model: &'a str,
    h: &'a [Real],
    errors: &'a [Real],
    pairwise_orders: &'a [Real],
    fitted_slope: Option<Real>,
    included_in_fit: &'a [bool],
}

pub fn converge_json(studies: &[StudyResult<Real>]) -> String {
    let docs: Vec<StudyDoc> = studies
        .iter()
        .map(|s| StudyDoc {
            scheme: &s.scheme,
            model: &s.model,
            h: &s.h,
            errors: &s.errors,
            pairwise_orders: &s.pairwise_orders,
            fitted_slope: s.slope,
            included_in_fit: &s.included,
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&docs).expect("serializable");
    text.push('\n');
    text
}

/// Trajectory CSV plus the trace summary as trailing comment lines.
pub fn dissipation_csv(traj: &Traj, trace: &DissipationTrace<Real>) -> String {
    let mut out = run_csv(traj);
    out.push_str(&format!("# max_dH_per_h,{}\n", fmt(trace.max_dh_rate)));
    out.push_str(&format!(
        "# first_violation,{}\n",
        trace
            .first_violation
            .map(fmt)
            .unwrap_or_else(|| "none".into())
    ));
    out
}

#[derive(Serialize)]
struct DissipationDoc<'a> {
    model: &'a str,
    scheme: &'a str,
    h: Real,
    times: &'a [Real],
    dh_per_h: &'a [Real],
    #[serde(skip_serializing_if = "Option::is_none")]
    d_est_per_h: Option<&'a [Real]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    supplied_rate: Option<&'a [Real]>,
    max_dh_per_h: Real,
    first_violation: Option<Real>,
    violation_threshold: Real,
}

pub fn dissipation_json(trace: &DissipationTrace<Real>, meta: &RunMeta) -> String {
    let doc = DissipationDoc {
        model: meta.model,
        scheme: meta.scheme,
        h: meta.h,
        times: &trace.times,
        dh_per_h: &trace.dh_rate,
        d_est_per_h: trace.estimator_rate.as_deref(),
        supplied_rate: trace.supplied_rate.as_deref(),
        max_dh_per_h: trace.max_dh_rate,
        first_violation: trace.first_violation,
        violation_threshold: trace.threshold,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use phsplit::diagnostics::{integrate, Method};
    use phsplit::phmodel::oscillator;
    use phsplit::schemes::preset;

    #[test]
    fn run_csv_row_count_and_roundtrip() {
        let (sys, _) = oscillator(1.0, 1.0, 1000.0, None).unwrap();
        let m = Method::Autonomous(preset::<Real>("ea5-a").unwrap());
        let traj = integrate(&sys, None, &m, &[0.0, 1.0], 0.0, 1.0, 0.1).unwrap();
        let csv = run_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 12); // header + 11 nodes
        assert_eq!(lines[0], "t,x_1,x_2,H,dH_per_h");
        // H column reproduces the states bit-exactly through parsing
        for (row, line) in lines.iter().skip(1).enumerate() {
            let cells: Vec<f64> = line
                .split(',')
                .take(4)
                .map(|c| c.parse().unwrap())
                .collect();
            let recomputed = 0.5 * (cells[1] * cells[1] + cells[2] * cells[2]);
            assert!(
                (recomputed - cells[3]).abs() <= 1e-12,
                "row {row}: H mismatch"
            );
        }
    }
}
