//! Catalogue of splitting schemes.
//!
//! A scheme is a pair of step-fraction tuples `a`, `b` (consistency
//! `sum a = sum b = 1`) plus optional commutator corrections:
//!
//! * `fg` places `-c_j h^3 C` terms inside stage exponentials, where
//!   `C = [L1, [L1, L2]]` is skew-symmetric; the placement is symmetric so
//!   the scheme stays time-symmetric and each stage stays a contraction.
//! * `z` places a fifth-order correction `-h^4 Z` (a combination of the
//!   four five-letter nested commutators) inside the conservative stages.
//! * `s_term` replaces the central dissipative stage of the general
//!   sixth-order class-a methods with a short product that realizes
//!   `exp(a3 h L1 - e h^5 [L1,[L1,D]])` to higher order.
//!
//! Symmetric schemes come in two classes depending on which subproblem is
//! solved first: class a starts with the dissipative flow (`b_m = 0`),
//! class b with the conservative flow (`a_1 = 0`). Reduced coefficient
//! tuples are expanded through those symmetry rules.

use crate::integrators;
use crate::phmodel::PHSystem;
use crate::{Error, Scalar};

/// Symmetry class of the step tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeClass {
    /// `a_i = a_{m+1-i}`, `b_m = 0`, `b_i = b_{m-i}`.
    A,
    /// `a_1 = 0`, `a_i = a_{m+2-i}`, `b_i = b_{m+1-i}`.
    B,
    /// No symmetry pattern enforced (triple jump, third-order method).
    None,
}

impl SchemeClass {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeClass::A => "a",
            SchemeClass::B => "b",
            SchemeClass::None => "-",
        }
    }
}

/// Which decomposition the tuples are meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Split into dissipative (`L1 = -R`) and conservative (`L2 = J`) parts.
    EnergyAssociated,
    /// Split into port drift and full homogeneous dynamics (driven systems).
    PortBased,
}

/// Subproblem a force-gradient term is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subproblem {
    /// `L1 = -R` stages.
    Dissipative,
    /// `L2 = J` stages.
    Conservative,
}

/// One `-coeff * h^3 C` placement: stage index `j` (0-based) and subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgTerm<T> {
    pub stage: usize,
    pub subproblem: Subproblem,
    pub coeff: T,
}

/// Weights of `Z` over the four five-letter nested commutators:
/// `Z = l1l1c [L1,[L1,C]] + l1l2d [L1,[L2,D]] + l2l2c [L2,[L2,C]] + l2l2d [L2,[L2,D]]`.
///
/// The first three are skew-symmetric, the last is symmetric; a nonzero
/// `l2l2d` therefore breaks the dissipation inequality (at fifth order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZWeights<T> {
    pub l1l1c: T,
    pub l1l2d: T,
    pub l2l2c: T,
    pub l2l2d: T,
}

/// Realization of the central `S` factor of the general sixth-order
/// class-a methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SVariant {
    /// Two half stages `exp(a3 h/2 L1 -+ 2e h^4/a3 [L1,D])`; 10 stages total.
    SplitPair,
    /// Conjugation `exp(-E) , exp(a3 h L1) , exp(E)` with
    /// `E = e h^4/a3 [L1,D]`; 11 stages total, every subflow keeps the
    /// (skew-)symmetric structure of the decomposition.
    Conjugated,
}

/// Central `S` factor data; `e` multiplies `[L1,[L1,D]]` in the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct STerm<T> {
    pub e: T,
    pub variant: SVariant,
}

/// A fully expanded splitting-scheme coefficient set.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec<T> {
    pub name: String,
    pub class: SchemeClass,
    pub kind: SchemeKind,
    /// Number of stage pairs.
    pub m: usize,
    /// Step fractions of the first subproblem, length `m`.
    pub a: Vec<T>,
    /// Step fractions of the second subproblem, length `m`.
    pub b: Vec<T>,
    /// Design order on systems satisfying the scheme's hypotheses.
    pub order: u32,
    /// Total force-gradient budget `c` (the `h^3 C` coefficients sum to it).
    pub c: Option<T>,
    pub fg: Vec<FgTerm<T>>,
    pub z: Option<ZWeights<T>>,
    pub s_term: Option<STerm<T>>,
    pub dissipation_preserving: bool,
    pub positive_steps: bool,
}

impl<T: Scalar> SchemeSpec<T> {
    /// Effective stage count (zero-length stages are skipped by steppers).
    pub fn stages(&self) -> usize {
        if let Some(s) = &self.s_term {
            let s_stages = match s.variant {
                SVariant::SplitPair => 2,
                SVariant::Conjugated => 3,
            };
            return 8 + s_stages;
        }
        let zero = T::zero();
        let active = |sub: Subproblem, j: usize, step: T| {
            step != zero
                || self
                    .fg
                    .iter()
                    .any(|t| t.stage == j && t.subproblem == sub && t.coeff != zero)
        };
        let a_count = (0..self.m)
            .filter(|&j| active(Subproblem::Dissipative, j, self.a[j]))
            .count();
        let b_count = (0..self.m)
            .filter(|&j| active(Subproblem::Conservative, j, self.b[j]))
            .count();
        a_count + b_count
    }

    /// True for plain `(a, b)` splittings with nonnegative steps, the only
    /// ones the port-based stepper accepts.
    pub fn is_pbs_compatible(&self) -> bool {
        self.fg.is_empty() && self.z.is_none() && self.s_term.is_none() && self.positive_steps
    }

    /// Interleaved `(subproblem, step)` sequence with zero steps dropped.
    pub fn stage_sequence(&self) -> Vec<(Subproblem, T)> {
        let mut seq = Vec::new();
        for j in 0..self.m {
            if self.a[j] != T::zero() {
                seq.push((Subproblem::Dissipative, self.a[j]));
            }
            if self.b[j] != T::zero() {
                seq.push((Subproblem::Conservative, self.b[j]));
            }
        }
        seq
    }

    /// Sum of the `h^3 C` placement coefficients.
    pub fn fg_sum(&self) -> T {
        self.fg.iter().map(|t| t.coeff).sum()
    }
}

/// Names of the built-in presets, in catalogue order.
pub const CATALOGUE: [&str; 19] = [
    "strang-a",
    "strang-b",
    "ea5-a",
    "ea5-a-i",
    "ea5-b",
    "ea5-b-iii",
    "ea7-a",
    "ea7-b",
    "ea9-a",
    "ea9-b",
    "ea9-b-fg",
    "ea6gen-i",
    "ea6gen-ii",
    "pbs4-a",
    "pbs4-b",
    "pbs6-a",
    "pbs6-b",
    "tj4",
    "tilde3",
];

/// Mirror `free` onto a palindrome of the given length:
/// `out[i] = free[min(i, len-1-i)]`.
fn palindrome<T: Copy>(free: &[T], len: usize) -> Vec<T> {
    (0..len).map(|i| free[i.min(len - 1 - i)]).collect()
}

fn expand_class_a<T: Scalar>(a_free: &[T], b_free: &[T], m: usize) -> (Vec<T>, Vec<T>) {
    let a = palindrome(a_free, m);
    let mut b = palindrome(b_free, m - 1);
    b.push(T::zero());
    (a, b)
}

fn expand_class_b<T: Scalar>(a_free: &[T], b_free: &[T], m: usize) -> (Vec<T>, Vec<T>) {
    let mut a = vec![T::zero()];
    a.extend(palindrome(a_free, m - 1));
    let b = palindrome(b_free, m);
    (a, b)
}

/// Spread the total budget `c` over the conservative stages proportionally
/// to their step fractions (`c_j = b_j c`), the default placement.
fn fg_conservative_distributed<T: Scalar>(b: &[T], c: T) -> Vec<FgTerm<T>> {
    b.iter()
        .enumerate()
        .filter(|(_, &bj)| bj != T::zero())
        .map(|(j, &bj)| FgTerm {
            stage: j,
            subproblem: Subproblem::Conservative,
            coeff: bj * c,
        })
        .collect()
}

/// Table of 9-stage sixth-order coefficients (class a).
mod table9a {
    pub const A1: f64 = 0.0741652386084523;
    pub const A2: f64 = 0.3312015955219320;
    pub const A3: f64 = 0.1892663317392310;
    pub const B1: f64 = 0.2357603332527950;
    pub const B2: f64 = 0.2642396667472050;
    pub const E31: f64 = 3.4513723374828328e-3;
    pub const E51_TILDE: f64 = -2.8754632332335723e-5;
    pub const E53: f64 = -7.1694217000153600e-6;
    /// Residual coefficients when `[L1, D] != 0`.
    pub const E52: f64 = -4.2236874448321610e-5;
    pub const E55: f64 = -1.3885239090889685e-5;
}

/// Table of 9-stage sixth-order coefficients (class b).
mod table9b {
    pub const B1: f64 = 0.0951068381417148;
    pub const B2: f64 = 0.2665630297195250;
    pub const B3: f64 = 0.2766602642775210;
    pub const A2: f64 = 0.2216735783842150;
    pub const A3: f64 = 0.2783264216157850;
    pub const E31: f64 = 2.7595070959696467e-3;
    pub const E51_TILDE: f64 = -1.4777636968353257e-5;
    pub const E55: f64 = 1.3097476006184691e-5;
    /// Residual coefficients when `[L2, D] != 0`.
    pub const E53: f64 = 1.2345801613546542e-5;
    pub const E56: f64 = 1.5869088947135458e-5;
}

/// Look up a preset by name.
pub fn preset<T: Scalar>(name: &str) -> Result<SchemeSpec<T>, Error> {
    let lit = T::from_f64_lit;
    let half = lit(0.5);
    let frac = |num: f64, den: f64| lit(num) / lit(den);

    let spec = match name {
        "strang-a" => {
            let (a, b) = expand_class_a(&[half], &[T::one()], 2);
            plain("strang-a", SchemeClass::A, SchemeKind::EnergyAssociated, 2, a, b, 2)
        }
        "strang-b" => {
            let (a, b) = expand_class_b(&[T::one()], &[half], 2);
            plain("strang-b", SchemeClass::B, SchemeKind::EnergyAssociated, 2, a, b, 2)
        }
        "ea5-a" | "ea5-a-ii" | "ea5-a-i" => {
            let (a, b) = expand_class_a(&[frac(1.0, 6.0), frac(2.0, 3.0)], &[half], 3);
            let c = frac(1.0, 72.0);
            let fg = if name == "ea5-a-i" {
                // whole budget in the central dissipative exponential
                vec![FgTerm {
                    stage: 1,
                    subproblem: Subproblem::Dissipative,
                    coeff: c,
                }]
            } else {
                fg_conservative_distributed(&b, c)
            };
            with_fg(name, SchemeClass::A, 3, a, b, 4, c, fg)
        }
        "ea5-b" | "ea5-b-iii" => {
            let sqrt3 = lit(3.0).sqrt();
            let b1 = (lit(3.0) - sqrt3) / lit(6.0);
            let b2 = sqrt3 / lit(3.0);
            let (a, b) = expand_class_b(&[half], &[b1, b2], 3);
            let c = (lit(2.0) - sqrt3) / lit(24.0);
            let fg = if name == "ea5-b-iii" {
                // whole budget in the central conservative exponential
                vec![FgTerm {
                    stage: 1,
                    subproblem: Subproblem::Conservative,
                    coeff: c,
                }]
            } else {
                fg_conservative_distributed(&b, c)
            };
            with_fg(name, SchemeClass::B, 3, a, b, 4, c, fg)
        }
        "ea7-a" => {
            let (a, b) = expand_class_a(
                &[frac(1.0, 8.0), frac(3.0, 8.0)],
                &[frac(1.0, 3.0), frac(1.0, 3.0)],
                4,
            );
            let c = frac(1.0, 192.0);
            let fg = fg_conservative_distributed(&b, c);
            with_fg(name, SchemeClass::A, 4, a, b, 4, c, fg)
        }
        "ea7-b" => {
            let (a, b) = expand_class_b(
                &[frac(3.0, 8.0), frac(1.0, 4.0)],
                &[frac(1.0, 6.0), frac(1.0, 3.0)],
                4,
            );
            let c = frac(1.0, 192.0);
            let fg = fg_conservative_distributed(&b, c);
            with_fg(name, SchemeClass::B, 4, a, b, 4, c, fg)
        }
        "ea9-a" => {
            use table9a::*;
            let (a, b) = expand_class_a(&[lit(A1), lit(A2), lit(A3)], &[lit(B1), lit(B2)], 5);
            let c = lit(E31);
            let fg = fg_conservative_distributed(&b, c);
            let mut spec = with_fg(name, SchemeClass::A, 5, a, b, 6, c, fg);
            spec.z = Some(ZWeights {
                l1l1c: lit(E51_TILDE),
                l1l2d: lit(E53),
                l2l2c: T::zero(),
                l2l2d: T::zero(),
            });
            spec
        }
        "ea9-b" | "ea9-b-fg" => {
            use table9b::*;
            let (a, b) = expand_class_b(
                &[lit(A2), lit(A3)],
                &[lit(B1), lit(B2), lit(B3)],
                5,
            );
            let c = lit(E31);
            let fg = fg_conservative_distributed(&b, c);
            let modified = name == "ea9-b-fg";
            let order = if modified { 6 } else { 4 };
            let mut spec = with_fg(name, SchemeClass::B, 5, a, b, order, c, fg);
            spec.z = Some(ZWeights {
                l1l1c: lit(E51_TILDE),
                l1l2d: if modified { lit(E53) } else { T::zero() },
                l2l2c: lit(E55),
                l2l2d: if modified { lit(E56) } else { T::zero() },
            });
            // the added symmetric commutator breaks the inequality at O(h^5)
            spec.dissipation_preserving = !modified;
            spec
        }
        "ea6gen-i" | "ea6gen-ii" => {
            use table9a::*;
            let (a, b) = expand_class_a(&[lit(A1), lit(A2), lit(A3)], &[lit(B1), lit(B2)], 5);
            let c = lit(E31);
            let fg = fg_conservative_distributed(&b, c);
            let mut spec = with_fg(name, SchemeClass::A, 5, a, b, 6, c, fg);
            spec.z = Some(ZWeights {
                l1l1c: lit(E51_TILDE),
                l1l2d: lit(E53),
                l2l2c: lit(E55),
                l2l2d: T::zero(),
            });
            spec.s_term = Some(STerm {
                e: lit(E52),
                variant: if name == "ea6gen-i" {
                    SVariant::SplitPair
                } else {
                    SVariant::Conjugated
                },
            });
            spec
        }
        "pbs4-a" => {
            let (a, b) = expand_class_a(&[frac(1.0, 6.0), frac(2.0, 3.0)], &[half], 3);
            plain(name, SchemeClass::A, SchemeKind::PortBased, 3, a, b, 4)
        }
        "pbs4-b" => {
            let sqrt3 = lit(3.0).sqrt();
            let b1 = (lit(3.0) - sqrt3) / lit(6.0);
            let b2 = sqrt3 / lit(3.0);
            let (a, b) = expand_class_b(&[half], &[b1, b2], 3);
            plain(name, SchemeClass::B, SchemeKind::PortBased, 3, a, b, 4)
        }
        "pbs6-a" => {
            let sqrt5 = lit(5.0).sqrt();
            let b1 = (lit(5.0) - sqrt5) / lit(10.0);
            let b2 = sqrt5 / lit(5.0);
            let (a, b) = expand_class_a(&[frac(1.0, 12.0), frac(5.0, 12.0)], &[b1, b2], 4);
            plain(name, SchemeClass::A, SchemeKind::PortBased, 4, a, b, 6)
        }
        "pbs6-b" => {
            let sqrt15 = lit(15.0).sqrt();
            let b1 = (lit(5.0) - sqrt15) / lit(10.0);
            let b2 = sqrt15 / lit(10.0);
            let (a, b) = expand_class_b(&[frac(5.0, 18.0), frac(4.0, 9.0)], &[b1, b2], 4);
            plain(name, SchemeClass::B, SchemeKind::PortBased, 4, a, b, 6)
        }
        "tj4" => {
            // triple jump: Strang(g1 h) . Strang(g2 h) . Strang(g1 h)
            let cbrt2 = lit(2.0).cbrt();
            let g1 = T::one() / (lit(2.0) - cbrt2);
            let g2 = -cbrt2 / (lit(2.0) - cbrt2);
            let mid = (g1 + g2) * half;
            let mut spec = plain(
                name,
                SchemeClass::None,
                SchemeKind::EnergyAssociated,
                4,
                vec![g1 * half, mid, mid, g1 * half],
                vec![g1, g2, g1, T::zero()],
                4,
            );
            spec.positive_steps = false;
            spec.dissipation_preserving = false;
            spec
        }
        "tilde3" => {
            // non-symmetric third-order 4-stage method, starting with a
            // conservative flow; the bare tuple's h^3 residual is C/48,
            // so the budget 1/48 sits on the dissipative stages (fractions
            // 3/4 and 1/4) and cancels it without touching the symmetric
            // direction
            let a = vec![T::zero(), frac(3.0, 4.0), frac(1.0, 4.0)];
            let b = vec![frac(1.0, 3.0), frac(2.0, 3.0), T::zero()];
            let c = frac(1.0, 48.0);
            let fg = a
                .iter()
                .enumerate()
                .filter(|(_, &aj)| aj != T::zero())
                .map(|(j, &aj)| FgTerm {
                    stage: j,
                    subproblem: Subproblem::Dissipative,
                    coeff: aj * c,
                })
                .collect();
            let mut spec = with_fg(name, SchemeClass::None, 3, a, b, 3, c, fg);
            spec.kind = SchemeKind::EnergyAssociated;
            spec
        }
        other => return Err(Error::UnknownScheme(other.to_string())),
    };
    Ok(spec)
}

fn plain<T: Scalar>(
    name: &str,
    class: SchemeClass,
    kind: SchemeKind,
    m: usize,
    a: Vec<T>,
    b: Vec<T>,
    order: u32,
) -> SchemeSpec<T> {
    SchemeSpec {
        name: name.to_string(),
        class,
        kind,
        m,
        a,
        b,
        order,
        c: None,
        fg: Vec::new(),
        z: None,
        s_term: None,
        dissipation_preserving: true,
        positive_steps: true,
    }
}

#[allow(clippy::too_many_arguments)]
fn with_fg<T: Scalar>(
    name: &str,
    class: SchemeClass,
    m: usize,
    a: Vec<T>,
    b: Vec<T>,
    order: u32,
    c: T,
    fg: Vec<FgTerm<T>>,
) -> SchemeSpec<T> {
    let mut spec = plain(name, class, SchemeKind::EnergyAssociated, m, a, b, order);
    spec.c = Some(c);
    spec.fg = fg;
    spec
}

/// Structured result of [`check_scheme`].
#[derive(Debug, Clone)]
pub struct SchemeReport {
    pub violations: Vec<String>,
}

impl SchemeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify consistency sums, the class symmetry pattern, the positivity
/// flag and the force-gradient budget of a coefficient set.
pub fn check_scheme<T: Scalar>(spec: &SchemeSpec<T>) -> SchemeReport {
    let tol = T::from_f64_lit(1e-12).max(T::epsilon() * T::from_f64_lit(100.0));
    let mut violations = Vec::new();

    if spec.a.len() != spec.m || spec.b.len() != spec.m {
        violations.push(format!(
            "tuple lengths {} / {} do not match m = {}",
            spec.a.len(),
            spec.b.len(),
            spec.m
        ));
        return SchemeReport { violations };
    }

    let sum_a: T = spec.a.iter().copied().sum();
    let sum_b: T = spec.b.iter().copied().sum();
    if (sum_a - T::one()).abs() > tol {
        violations.push(format!("sum of a = {sum_a} differs from 1"));
    }
    if (sum_b - T::one()).abs() > tol {
        violations.push(format!("sum of b = {sum_b} differs from 1"));
    }

    let m = spec.m;
    let s = m.div_ceil(2);
    let close = |x: T, y: T| (x - y).abs() <= tol;
    match spec.class {
        SchemeClass::A => {
            for i in 0..s {
                if !close(spec.a[i], spec.a[m - 1 - i]) {
                    violations.push(format!("class a: a[{i}] != a[{}]", m - 1 - i));
                }
            }
            if spec.b[m - 1] != T::zero() {
                violations.push("class a: b_m must be zero".into());
            }
            for i in 0..s.saturating_sub(1) {
                if !close(spec.b[i], spec.b[m - 2 - i]) {
                    violations.push(format!("class a: b[{i}] != b[{}]", m - 2 - i));
                }
            }
        }
        SchemeClass::B => {
            if spec.a[0] != T::zero() {
                violations.push("class b: a_1 must be zero".into());
            }
            for i in 1..s {
                if !close(spec.a[i], spec.a[m - i]) {
                    violations.push(format!("class b: a[{i}] != a[{}]", m - i));
                }
            }
            for i in 0..s {
                if !close(spec.b[i], spec.b[m - 1 - i]) {
                    violations.push(format!("class b: b[{i}] != b[{}]", m - 1 - i));
                }
            }
        }
        SchemeClass::None => {}
    }

    let all_nonneg =
        spec.a.iter().all(|&x| x >= T::zero()) && spec.b.iter().all(|&x| x >= T::zero());
    if all_nonneg != spec.positive_steps {
        violations.push(format!(
            "positivity flag {} contradicts the tuples",
            spec.positive_steps
        ));
    }
    if spec.dissipation_preserving && !spec.positive_steps {
        violations.push("dissipation-preserving scheme must have nonnegative steps".into());
    }

    if let Some(c) = spec.c {
        let sum = spec.fg_sum();
        if (sum - c).abs() > tol {
            violations.push(format!(
                "force-gradient coefficients sum to {sum}, expected c = {c}"
            ));
        }
    } else if !spec.fg.is_empty() {
        violations.push("force-gradient terms present without a declared c".into());
    }

    SchemeReport { violations }
}

/// Closed-form first and third order-condition residuals of the 5-stage
/// (`m = 3`) families, returned as `(e11, e12, e32, e31)`.
pub fn order_residuals_5stage<T: Scalar>(spec: &SchemeSpec<T>) -> Result<(T, T, T, T), Error> {
    if spec.m != 3 {
        return Err(Error::WrongSchemeFamily {
            name: spec.name.clone(),
            reason: format!("5-stage residuals need m = 3, got m = {}", spec.m),
        });
    }
    let two = T::from_f64_lit(2.0);
    let four = T::from_f64_lit(4.0);
    let sixth = T::from_f64_lit(1.0 / 6.0);
    match spec.class {
        SchemeClass::A => {
            let (a1, a2, b1) = (spec.a[0], spec.a[1], spec.b[0]);
            let e11 = two * a1 + a2;
            let e12 = two * b1;
            let e32 = sixth * b1 * b1 * (a2 - four * a1);
            let e31 = sixth * b1 * (a2 * a2 - two * a1 * a2 - two * a1 * a1);
            Ok((e11, e12, e32, e31))
        }
        SchemeClass::B => {
            let (a2, b1, b2) = (spec.a[1], spec.b[0], spec.b[1]);
            let e11 = two * a2;
            let e12 = two * b1 + b2;
            let e32 = -sixth * a2 * (b2 * b2 - two * b1 * b2 - two * b1 * b1);
            let e31 = -sixth * a2 * a2 * (b2 - four * b1);
            Ok((e11, e12, e32, e31))
        }
        SchemeClass::None => Err(Error::WrongSchemeFamily {
            name: spec.name.clone(),
            reason: "5-stage residual formulas exist for class a and b only".into(),
        }),
    }
}

/// Result of the one-step defect order fit.
#[derive(Debug, Clone, Copy)]
pub struct DefectOrder<T> {
    /// Least-squares slope of `log defect` vs `log h` (the local order).
    pub local_slope: T,
    /// Rounded global order (local slope minus one).
    pub order: i64,
    /// Number of grid points that entered the fit.
    pub points_used: usize,
}

/// Fit the one-step defect `|Phi_h - exp(h (J - R))|_2` on the grid
/// `h = 0.1 * 2^-k`, `k = 0..=6`, and report the implied global order.
///
/// Points at the round-off floor and points outside the asymptotic regime
/// (defect above a tenth of the flow norm) are excluded from the fit.
pub fn numeric_defect_order<T: Scalar>(
    spec: &SchemeSpec<T>,
    system: &PHSystem<T>,
) -> Result<DefectOrder<T>, Error> {
    let mut hs = Vec::new();
    let mut defects = Vec::new();
    let a_mat = system.a_matrix();
    let all_below = T::from_f64_lit(1e-14);
    let mut any_above_tiny = false;

    for k in 0..=6 {
        let h = T::from_f64_lit(0.1) * T::from_f64_lit(0.5).powi(k);
        let flow = a_mat.scaled(h).expm()?;
        let step = integrators::AutonomousStepper::new(system, spec, h)?.step_matrix();
        let defect = step.sub(&flow).spectral_norm();
        let scale = T::one().max(flow.spectral_norm());
        if defect > all_below {
            any_above_tiny = true;
        }
        let floor = T::from_f64_lit(1e-12) * scale;
        let saturation = T::from_f64_lit(0.1) * scale;
        if defect >= floor && defect <= saturation {
            hs.push(h);
            defects.push(defect);
        }
    }

    if !any_above_tiny {
        return Err(Error::OrderIndeterminate(
            "defect below 1e-14 at every grid point".into(),
        ));
    }
    if hs.len() < 2 {
        return Err(Error::OrderIndeterminate(format!(
            "only {} grid points between floor and saturation",
            hs.len()
        )));
    }

    let all = vec![true; hs.len()];
    let (slope, mask) = guarded_order_fit(&hs, &defects, &all, T::from_f64_lit(0.5), 3);
    let local_slope = slope.ok_or_else(|| {
        Error::OrderIndeterminate("too few asymptotic grid points".into())
    })?;
    let global = local_slope - T::one();
    let order = global
        .round()
        .to_i64()
        .ok_or_else(|| Error::OrderIndeterminate("slope not representable".into()))?;
    Ok(DefectOrder {
        local_slope,
        order,
        points_used: mask.iter().filter(|&&m| m).count(),
    })
}

/// Least-squares order fit with an asymptotic-regime guard.
///
/// Points outside `initially_included` never enter the fit. Leading
/// (coarsest) points whose pairwise observed order deviates from the
/// finest-pair consensus by more than `consensus_tol` are dropped: the
/// observed order is only meaningful in the asymptotic regime, and at
/// coarse steps (`h |A|` of order one) the error bends away from the
/// design slope. Trimming never goes below `min_points`. Returns the
/// slope when at least two points remain, plus the final inclusion mask.
pub fn guarded_order_fit<T: Scalar>(
    h: &[T],
    y: &[T],
    initially_included: &[bool],
    consensus_tol: T,
    min_points: usize,
) -> (Option<T>, Vec<bool>) {
    let mut mask = initially_included.to_vec();
    let mut idx: Vec<usize> = (0..h.len()).filter(|&i| mask[i]).collect();
    let pairwise = |i: usize, j: usize| (y[i] / y[j]).ln() / (h[i] / h[j]).ln();
    if idx.len() >= 3 {
        let consensus = pairwise(idx[idx.len() - 2], idx[idx.len() - 1]);
        while idx.len() > min_points.max(2) {
            let leading = pairwise(idx[0], idx[1]);
            if (leading - consensus).abs() > consensus_tol {
                mask[idx[0]] = false;
                idx.remove(0);
            } else {
                break;
            }
        }
    }
    if idx.len() < 2 {
        return (None, mask);
    }
    let fit_h: Vec<T> = idx.iter().map(|&i| h[i]).collect();
    let fit_y: Vec<T> = idx.iter().map(|&i| y[i]).collect();
    (Some(fit_slope(&fit_h, &fit_y)), mask)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_slope<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let n = T::from_f64_lit(x.len() as f64);
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (xi, yi) in lx.iter().zip(&ly) {
        num += (*xi - mx) * (*yi - my);
        den += (*xi - mx) * (*xi - mx);
    }
    num / den
}
