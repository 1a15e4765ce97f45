//! Operator-splitting integrators for linear port-Hamiltonian systems.
//!
//! A linear port-Hamiltonian (pH) system
//!
//! ```text
//! x'(t) = (J - R) x(t) + B u(t),    y(t) = B^T x(t),    H(x) = |x|^2 / 2
//! ```
//!
//! with `J` skew-symmetric, `R` symmetric positive semidefinite and port
//! matrix `B` satisfies the dissipation inequality `dH/dt <= y^T u`. This
//! crate provides splitting schemes that keep that inequality discretely:
//!
//! * [`schemes`] — a catalogue of symmetric splitting coefficient sets of
//!   orders 2, 4 and 6 with commutator (force-gradient) corrections that
//!   avoid negative step sizes, plus the classical triple-jump method as a
//!   non-preserving baseline.
//! * [`integrators`] — steppers for the energy-associated decomposition
//!   (autonomous systems), the port-based splitting and the splitting +
//!   Simpson-quadrature combination (driven systems), along with exact and
//!   variation-of-constants reference flows.
//! * [`diagnostics`] — trajectory integration with energy traces,
//!   convergence-order studies and dissipation studies.
//! * [`matcore`] — the small dense-matrix kernel (commutators, matrix
//!   exponential, spectral norm) everything is built on.
//!
//! Core math is generic over the scalar type through [`Scalar`]; the
//! benchmarks and the study harness use the `f64` aliases below.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

pub mod diagnostics;
mod error;
pub mod integrators;
pub mod matcore;
pub mod phmodel;
pub mod schemes;
pub mod selftest;

pub use error::Error;

/// Floating-point scalar the numerical kernels are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances quoted in operation contracts
/// (`1e-12` scale tests and the like) assume `f64`; the `f32` instantiation
/// is functional but correspondingly less accurate.
pub trait Scalar:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossless conversion from an `f64` literal (coefficient tables,
    /// quadrature nodes, tolerances).
    fn from_f64_lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal not representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Scalar type used by the concrete aliases below and by the CLI.
pub type Real = f64;

/// Dense matrix over [`Real`].
pub type Mat = matcore::Matrix<Real>;
/// Port-Hamiltonian system over [`Real`].
pub type System = phmodel::PHSystem<Real>;
/// Input signal over [`Real`].
pub type Input = phmodel::InputSignal<Real>;
/// Splitting-scheme coefficient set over [`Real`].
pub type Scheme = schemes::SchemeSpec<Real>;
/// Integration result over [`Real`].
pub type Traj = phmodel::Trajectory<Real>;
