//! Lewis–Riesenfeld invariant analysis of the (2+1)-dimensional Dirac equation
//! in a time-dependent noncommutative phase space.
//!
//! The crate is organised bottom-up:
//!
//! - [`mat2`]: complex 2×2 matrices, the Pauli/Dirac basis and its algebra.
//! - [`phasepoly`]: degree-≤2 Weyl-ordered polynomials in `(x, y, px, py)`
//!   with [`Mat2`] coefficients and their exact commutator.
//! - [`ncmodel`]: parameters, the time-dependent Bopp shift, the deformed
//!   algebra check and the commutative / noncommutative Hamiltonians.
//! - [`invariant`]: the linear invariant ansatz, the invariance residual, the
//!   fifteen bracket constraints and the constant-coefficient nullspace.
//! - [`lrsolve`]: spinor envelope and phase functions, their ODE system, the
//!   LR phase and the trial solution.
//! - [`sparse`]: compressed-row complex matrices used by the Fock representation.
//! - [`fockevolve`]: truncated two-mode Fock representation, unitary time
//!   evolution and drift / uncertainty measurements.

pub mod error;
pub mod fockevolve;
pub mod invariant;
pub mod lrsolve;
pub mod mat2;
pub mod ncmodel;
pub mod phasepoly;
pub mod sparse;

pub use error::{Error, Result};
pub use mat2::{Mat2, PauliCoeffs};
pub use ncmodel::{NCParams, UnitMode};
pub use phasepoly::{Coord, PhasePoly, SymplecticForm, TimePhasePoly, TimeProfile};

pub use num_complex::Complex64 as C64;
