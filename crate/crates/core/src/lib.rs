// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Desk-scale simulator for a confined, second-quantized Schrödinger field.
//!
//! The crate is organized bottom-up:
//!
//! * [`fock`]: box modes, truncated Fock space, ladder operators, and the
//!   dense kernel (Hermitian eigendecomposition, `exp(-K)` and its Fréchet
//!   derivative).
//! * [`model`]: two-body interaction tensor, Hamiltonian, coarse-grained cell
//!   observables (energy, mass, momentum, currents) and the phase-space POVM
//!   density.
//! * [`gibbs`]: generalized Gibbs states, entropy, Kubo–Mori covariances and
//!   the maximum-entropy inverse problem.
//! * [`scattering`]: two-particle space, Pauli-corrected T-matrix and the
//!   regularized ingredients of the subdynamics generator.
//! * [`generator`]: the irreversible generator acting on bilinears and its
//!   conservation/positivity audits.
//! * [`dynamics`]: exact unitary oracle, correlation functions, the
//!   history-operator identity, and closed evolution equations.
//!
//! All numerics are generic over [`Real`]; the `*64` aliases below fix `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod generator;
pub mod gibbs;
pub mod model;
pub mod scalar;
pub mod scattering;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::{Operator, Real};

pub type ModeBasis64 = fock::ModeBasis<f64>;
pub type FockSpace64 = fock::FockSpace<f64>;
pub type Operator64 = Operator<f64>;
