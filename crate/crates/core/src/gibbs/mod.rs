// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Generalized Gibbs states over cell observables, entropy, Kubo–Mori
//! covariances, and the inverse problem from expectations to multipliers.

pub mod inverse;
pub mod maxent;
pub mod state;

pub use inverse::{
    complete_rest_frame, invert_expectations, invert_kinetic, solve_multipliers, Inversion, SolveReport, SolverOptions,
};
pub use maxent::{check_max_entropy, MaxEntropyReport};
pub use state::{gibbs_exponent, gibbs_state, von_neumann_entropy, CellTargets, ClassicalState, GibbsState};
