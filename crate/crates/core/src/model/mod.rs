// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Interaction matrix elements, the Hamiltonian, coarse-grained cell
//! observables and the phase-space density.

pub mod cells;
pub mod hamiltonian;
pub mod phase_space;
pub mod potential;
pub mod quadrature;
pub mod tensor;

pub use cells::{build_cell_observables, CellCoefficients, CellObservables, OneBody};
pub use hamiltonian::{build_hamiltonian, free_hamiltonian, one_body_operator, two_body_operator};
pub use phase_space::{phase_space_density, PhaseSpaceGrid, PhaseSpaceSpec, PovmNormalization};
pub use potential::{Potential, PotentialKind};
pub use tensor::{interaction_tensor, InteractionTensor, TensorBuild};
