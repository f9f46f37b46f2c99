// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-particle scattering with Pauli corrections and the regularized
//! ingredients of the irreversible generator: effective interaction,
//! dissipative operator `Γ`, and collision operators `R_{kλ}`.

pub mod ingredients;
pub mod pair_space;
pub mod tmatrix;

pub use ingredients::{
    build_scattering, diagnostic_spectra, gamma_op, mean_occupations, pair_kernels, r_operators, v_eff,
    v_eff_born_defect, v_eff_sensitivity, PairKernels, PauliMode, Regularization, ScatteringOutputs,
    GAMMA_PSD_TOLERANCE,
};
pub use pair_space::{build_two_particle_space, spectrum, TwoParticleSpace};
pub use tmatrix::{t_matrix, t_matrix_lippmann_schwinger, TMatrix, SPECTRAL_MARGIN};
