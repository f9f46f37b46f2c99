// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for unit tests.

use std::f64::consts::PI;

use crate::fock::{FockSpace, ModeBasis, Statistics};
use crate::model::{
    build_cell_observables, interaction_tensor, CellObservables, InteractionTensor, Potential, PotentialKind,
};

/// Box of length π with m = ħ = 1, so `E_f = (f+1)²/2`.
pub fn space(m: usize, n: usize, stats: Statistics) -> FockSpace<f64> {
    FockSpace::new(ModeBasis::new(m, PI, 1.0, 1.0, stats).unwrap(), n).unwrap()
}

pub fn gaussian(lambda: f64) -> Potential<f64> {
    Potential::new(PotentialKind::Gaussian, lambda, PI / 10.0).unwrap()
}

pub fn tensor(space: &FockSpace<f64>, lambda: f64) -> InteractionTensor<f64> {
    if lambda == 0.0 {
        InteractionTensor::zeros(space.modes())
    } else {
        interaction_tensor(&space.basis, &gaussian(lambda), 32).unwrap().tensor
    }
}

pub fn observables(m: usize, n: usize, stats: Statistics, lambda: f64, cells: usize) -> CellObservables<f64> {
    let space = space(m, n, stats);
    let t = tensor(&space, lambda);
    build_cell_observables(&space, &gaussian(lambda), &t, cells, 24, &vec![0.0; cells]).unwrap()
}
