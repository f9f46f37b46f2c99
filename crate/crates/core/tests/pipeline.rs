// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scattering → generator → closed kinetic equations, end to end.

mod common;

use proptest::prelude::*;
use qsf::dynamics::{evolve_kinetic, IntegratorOptions, Quantity};
use qsf::fock::linalg::max_abs;
use qsf::fock::Statistics;
use qsf::generator::{build_generator, gain_loss_identity_defect, GeneratorOptions};
use qsf::gibbs::{gibbs_state, ClassicalState};
use qsf::scattering::{build_scattering, mean_occupations, PauliMode, Regularization};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn generator_conserves_mass_for_any_coupling(lambda in 0.05f64..1.5, fermi in any::<bool>()) {
        let st = if fermi { Statistics::Fermi } else { Statistics::Bose };
        let s = common::space(3, 2, st);
        let t = common::tensor(&s, lambda);
        let out = build_scattering(&s, &t, &[0.2, 0.1, 0.05], Regularization::default_for(&s.basis), PauliMode::MeanField).unwrap();
        let gen = build_generator(&s, &out, GeneratorOptions::default()).unwrap();
        prop_assert!(max_abs(&gen.apply_to_mass()) <= 1e-10);
        prop_assert!(gain_loss_identity_defect(&gen) <= 1e-12);
    }
}

#[test]
fn kinetic_run_from_scratch() {
    let s = common::space(3, 3, Statistics::Bose);
    let t = common::tensor(&s, 0.5);
    let z0 = ClassicalState::new(vec![0.8, 1.2], vec![-0.5, -0.5], vec![0.0, 0.0]).unwrap();
    let bare = common::observables_with(&s, 0.5, &t, 2);
    let occ = mean_occupations(&s, &gibbs_state(&z0, &bare).unwrap().rho);
    let out = build_scattering(
        &s,
        &t,
        &occ,
        Regularization::default_for(&s.basis),
        PauliMode::MeanField,
    )
    .unwrap();
    let gen = build_generator(&s, &out, GeneratorOptions::default()).unwrap();
    let obs = common::observables_with(&s, 0.5, &out.kernels.as_ref().unwrap().v_eff, 2);
    assert!(max_abs(&(&obs.hamiltonian - &gen.h_eff)) < 1e-10);
    let opts = IntegratorOptions {
        step: 0.05,
        steps: 20,
        ..Default::default()
    };
    let tr = evolve_kinetic(&obs, &gen, &z0, &opts).unwrap();
    assert!(tr.failure.is_none());
    let m0 = tr.total(0, Quantity::Mass);
    assert!((0..tr.len()).all(|i| (tr.total(i, Quantity::Mass) - m0).abs() <= 1e-9));
    // Heat flows from the hot cell (smaller β) to the cold one at first.
    let e_hot = tr.cell_series(0, Quantity::Energy);
    assert!(e_hot[1] < e_hot[0]);
}
