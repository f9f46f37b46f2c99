// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use proptest::prelude::*;
use qsf::fock::linalg::{commutator, max_abs};
use qsf::fock::{FockSpace, Statistics};
use qsf::model::{build_hamiltonian, InteractionTensor};
use qsf::scalar::{ci, Operator};

fn stats() -> impl Strategy<Value = Statistics> {
    prop_oneof![Just(Statistics::Bose), Just(Statistics::Fermi)]
}

/// Projector onto sectors strictly below the cutoff, where one more
/// creation operator never leaves the space.
fn below_cutoff(s: &FockSpace<f64>) -> Operator<f64> {
    let d = s.dim();
    let mut p = Operator::zeros(d, d);
    for n in 0..s.max_total {
        p += s.sector_projector(n);
    }
    p
}

fn random_tensor(m: usize, seed: &[f64]) -> InteractionTensor<f64> {
    let mut k = 0;
    let mut t = InteractionTensor::from_fn(m, |_, _, _, _| {
        k += 1;
        ci(seed[k % seed.len()], 0.3 * seed[(3 * k + 1) % seed.len()])
    });
    t.symmetrize();
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn canonical_relations_hold_below_cutoff(m in 1usize..=4, n in 1usize..=3, st in stats()) {
        let n = if st == Statistics::Fermi { n.min(m) } else { n };
        let s = common::space(m, n, st);
        let p = below_cutoff(&s);
        let sign = match st { Statistics::Bose => -1.0, Statistics::Fermi => 1.0 };
        for f in 0..m {
            for g in 0..m {
                let a = s.annihilator(f);
                let ad = s.creator(g);
                let rel = &a * &ad + &ad * &a * ci(sign, 0.0);
                let want = if f == g { Operator::identity(s.dim(), s.dim()) } else { Operator::zeros(s.dim(), s.dim()) };
                prop_assert!(max_abs(&(&p * (rel - want) * &p)) < 1e-12);
                let aa = &a * s.annihilator(g) + s.annihilator(g) * &a * ci(sign, 0.0);
                prop_assert!(max_abs(&aa) < 1e-12);
            }
            prop_assert!(max_abs(&(s.creator(f) - s.annihilator(f).adjoint())) == 0.0);
            let nf = s.number(f);
            for i in 0..s.dim() {
                for j in 0..s.dim() {
                    if i != j {
                        prop_assert_eq!(nf[(i, j)].norm(), 0.0);
                    }
                }
                prop_assert_eq!(nf[(i, i)].re, s.state(i)[f] as f64);
            }
        }
    }

    #[test]
    fn hamiltonian_conserves_particle_number(
        m in 1usize..=3,
        n in 1usize..=3,
        st in stats(),
        seed in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let n = if st == Statistics::Fermi { n.min(m) } else { n };
        let s = common::space(m, n, st);
        let h = build_hamiltonian(&s, &random_tensor(m, &seed));
        prop_assert!(max_abs(&commutator(&h, &s.total_number())) < 1e-12);
        prop_assert!(max_abs(&(&h - h.adjoint())) < 1e-12);
    }
}

#[test]
fn physical_tensor_hamiltonian_conserves_number() {
    for st in [Statistics::Bose, Statistics::Fermi] {
        let s = common::space(3, 3, st);
        let h = build_hamiltonian(&s, &common::tensor(&s, 0.7));
        assert!(max_abs(&commutator(&h, &s.total_number())) < 1e-12);
    }
}
