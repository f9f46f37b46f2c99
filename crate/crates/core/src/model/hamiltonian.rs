// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use num_complex::Complex;

use super::tensor::InteractionTensor;
use crate::fock::FockSpace;
use crate::scalar::{c, Operator, Real};

/// `scale · Σ V_{l1l2f2f1} a†_{l1} a†_{l2} a_{f2} a_{f1}`.
pub fn two_body_operator<T: Real>(space: &FockSpace<T>, tensor: &InteractionTensor<T>, scale: T) -> Operator<T> {
    assert_eq!(tensor.modes(), space.modes(), "tensor/space mode count mismatch");
    let s = c(scale);
    space.two_body(|l1, l2, f2, f1, _| tensor.get(l1, l2, f2, f1) * s)
}

/// `Σ_{hk} A_hk a†_h a_k` for a one-body coefficient matrix.
pub fn one_body_operator<T: Real>(space: &FockSpace<T>, coeffs: &DMatrix<Complex<T>>) -> Operator<T> {
    space.one_body(|h, k| coeffs[(h, k)])
}

/// `H = Σ_f E_f n_f + ½ Σ V_{l1l2f2f1} a†_{l1} a†_{l2} a_{f2} a_{f1}`.
pub fn build_hamiltonian<T: Real>(space: &FockSpace<T>, tensor: &InteractionTensor<T>) -> Operator<T> {
    free_hamiltonian(space) + two_body_operator(space, tensor, T::lit(0.5))
}

pub fn free_hamiltonian<T: Real>(space: &FockSpace<T>) -> Operator<T> {
    let e = &space.basis.energies;
    space.one_body(|h, k| if h == k { c(e[h]) } else { c(T::zero()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::{commutator, hermiticity_defect, max_abs, HermitianEigen};
    use crate::fock::{ModeBasis, Statistics};
    use crate::model::potential::{Potential, PotentialKind};
    use crate::model::quadrature::Rule;
    use crate::model::tensor::interaction_tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn space(m: usize, stats: Statistics, n: usize) -> FockSpace<f64> {
        FockSpace::new(ModeBasis::new(m, PI, 1.0, 1.0, stats).unwrap(), n).unwrap()
    }

    #[test]
    fn free_field_is_diagonal_with_mode_sums() {
        let s = space(3, Statistics::Bose, 2);
        let h = build_hamiltonian(&s, &InteractionTensor::zeros(3));
        for i in 0..s.dim() {
            let want: f64 = s
                .state(i)
                .iter()
                .zip(&s.basis.energies)
                .map(|(&n, e)| n as f64 * e)
                .sum();
            assert!((h[(i, i)].re - want).abs() < 1e-14);
            for j in 0..s.dim() {
                if i != j {
                    assert_eq!(h[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn random_symmetric_tensor_conserves_number() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let s = space(3, stats, 3);
            let mut t = InteractionTensor::from_fn(3, |_, _, _, _| {
                Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            t.symmetrize();
            let h = build_hamiltonian(&s, &t);
            assert!(hermiticity_defect(&h) < 1e-12);
            assert!(max_abs(&commutator(&h, &s.total_number())) < 1e-12);
        }
    }

    /// Ground energy of two bosons in the symmetric product basis, with the
    /// pair matrix element integrated directly on a 2-D tensor grid.
    #[test]
    fn two_bosons_match_first_quantized_diagonalization() {
        let m = 2;
        let s = space(m, Statistics::Bose, 2);
        let pot = Potential::new(PotentialKind::Gaussian, 0.1, PI / 10.0).unwrap();
        let t = interaction_tensor(&s.basis, &pot, 40).unwrap().tensor;
        let h = build_hamiltonian(&s, &t);
        let sector = s.sector(2);
        let block = h
            .view((sector.start, sector.start), (sector.len(), sector.len()))
            .into_owned();
        let fock_ground = HermitianEigen::new(&block).min_value();

        let rule = Rule::<f64>::new(80);
        let grid: Vec<(f64, f64)> = rule.composite(&[0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI]);
        let u = |f: usize, x: f64| s.basis.mode_function(f, x);
        // ⟨ab|V|cd⟩ with a,c on particle 1 (x) and b,d on particle 2 (y)
        let mut pair = DMatrix::<f64>::zeros(m * m, m * m);
        for (x, wx) in &grid {
            for (y, wy) in &grid {
                let v = wx * wy * pot.eval(x - y);
                for a in 0..m {
                    for b in 0..m {
                        for cc in 0..m {
                            for d in 0..m {
                                pair[(a * m + b, cc * m + d)] += v * u(a, *x) * u(b, *y) * u(cc, *x) * u(d, *y);
                            }
                        }
                    }
                }
            }
        }
        for a in 0..m {
            for b in 0..m {
                pair[(a * m + b, a * m + b)] += s.basis.energies[a] + s.basis.energies[b];
            }
        }
        // restrict to the exchange-symmetric subspace
        let mut sym = Vec::new();
        for a in 0..m {
            for b in a..m {
                let mut v = nalgebra::DVector::<f64>::zeros(m * m);
                v[a * m + b] += 1.0;
                v[b * m + a] += 1.0;
                sym.push(v.normalize());
            }
        }
        let p = DMatrix::from_columns(&sym);
        let reduced = p.transpose() * pair * &p;
        let first_quantized = nalgebra::SymmetricEigen::new(reduced).eigenvalues.min();
        assert!(
            (fock_ground - first_quantized).abs() < 1e-10,
            "{fock_ground} vs {first_quantized}"
        );
    }
}
