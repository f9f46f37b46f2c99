// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex;

use super::pair_space::TwoParticleSpace;
use crate::error::{Error, Result};
use crate::scalar::{c, cabs, Operator, Real};

/// Smallest admissible distance between `z` and the spectrum of `H_L`.
pub const SPECTRAL_MARGIN: f64 = 1e-8;

/// Pauli-corrected scattering operator on the two-particle space at one
/// complex energy.
#[derive(Clone, Debug)]
pub struct TMatrix<T: Real> {
    pub z: Complex<T>,
    pub t: Operator<T>,
}

fn check_proximity<T: Real>(z: Complex<T>, spectrum: &[Complex<T>]) -> Result<()> {
    let margin = T::lit(SPECTRAL_MARGIN);
    if let Some((e, d)) = spectrum
        .iter()
        .map(|&e| (e, cabs(z - e)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
    {
        if !(d >= margin) {
            return Err(Error::SpectralProximity {
                z_re: z.re.as_f64(),
                z_im: z.im.as_f64(),
                eig_re: e.re.as_f64(),
                eig_im: e.im.as_f64(),
                distance: d.as_f64(),
            });
        }
    }
    Ok(())
}

fn solve<T: Real>(a: Operator<T>, b: &Operator<T>) -> Result<Operator<T>> {
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::numeric("t_matrix", "singular resolvent"))
}

/// `T(z) = V + V (z − H_L)⁻¹ V_L`.
pub fn t_matrix<T: Real>(space2: &TwoParticleSpace<T>, z: Complex<T>) -> Result<TMatrix<T>> {
    check_proximity(z, space2.h_l_spectrum())?;
    let n = space2.dim();
    let mut a = -space2.v_l.clone();
    for i in 0..n {
        a[(i, i)] += z - c(space2.h0[i]);
    }
    let x = solve(a, &space2.v_l)?;
    Ok(TMatrix {
        z,
        t: &space2.v + &space2.v * x,
    })
}

/// Empty-medium T-matrix from the Lippmann–Schwinger form
/// `(I − V G0(z)) T = V`, `G0 = (z − H0)⁻¹`. Ignores the occupations.
pub fn t_matrix_lippmann_schwinger<T: Real>(space2: &TwoParticleSpace<T>, z: Complex<T>) -> Result<TMatrix<T>> {
    let n = space2.dim();
    let mut h = space2.v.clone();
    for i in 0..n {
        h[(i, i)] += c(space2.h0[i]);
    }
    check_proximity(z, &super::pair_space::spectrum(&h)?)?;
    let mut a = Operator::<T>::identity(n, n);
    for j in 0..n {
        let g = Complex::new(T::one(), T::zero()) / (z - c(space2.h0[j]));
        for i in 0..n {
            a[(i, j)] -= space2.v[(i, j)] * g;
        }
    }
    Ok(TMatrix {
        z,
        t: solve(a, &space2.v)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::max_abs;
    use crate::fock::Statistics;
    use crate::scattering::build_two_particle_space;
    use crate::testutil;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two(m: usize, stats: Statistics, lambda: f64, nbar: f64) -> TwoParticleSpace<f64> {
        let s = testutil::space(m, 2, stats);
        let t = testutil::tensor(&s, lambda);
        build_two_particle_space(&s.basis, &t, &vec![nbar; m]).unwrap()
    }

    #[test]
    fn vanishes_without_interaction() {
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let p = two(3, stats, 0.0, 0.2);
            let t = t_matrix(&p, Complex::new(2.0, 0.3)).unwrap();
            assert_eq!(max_abs(&t.t), 0.0);
        }
    }

    #[test]
    fn born_defect_is_second_order() {
        let z = Complex::new(3.1, 0.4);
        let defect = |lambda: f64| {
            let p = two(3, Statistics::Bose, lambda, 0.1);
            let t = t_matrix(&p, z).unwrap();
            max_abs(&(&t.t - &p.v))
        };
        let lambdas = [1e-2, 1e-3, 1e-4];
        let logs: Vec<(f64, f64)> = lambdas.iter().map(|&l| (f64::ln(l), defect(l).ln())).collect();
        let n = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn agrees_with_lippmann_schwinger_form_in_empty_medium() {
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let p = two(3, stats, 0.8, 0.0);
            for z in [
                Complex::new(2.5, 0.2),
                Complex::new(-1.0, 0.01),
                Complex::new(7.0, -0.5),
            ] {
                let a = t_matrix(&p, z).unwrap().t;
                let b = t_matrix_lippmann_schwinger(&p, z).unwrap().t;
                assert!(max_abs(&(&a - &b)) < 1e-10);
            }
        }
    }

    #[test]
    fn adjoint_reflects_energy_in_mean_field() {
        for (stats, nbar) in [(Statistics::Bose, 0.4), (Statistics::Fermi, 0.3)] {
            let p = two(3, stats, 0.9, nbar);
            let z = Complex::new(4.0, 0.7);
            let a = t_matrix(&p, z).unwrap().t.adjoint();
            let b = t_matrix(&p, z.conj()).unwrap().t;
            assert!(max_abs(&(&a - &b)) < 1e-12);
        }
    }

    #[test]
    fn rejects_energy_on_spectrum() {
        let p = two(2, Statistics::Bose, 0.5, 0.0);
        let e = p.h_l_spectrum()[0];
        match t_matrix(&p, e) {
            Err(Error::SpectralProximity { distance, .. }) => assert!(distance < 1e-8),
            other => panic!("expected proximity error, got {other:?}"),
        }
    }

    /// Full resolvent on the two-particle block against the free resolvent
    /// dressed by the scattering operator.
    #[test]
    fn resolvent_identity_on_two_particle_block() {
        let p = two(3, Statistics::Bose, 0.8, 0.0);
        let n = p.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let z = Complex::new(rng.random_range(-2.0..12.0), rng.random_range(0.05..1.0));
            let mut full = -p.v.clone();
            let mut free = Operator::<f64>::zeros(n, n);
            for i in 0..n {
                full[(i, i)] += z - p.h0[i];
                free[(i, i)] = 1.0 / (z - p.h0[i]);
            }
            let g = full.try_inverse().unwrap();
            let t = t_matrix(&p, z).unwrap().t;
            let rhs = &free + &free * t * &free;
            assert!(max_abs(&(g - rhs)) < 1e-10);
        }
    }
}
