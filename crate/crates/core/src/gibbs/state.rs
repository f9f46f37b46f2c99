// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::linalg::{expect, hermiticity_defect, max_abs, weight_divided_difference, HermitianEigen};
use crate::model::CellObservables;
use crate::scalar::{c, Operator, Real};

/// Per-cell multiplier fields `(β_c, μ_c, v_c)`.
///
/// `kappa` multiplies the rest-frame momentum `P⁰_c`. In a translation
/// invariant medium it vanishes identically; the box walls break Galilean
/// covariance, so a nonzero `κ_c` is needed to hold `⟨P⁰_c⟩ = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState<T: Real> {
    pub beta: Vec<T>,
    pub mu: Vec<T>,
    pub v: Vec<T>,
    pub kappa: Vec<T>,
}

impl<T: Real> ClassicalState<T> {
    pub fn new(beta: Vec<T>, mu: Vec<T>, v: Vec<T>) -> Result<Self> {
        let kappa = vec![T::zero(); beta.len()];
        let z = Self { beta, mu, v, kappa };
        z.validate(z.beta.len())?;
        Ok(z)
    }

    /// Same `(β, μ)` in every cell, at rest.
    pub fn uniform(cells: usize, beta: T, mu: T) -> Self {
        Self {
            beta: vec![beta; cells],
            mu: vec![mu; cells],
            v: vec![T::zero(); cells],
            kappa: vec![T::zero(); cells],
        }
    }

    pub fn cells(&self) -> usize {
        self.beta.len()
    }

    pub fn validate(&self, cells: usize) -> Result<()> {
        let n = self.beta.len();
        if n != cells || self.mu.len() != n || self.v.len() != n || self.kappa.len() != n {
            return Err(Error::InvalidArgument(format!(
                "classical state has {n} cells, observables have {cells}"
            )));
        }
        let all = self.beta.iter().chain(&self.mu).chain(&self.v).chain(&self.kappa);
        if all.clone().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("classical state has non-finite entries".into()));
        }
        if let Some(b) = self.beta.iter().find(|b| !(**b > T::zero())) {
            return Err(Error::InvalidArgument(format!(
                "inverse temperature must be positive, got {b}"
            )));
        }
        Ok(())
    }

    /// Coefficients of the lab operators `(E_c, P_c, M_c)` in the exponent:
    /// `θ_E = β`, `θ_P = κ - βv`, `θ_M = β(½v² - μ) - κv`.
    pub fn natural(&self, cell: usize) -> [T; 3] {
        let (b, mu, v, k) = (self.beta[cell], self.mu[cell], self.v[cell], self.kappa[cell]);
        [b, k - b * v, b * (T::lit(0.5) * v * v - mu) - k * v]
    }

    /// Inverse of [`ClassicalState::natural`] at a given velocity.
    pub fn from_natural(theta: &[[T; 3]], v: &[T]) -> Self {
        let mut z = Self::uniform(theta.len(), T::one(), T::zero());
        for (cell, th) in theta.iter().enumerate() {
            let b = th[0];
            let k = th[1] + b * v[cell];
            z.beta[cell] = b;
            z.kappa[cell] = k;
            z.v[cell] = v[cell];
            z.mu[cell] = T::lit(0.5) * v[cell] * v[cell] - (th[2] + k * v[cell]) / b;
        }
        z
    }

    pub fn max_abs_difference(&self, other: &Self) -> T {
        let pairs = [(&self.beta, &other.beta), (&self.mu, &other.mu), (&self.v, &other.v)];
        pairs
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// `ρ = exp(-K)/Z` with the eigendecomposition of `K` retained for
/// covariances and entropies.
#[derive(Clone, Debug)]
pub struct GibbsState<T: Real> {
    pub exponent: Operator<T>,
    pub eigen: HermitianEigen<T>,
    /// Eigenvalues of `ρ`, aligned with `eigen`.
    pub weights: DVector<T>,
    pub log_z: T,
    pub rho: Operator<T>,
}

impl<T: Real> GibbsState<T> {
    pub fn from_exponent(k: Operator<T>) -> Result<Self> {
        let scale = max_abs(&k).max(T::one());
        if hermiticity_defect(&k) > T::lit(1e-10) * scale {
            return Err(Error::InvalidArgument("Gibbs exponent must be Hermitian".into()));
        }
        let eigen = HermitianEigen::new(&k);
        let kmin = eigen.min_value();
        if !kmin.is_finite() {
            return Err(Error::numeric("gibbs_state", "exponent has non-finite spectrum"));
        }
        let shifted: Vec<T> = eigen.values.iter().map(|&x| (-(x - kmin)).exp()).collect();
        let sum = shifted.iter().fold(T::zero(), |s, &x| s + x);
        if !sum.is_finite() || sum <= T::zero() {
            return Err(Error::numeric("gibbs_state", "partition function overflow"));
        }
        let weights = DVector::from_iterator(shifted.len(), shifted.iter().map(|&x| x / sum));
        let log_z = sum.ln() - kmin;
        let rho = eigen.map_by_index(|i| c(weights[i]));
        Ok(Self {
            exponent: k,
            eigen,
            weights,
            log_z,
            rho,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn expect(&self, a: &Operator<T>) -> T {
        expect(a, &self.rho)
    }

    /// `S = -Σ p log p`.
    pub fn entropy(&self) -> T {
        von_neumann_weights(self.weights.iter().copied())
    }

    /// `S = log Z + ⟨K⟩`, the thermodynamic form of the same quantity.
    pub fn entropy_from_exponent(&self) -> T {
        self.log_z + self.expect(&self.exponent)
    }

    /// Kubo–Mori covariance `-∂_s Tr(A e^{-K-sB})/Z(s)` at `s = 0`.
    pub fn covariance(&self, a: &Operator<T>, b: &Operator<T>) -> T {
        let at = self.eigen.to_eigenbasis(a);
        let bt = self.eigen.to_eigenbasis(b);
        self.covariance_in_eigenbasis(&at, &bt)
    }

    fn covariance_in_eigenbasis(&self, at: &Operator<T>, bt: &Operator<T>) -> T {
        let n = self.dim();
        let (mut acc, mut ea, mut eb) = (T::zero(), T::zero(), T::zero());
        for i in 0..n {
            let (pi, ki) = (self.weights[i], self.eigen.values[i]);
            ea += pi * at[(i, i)].re;
            eb += pi * bt[(i, i)].re;
            for j in 0..n {
                let w = weight_divided_difference(pi, ki, self.weights[j], self.eigen.values[j]);
                acc += (at[(j, i)] * bt[(i, j)]).re * w;
            }
        }
        -acc - ea * eb
    }

    /// Kubo–Mori Gram matrix of a family of Hermitian operators.
    pub fn covariance_matrix(&self, ops: &[&Operator<T>]) -> DMatrix<T> {
        let tilde: Vec<Operator<T>> = ops.iter().map(|a| self.eigen.to_eigenbasis(a)).collect();
        let n = ops.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.covariance_in_eigenbasis(&tilde[i], &tilde[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// `log ρ = -K - log Z`.
    pub fn log_rho(&self) -> Operator<T> {
        let lz = self.log_z;
        self.eigen.map(|k| c(-k - lz))
    }
}

/// Exponent `Σ_c β_c (E⁰_c - μ_c M_c) + κ_c P⁰_c` at the state's own velocities.
pub fn gibbs_exponent<T: Real>(z: &ClassicalState<T>, obs: &CellObservables<T>) -> Result<Operator<T>> {
    z.validate(obs.cell_count)?;
    let d = obs.hamiltonian.nrows();
    let mut k = Operator::zeros(d, d);
    for cell in 0..obs.cell_count {
        let [te, tp, tm] = z.natural(cell);
        k += &obs.e_lab[cell] * c(te) + &obs.p_lab[cell] * c(tp) + &obs.m_ops[cell] * c(tm);
    }
    Ok(k)
}

pub fn gibbs_state<T: Real>(z: &ClassicalState<T>, obs: &CellObservables<T>) -> Result<GibbsState<T>> {
    GibbsState::from_exponent(gibbs_exponent(z, obs)?)
}

/// `-Σ λ log λ` over the spectrum of a density matrix, `0 log 0 = 0`.
pub fn von_neumann_entropy<T: Real>(rho: &Operator<T>) -> T {
    von_neumann_weights(HermitianEigen::new(rho).values.iter().copied())
}

fn von_neumann_weights<T: Real>(weights: impl Iterator<Item = T>) -> T {
    weights.fold(T::zero(), |s, p| if p > T::zero() { s - p * p.ln() } else { s })
}

/// Lab-frame expectation targets per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTargets<T: Real> {
    pub energy: Vec<T>,
    pub mass: Vec<T>,
    pub momentum: Vec<T>,
}

impl<T: Real> CellTargets<T> {
    pub fn measure(obs: &CellObservables<T>, rho: &Operator<T>) -> Self {
        Self {
            energy: obs.e_lab.iter().map(|a| expect(a, rho)).collect(),
            mass: obs.m_ops.iter().map(|a| expect(a, rho)).collect(),
            momentum: obs.p_lab.iter().map(|a| expect(a, rho)).collect(),
        }
    }

    pub fn cells(&self) -> usize {
        self.energy.len()
    }

    /// Flattened as `[E_0, M_0, P_0, E_1, ...]`.
    pub fn to_vec(&self) -> Vec<T> {
        (0..self.cells())
            .flat_map(|c| [self.energy[c], self.mass[c], self.momentum[c]])
            .collect()
    }

    pub fn from_slice(v: &[T]) -> Self {
        let cells = v.len() / 3;
        Self {
            energy: (0..cells).map(|c| v[3 * c]).collect(),
            mass: (0..cells).map(|c| v[3 * c + 1]).collect(),
            momentum: (0..cells).map(|c| v[3 * c + 2]).collect(),
        }
    }

    /// `v_c = ⟨P_c⟩ / ⟨M_c⟩`.
    pub fn velocities(&self) -> Vec<T> {
        self.momentum.iter().zip(&self.mass).map(|(p, m)| *p / *m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::{expm_and_frechet, identity};
    use crate::fock::{FockSpace, ModeBasis, Statistics};
    use crate::scalar::CVector;
    use crate::testutil::observables;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Occupation tuples with total ≤ n, enumerated independently of the
    /// Fock space.
    fn configurations(m: usize, n: usize, cap: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..m {
            let mut next = Vec::new();
            for partial in &out {
                let used: usize = partial.iter().sum();
                for k in 0..=cap.min(n - used) {
                    let mut p = partial.clone();
                    p.push(k);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn free_occupations_match_configuration_sum() {
        for (stats, cap) in [(Statistics::Bose, 3), (Statistics::Fermi, 1)] {
            let obs = observables(3, 3, stats, 0.0, 1);
            let (beta, mu) = (0.9, 0.7);
            let gs = gibbs_state(&ClassicalState::uniform(1, beta, mu), &obs).unwrap();
            let e = [0.5, 2.0, 4.5];
            let confs = configurations(3, 3, cap);
            let weight = |n: &Vec<usize>| (-beta * (0..3).map(|f| (e[f] - mu) * n[f] as f64).sum::<f64>()).exp();
            let z: f64 = confs.iter().map(weight).sum();
            let space = FockSpace::new(ModeBasis::new(3, PI, 1.0, 1.0, stats).unwrap(), 3).unwrap();
            for f in 0..3 {
                let want: f64 = confs.iter().map(|n| n[f] as f64 * weight(n)).sum::<f64>() / z;
                assert!((gs.expect(&space.number(f)) - want).abs() < 1e-10);
            }
            assert!((gs.log_z - z.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn large_beta_approaches_vacuum() {
        let obs = observables(2, 2, Statistics::Bose, 0.1, 1);
        let gs = gibbs_state(&ClassicalState::uniform(1, 60.0, 0.0), &obs).unwrap();
        assert!((gs.rho[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_one_and_positive() {
        let obs = observables(3, 2, Statistics::Fermi, 0.3, 2);
        let z = ClassicalState::new(vec![0.4, 1.3], vec![1.0, -0.5], vec![0.2, -0.1]).unwrap();
        let gs = gibbs_state(&z, &obs).unwrap();
        let tr: f64 = (0..gs.dim()).map(|i| gs.rho[(i, i)].re).sum();
        assert!((tr - 1.0).abs() < 1e-12);
        assert!(HermitianEigen::new(&gs.rho).min_value() > -1e-12);
    }

    #[test]
    fn natural_parameters_reproduce_rest_frame_exponent() {
        let obs = observables(3, 2, Statistics::Bose, 0.2, 2);
        let mut z = ClassicalState::new(vec![0.7, 1.1], vec![0.3, -0.2], vec![0.25, -0.4]).unwrap();
        z.kappa = vec![0.1, -0.3];
        let mut direct = Operator::<f64>::zeros(obs.hamiltonian.nrows(), obs.hamiltonian.ncols());
        for cell in 0..2 {
            let (b, mu, v, k) = (z.beta[cell], z.mu[cell], z.v[cell], z.kappa[cell]);
            direct += (obs.rest_energy(cell, v) - &obs.m_ops[cell] * c(mu)) * c(b) + obs.rest_momentum(cell, v) * c(k);
        }
        assert!(max_abs(&(direct - gibbs_exponent(&z, &obs).unwrap())) < 1e-12);
        let theta: Vec<[f64; 3]> = (0..2).map(|c| z.natural(c)).collect();
        assert!(ClassicalState::from_natural(&theta, &z.v).max_abs_difference(&z) < 1e-14);
    }

    #[test]
    fn entropy_limits_and_thermodynamic_identity() {
        let d = 6;
        let e = CVector::<f64>::from_fn(d, |i, _| c(if i == 2 { 1.0 } else { 0.0 }));
        assert_eq!(von_neumann_entropy(&(&e * e.adjoint())), 0.0);
        let mixed = identity::<f64>(d) * c(1.0 / d as f64);
        assert!((von_neumann_entropy(&mixed) - (d as f64).ln()).abs() < 1e-12);
        let obs = observables(3, 2, Statistics::Bose, 0.4, 3);
        let z = ClassicalState::new(vec![0.5, 1.0, 2.0], vec![0.0, 0.5, -1.0], vec![0.0; 3]).unwrap();
        let gs = gibbs_state(&z, &obs).unwrap();
        assert!(gs.entropy() > 0.0);
        assert!((gs.entropy() - gs.entropy_from_exponent()).abs() < 1e-10);
    }

    #[test]
    fn covariance_cancels_identity_and_reduces_to_classical_when_commuting() {
        let obs = observables(3, 2, Statistics::Bose, 0.0, 1);
        let gs = gibbs_state(&ClassicalState::uniform(1, 0.8, 0.4), &obs).unwrap();
        let id = identity::<f64>(gs.dim());
        assert!(gs.covariance(&obs.e_lab[0], &id).abs() < 1e-14);
        let (a, b) = (&obs.e_lab[0], &obs.m_ops[0]);
        let classical = gs.expect(&(a * b)) - gs.expect(a) * gs.expect(b);
        assert!((gs.covariance(a, b) - classical).abs() < 1e-12);
    }

    #[test]
    fn covariance_matches_finite_difference_and_frechet_route() {
        let obs = observables(3, 2, Statistics::Bose, 0.5, 2);
        let z = ClassicalState::new(vec![0.6, 1.2], vec![0.2, 0.6], vec![0.1, 0.0]).unwrap();
        let gs = gibbs_state(&z, &obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = gs.dim();
        let mut a = Operator::<f64>::from_fn(d, d, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        a = &a + a.adjoint();
        let b = &obs.p_lab[1];
        let h = 1e-5;
        let shifted = |s: f64| {
            let g = GibbsState::from_exponent(&gs.exponent + b * c(s)).unwrap();
            g.expect(&a)
        };
        let fd = -(shifted(h) - shifted(-h)) / (2.0 * h);
        assert!((gs.covariance(&a, b) - fd).abs() < 1e-7);
        // second route: explicit Fréchet derivative of exp(-K)
        let (ek, dk) = expm_and_frechet(&gs.exponent, b).unwrap();
        let z0 = crate::fock::linalg::trace(&ek).re;
        let dz = crate::fock::linalg::trace(&dk).re;
        let num = crate::fock::linalg::trace_product(&a, &ek).re;
        let dnum = crate::fock::linalg::trace_product(&a, &dk).re;
        let frechet = -(dnum / z0 - num * dz / (z0 * z0));
        assert!((gs.covariance(&a, b) - frechet).abs() < 1e-10);
        let g = gs.covariance_matrix(&[&a, b, &obs.e_lab[0]]);
        assert!((g[(0, 1)] - g[(1, 0)]).abs() < 1e-14);
        assert!(nalgebra::SymmetricEigen::new(g).eigenvalues.min() > -1e-12);
    }
}
