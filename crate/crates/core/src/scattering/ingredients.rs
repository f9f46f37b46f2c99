// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::pair_space::{build_two_particle_space, TwoParticleSpace};
use super::tmatrix::t_matrix;
use crate::error::{Error, Result};
use crate::fock::linalg::{expect, hermitian_part, operator_norm, HermitianEigen};
use crate::fock::{FockSpace, Occupation, Statistics};
use crate::model::{free_hamiltonian, two_body_operator, InteractionTensor};
use crate::scalar::{c, ci, Operator, Real};

/// Γ eigenvalues below this are reported as a model inconsistency.
pub const GAMMA_PSD_TOLERANCE: f64 = 1e-8;

/// Regularization rates of the scattering ingredients: `η` sets the energy
/// shift `iħη` of the T-matrix, `ε < η` the width of the collision
/// denominators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularization<T: Real> {
    pub eta: T,
    pub epsilon: T,
}

impl<T: Real> Regularization<T> {
    pub fn new(eta: T, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero()) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need η > ε > 0, got η = {eta}, ε = {epsilon}"
            )));
        }
        if epsilon >= eta {
            return Err(Error::InvalidArgument(format!("ε = {epsilon} must be below η = {eta}")));
        }
        Ok(Self { eta, epsilon })
    }

    /// `ħη` at a tenth of the single-particle bandwidth (or of the lowest
    /// level for one mode), `ε = η/10`.
    pub fn default_for(basis: &crate::fock::ModeBasis<T>) -> Self {
        let width = if basis.mode_count > 1 {
            basis.bandwidth()
        } else {
            basis.energies[0]
        };
        let eta = width / (T::lit(10.0) * basis.hbar);
        Self {
            eta,
            epsilon: eta / T::lit(10.0),
        }
    }

    /// Refinement path `η_n = η₀·4ⁿ`, `ε_n = η_n − η₀·2ⁿ`, n = 1..=steps.
    ///
    /// For a discrete spectrum `¼ΣR†R` matches `Γ` only when the collision
    /// width and the T-matrix shift agree (`ε/η → 1`) and the T-matrix at
    /// shift `η − ε` is close to the one at `η`. Along this path both hold,
    /// and the relative mismatch falls roughly like `2⁻ⁿ`.
    pub fn refinement_path(eta0: T, steps: usize) -> Vec<Self> {
        (1..=steps)
            .map(|n| {
                let gap = eta0 * T::lit(2f64.powi(n as i32));
                let eta = gap * T::lit(2f64.powi(n as i32));
                Self {
                    eta,
                    epsilon: eta - gap,
                }
            })
            .collect()
    }
}

/// How the Pauli factors `1 ± n ± n` are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PauliMode {
    /// Mean occupations `n̄` supplied by the caller.
    #[default]
    MeanField,
    /// Occupations of the spectator particles, so the factors act as
    /// diagonal operators. Cost grows with the number of spectator states.
    Exact,
}

/// Two-body coefficient tensors of the generator ingredients for one set of
/// occupations.
#[derive(Clone, Debug)]
pub struct PairKernels<T: Real> {
    pub v_eff: InteractionTensor<T>,
    pub gamma: InteractionTensor<T>,
    /// `r[k, λ, f2, f1]`: coefficient of `a_{f2} a_{f1}` in `R_{kλ}`.
    pub r: InteractionTensor<T>,
}

fn on_shell_t<T: Real>(space2: &TwoParticleSpace<T>, shift: T) -> Result<Vec<Operator<T>>> {
    let hbar = space2.basis.hbar;
    (0..space2.dim())
        .map(|f| t_matrix(space2, ci(space2.h0[f], hbar * shift)).map(|t| t.t))
        .collect()
}

/// Hermitian and anti-Hermitian parts of the on-shell T-matrix,
/// `½(T(z_f) + T(z_l)†)` and `(i/2)(T(z_f) − T(z_l)†)` with `z = E + iħη`.
fn on_shell_parts<T: Real>(space2: &TwoParticleSpace<T>, eta: T) -> Result<(Operator<T>, Operator<T>)> {
    let ts = on_shell_t(space2, eta)?;
    let n = space2.dim();
    let half = c(T::lit(0.5));
    let i_half = ci(T::zero(), T::lit(0.5));
    let veff = Operator::from_fn(n, n, |l, f| (ts[f][(l, f)] + ts[l][(f, l)].conj()) * half);
    let gamma = Operator::from_fn(n, n, |l, f| (ts[f][(l, f)] - ts[l][(f, l)].conj()) * i_half);
    Ok((veff, gamma))
}

pub fn pair_kernels<T: Real>(space2: &TwoParticleSpace<T>, reg: Regularization<T>) -> Result<PairKernels<T>> {
    Regularization::new(reg.eta, reg.epsilon)?;
    let (veff, gamma) = on_shell_parts(space2, reg.eta)?;
    let hbar = space2.basis.hbar;
    let shifted = on_shell_t(space2, reg.eta - reg.epsilon)?;
    let t = space2.pair_to_tensor_by_column(|p| shifted[p].clone());
    let e = &space2.basis.energies;
    let s: T = space2.statistics().sign();
    let n = &space2.occupations;
    let width = hbar * reg.epsilon;
    let r = InteractionTensor::from_fn(space2.modes(), |k, l, f2, f1| {
        let pauli = (T::one() + s * n[l] + s * n[k]).max(T::zero());
        let amp = (T::lit(2.0) * width * pauli).sqrt();
        let denom = ci(e[k] + e[l] - e[f1] - e[f2], -width);
        ci(T::zero(), -amp) * t.get(k, l, f2, f1) / denom
    });
    Ok(PairKernels {
        v_eff: space2.pair_to_tensor(&veff),
        gamma: space2.pair_to_tensor(&gamma),
        r,
    })
}

/// Effective two-body interaction from the Hermitian part of the on-shell
/// T-matrix.
pub fn v_eff<T: Real>(space2: &TwoParticleSpace<T>, eta: T) -> Result<InteractionTensor<T>> {
    positive_rate(eta)?;
    Ok(space2.pair_to_tensor(&on_shell_parts(space2, eta)?.0))
}

/// Dissipative operator `Γ = ½ Σ Γ_{l1l2f2f1} a†a†aa` from the
/// anti-Hermitian part of the on-shell T-matrix.
pub fn gamma_op<T: Real>(space: &FockSpace<T>, space2: &TwoParticleSpace<T>, eta: T) -> Result<Operator<T>> {
    positive_rate(eta)?;
    let w = space2.pair_to_tensor(&on_shell_parts(space2, eta)?.1);
    Ok(two_body_operator(space, &w, T::lit(0.5)))
}

/// Collision operators `R_{kλ}`, indexed `k * M + λ`.
pub fn r_operators<T: Real>(
    space: &FockSpace<T>,
    space2: &TwoParticleSpace<T>,
    reg: Regularization<T>,
) -> Result<Vec<Operator<T>>> {
    let kern = pair_kernels(space2, reg)?;
    Ok(lift_r(space, |_| &kern.r))
}

fn positive_rate<T: Real>(eta: T) -> Result<()> {
    if eta > T::zero() && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("η must be positive, got {eta}")))
    }
}

fn lift_r<'a, T: Real>(space: &FockSpace<T>, kernel: impl Fn(&[u8]) -> &'a InteractionTensor<T>) -> Vec<Operator<T>> {
    let m = space.modes();
    (0..m * m)
        .map(|i| {
            let (k, l) = (i / m, i % m);
            space.pair_annihilator(|f2, f1, rest| kernel(rest).get(k, l, f2, f1))
        })
        .collect()
}

/// Everything the generator needs from the scattering analysis.
#[derive(Clone, Debug)]
pub struct ScatteringOutputs<T: Real> {
    pub regularization: Regularization<T>,
    pub mode: PauliMode,
    /// Mean occupations used in mean-field mode (empty in exact mode).
    pub occupations: Vec<T>,
    pub h_eff: Operator<T>,
    /// `Γ` from the anti-Hermitian part of the T-matrix.
    pub gamma: Operator<T>,
    /// `R_{kλ}` indexed `k * M + λ`.
    pub r_ops: Vec<Operator<T>>,
    pub gamma_min_eigenvalue: T,
    pub warnings: Vec<String>,
    /// Coefficient tensors (mean-field mode only).
    pub kernels: Option<PairKernels<T>>,
}

impl<T: Real> ScatteringOutputs<T> {
    pub fn modes(&self) -> usize {
        (self.r_ops.len() as f64).sqrt().round() as usize
    }

    pub fn r(&self, k: usize, l: usize) -> &Operator<T> {
        &self.r_ops[k * self.modes() + l]
    }

    /// `¼ Σ_{kλ} R_{kλ}† R_{kλ}`, the mass-conserving choice of `Γ`.
    pub fn gamma_from_collisions(&self) -> Operator<T> {
        let d = self.gamma.nrows();
        let mut g = Operator::zeros(d, d);
        for r in &self.r_ops {
            g += r.adjoint() * r;
        }
        g.scale(T::lit(0.25))
    }

    /// `‖¼ΣR†R − Γ‖ / ‖Γ‖` in operator norm.
    pub fn gamma_defect(&self) -> T {
        let g = operator_norm(&self.gamma);
        let d = operator_norm(&(self.gamma_from_collisions() - &self.gamma));
        if g > T::zero() {
            d / g
        } else {
            d
        }
    }
}

/// Builds `H_eff`, `Γ` and the `R_{kλ}` on the full Fock space.
///
/// In [`PauliMode::Exact`] the `occupations` argument is ignored: each matrix
/// element uses the occupations of the particles not taking part in the
/// collision.
pub fn build_scattering<T: Real>(
    space: &FockSpace<T>,
    tensor: &InteractionTensor<T>,
    occupations: &[T],
    reg: Regularization<T>,
    mode: PauliMode,
) -> Result<ScatteringOutputs<T>> {
    let reg = Regularization::new(reg.eta, reg.epsilon)?;
    let half = T::lit(0.5);
    let (h_int, gamma, r_ops, kernels, occ) = match mode {
        PauliMode::MeanField => {
            let p = build_two_particle_space(&space.basis, tensor, occupations)?;
            let k = pair_kernels(&p, reg)?;
            let h = two_body_operator(space, &k.v_eff, half);
            let g = two_body_operator(space, &k.gamma, half);
            let r = lift_r(space, |_| &k.r);
            (h, g, r, Some(k), occupations.to_vec())
        }
        PauliMode::Exact => {
            let mut table: HashMap<Occupation, PairKernels<T>> = HashMap::new();
            for st in space.states() {
                if st.iter().map(|&n| n as usize).sum::<usize>() + 2 > space.max_total {
                    continue;
                }
                let n: Vec<T> = st.iter().map(|&x| T::from_u8(x).unwrap()).collect();
                let p = build_two_particle_space(&space.basis, tensor, &n)?;
                table.insert(st.clone(), pair_kernels(&p, reg)?);
            }
            let h = space.two_body(|l1, l2, f2, f1, rest| table[rest].v_eff.get(l1, l2, f2, f1) * c(half));
            let g = space.two_body(|l1, l2, f2, f1, rest| table[rest].gamma.get(l1, l2, f2, f1) * c(half));
            let r = lift_r(space, |rest| &table[rest].r);
            (h, g, r, None, Vec::new())
        }
    };
    let gamma = hermitian_part(&gamma);
    let min_eig = if gamma.nrows() > 0 {
        HermitianEigen::new(&gamma).min_value()
    } else {
        T::zero()
    };
    let mut warnings = Vec::new();
    if min_eig < -T::lit(GAMMA_PSD_TOLERANCE) {
        warnings.push(format!(
            "Γ has eigenvalue {min_eig:.3e} below -{GAMMA_PSD_TOLERANCE:.0e}; η may be too small for the level gaps"
        ));
    }
    if space.statistics() == Statistics::Fermi && occ.iter().any(|&n| n > half) {
        warnings.push("fermion occupations above ½ clip some collision prefactors to zero".into());
    }
    Ok(ScatteringOutputs {
        regularization: reg,
        mode,
        occupations: occ,
        h_eff: free_hamiltonian(space) + h_int,
        gamma,
        r_ops,
        gamma_min_eigenvalue: min_eig,
        warnings,
        kernels,
    })
}

/// Mean mode occupations `⟨n_l⟩` in state `rho`.
pub fn mean_occupations<T: Real>(space: &FockSpace<T>, rho: &Operator<T>) -> Vec<T> {
    (0..space.modes())
        .map(|l| {
            let n = expect(&space.number(l), rho).max(T::zero());
            match space.statistics() {
                Statistics::Fermi => n.min(T::one()),
                Statistics::Bose => n,
            }
        })
        .collect()
}

/// Relative change of `V_eff` when `η` is doubled.
pub fn v_eff_sensitivity<T: Real>(space2: &TwoParticleSpace<T>, eta: T) -> Result<T> {
    let a = v_eff(space2, eta)?;
    let b = v_eff(space2, eta * T::lit(2.0))?;
    let scale = a.max_abs();
    let d = b.sub(&a).max_abs();
    Ok(if scale > T::zero() { d / scale } else { d })
}

/// Eigenvalues of `T(z)` and of the pair-space `Γ` as `(re, im)` rows, for
/// diagnostic dumps.
pub fn diagnostic_spectra<T: Real>(
    space2: &TwoParticleSpace<T>,
    z: Complex<T>,
    eta: T,
) -> Result<(Vec<Complex<T>>, Vec<T>)> {
    let t = t_matrix(space2, z)?;
    let t_spec = super::pair_space::spectrum(&t.t)?;
    let (_, gamma) = on_shell_parts(space2, eta)?;
    let g_spec = if gamma.nrows() > 0 {
        HermitianEigen::new(&hermitian_part(&gamma))
            .values
            .iter()
            .copied()
            .collect()
    } else {
        Vec::new()
    };
    Ok((t_spec, g_spec))
}

/// Largest entry of `V_eff − V`, used for Born-limit fits.
pub fn v_eff_born_defect<T: Real>(space2: &TwoParticleSpace<T>, eta: T) -> Result<T> {
    let w = v_eff(space2, eta)?;
    let v = space2.pair_to_tensor(&space2.v);
    Ok(w.sub(&v).max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::{commutator, hermiticity_defect, max_abs};
    use crate::testutil;

    fn setup(m: usize, n: usize, stats: Statistics, lambda: f64) -> (FockSpace<f64>, InteractionTensor<f64>) {
        let s = testutil::space(m, n, stats);
        let t = testutil::tensor(&s, lambda);
        (s, t)
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let (lx, ly): (Vec<f64>, Vec<f64>) = (xs.iter().map(|x| x.ln()).collect(), ys.iter().map(|y| y.ln()).collect());
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
    }

    #[test]
    fn regularization_ordering() {
        assert!(Regularization::new(1.0, 1.0).is_err());
        assert!(Regularization::new(1.0, 0.0).is_err());
        assert!(Regularization::new(1.0, 0.5).is_ok());
        let path = Regularization::refinement_path(0.1, 4);
        assert!(path.iter().all(|r| r.epsilon > 0.0 && r.epsilon < r.eta));
        assert!(path
            .windows(2)
            .all(|w| w[1].epsilon / w[1].eta > w[0].epsilon / w[0].eta));
    }

    #[test]
    fn ingredients_vanish_without_interaction() {
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let (s, t) = setup(3, 2, stats, 0.0);
            let reg = Regularization::default_for(&s.basis);
            let out = build_scattering(&s, &t, &[0.1; 3], reg, PauliMode::MeanField).unwrap();
            assert_eq!(max_abs(&out.gamma), 0.0);
            assert!(out.r_ops.iter().all(|r| max_abs(r) == 0.0));
            assert!(max_abs(&(&out.h_eff - free_hamiltonian(&s))) == 0.0);
        }
    }

    #[test]
    fn gamma_is_hermitian_number_conserving_and_second_order() {
        let lambdas = [1e-2, 1e-3, 1e-4];
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let mut norms = Vec::new();
            let mut veff_defects = Vec::new();
            for &lam in &lambdas {
                let (s, t) = setup(3, 3, stats, lam);
                let p = build_two_particle_space(&s.basis, &t, &[0.2; 3]).unwrap();
                let reg = Regularization::default_for(&s.basis);
                let g = gamma_op(&s, &p, reg.eta).unwrap();
                assert!(hermiticity_defect(&g) < 1e-12 * max_abs(&g).max(1e-300));
                assert!(max_abs(&commutator(&g, &s.total_number())) < 1e-12);
                norms.push(operator_norm(&g));
                veff_defects.push(v_eff_born_defect(&p, reg.eta).unwrap());
                assert!(v_eff(&p, reg.eta).unwrap().symmetry_defect() < 1e-12);
            }
            assert!((slope(&lambdas, &norms) - 2.0).abs() < 0.1);
            assert!((slope(&lambdas, &veff_defects) - 2.0).abs() < 0.1);
        }
    }

    #[test]
    fn collision_operators_lower_particle_number_by_two() {
        let (s, t) = setup(3, 3, Statistics::Bose, 0.5);
        let reg = Regularization::default_for(&s.basis);
        let out = build_scattering(&s, &t, &[0.3; 3], reg, PauliMode::MeanField).unwrap();
        let n = s.total_number();
        for r in &out.r_ops {
            let shifted = &n * r - r * &n + r.scale(2.0);
            assert!(max_abs(&shifted) < 1e-12);
            let rr = r.adjoint() * r;
            assert!(max_abs(&commutator(&rr, &n)) < 1e-12);
        }
    }

    #[test]
    fn exact_mode_reduces_to_empty_medium_with_two_particles() {
        let (s, t) = setup(3, 2, Statistics::Bose, 0.6);
        let reg = Regularization::default_for(&s.basis);
        let exact = build_scattering(&s, &t, &[], reg, PauliMode::Exact).unwrap();
        let mf = build_scattering(&s, &t, &[0.0; 3], reg, PauliMode::MeanField).unwrap();
        assert!(max_abs(&(&exact.h_eff - &mf.h_eff)) < 1e-13);
        assert!(max_abs(&(&exact.gamma - &mf.gamma)) < 1e-13);
        for (a, b) in exact.r_ops.iter().zip(&mf.r_ops) {
            assert!(max_abs(&(a - b)) < 1e-13);
        }
    }

    #[test]
    fn exact_mode_uses_spectator_occupations() {
        let (s, t) = setup(2, 3, Statistics::Bose, 0.6);
        let reg = Regularization::default_for(&s.basis);
        let exact = build_scattering(&s, &t, &[], reg, PauliMode::Exact).unwrap();
        // One spectator in mode 0: compare the 3-particle block element
        // against a mean-field build with that occupation.
        let mf = build_scattering(&s, &t, &[1.0, 0.0], reg, PauliMode::MeanField).unwrap();
        let src = s.index_of(&[1, 2]).unwrap();
        let dst = s.index_of(&[1, 0]).unwrap();
        let r = exact.r(1, 1)[(dst, src)];
        let want = mf.r(1, 1)[(dst, src)];
        assert!((r - want).norm() < 1e-13 && r.norm() > 0.0);
        assert!(hermiticity_defect(&exact.h_eff) < 1e-12);
    }

    #[test]
    fn collision_sum_approaches_gamma_along_refinement_path() {
        let (s, t) = setup(2, 2, Statistics::Bose, 0.5);
        let eta0 = Regularization::default_for(&s.basis).eta;
        let defects: Vec<f64> = Regularization::refinement_path(eta0, 7)
            .into_iter()
            .map(|reg| {
                build_scattering(&s, &t, &[0.0; 2], reg, PauliMode::MeanField)
                    .unwrap()
                    .gamma_defect()
            })
            .collect();
        assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
        assert!(defects.last().unwrap() < &0.02, "{defects:?}");
    }

    #[test]
    fn v_eff_sensitivity_is_finite() {
        let (s, t) = setup(3, 2, Statistics::Fermi, 0.3);
        let p = build_two_particle_space(&s.basis, &t, &[0.0; 3]).unwrap();
        let reg = Regularization::default_for(&s.basis);
        let d = v_eff_sensitivity(&p, reg.eta).unwrap();
        assert!(d.is_finite() && d < 1.0);
    }
}
