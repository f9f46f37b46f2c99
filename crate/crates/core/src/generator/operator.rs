// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::linalg::{commutator, operator_norm};
use crate::fock::FockSpace;
use crate::model::InteractionTensor;
use crate::scalar::{c, ci, Operator, Real};
use crate::scattering::ScatteringOutputs;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOptions<T: Real> {
    /// Slow-variable time scale: bilinears with `|E_h − E_k|/ħ ≥ 1/τ₁` are
    /// marked fast. `None` keeps every pair.
    pub tau1: Option<T>,
    /// Use `Γ = ¼ Σ R†R`, which makes the total mass exactly conserved.
    /// Otherwise the T-matrix `Γ` is used as is.
    pub mass_conserving_gamma: bool,
}

impl<T: Real> Default for GeneratorOptions<T> {
    fn default() -> Self {
        Self {
            tau1: None,
            mass_conserving_gamma: true,
        }
    }
}

/// The irreversible generator, stored as its action on every bilinear
/// `a_h† a_k`.
#[derive(Clone, Debug)]
pub struct GeneratorL<T: Real> {
    pub space: FockSpace<T>,
    pub hbar: T,
    pub h_eff: Operator<T>,
    /// The `Γ` entering the generator.
    pub gamma: Operator<T>,
    /// `Γ` from the T-matrix, kept for comparison.
    pub gamma_scattering: Operator<T>,
    pub r_ops: Vec<Operator<T>>,
    pub tau1: Option<T>,
    pub mass_conserving_gamma: bool,
    /// Pairs `(h, k)` failing the slow-variable condition.
    pub excluded: Vec<(usize, usize)>,
    creators: Vec<Operator<T>>,
    annihilators: Vec<Operator<T>>,
    actions: Vec<Operator<T>>,
}

/// Assembles `L′(a_h† a_k)` for all pairs:
///
/// `(i/ħ)[H_eff, a_h†a_k] − (1/ħ)([Γ, a_h†]a_k − a_h†[Γ, a_k]) + (1/ħ) Σ_λ R_{hλ}† R_{kλ}`.
pub fn build_generator<T: Real>(
    space: &FockSpace<T>,
    outputs: &ScatteringOutputs<T>,
    opts: GeneratorOptions<T>,
) -> Result<GeneratorL<T>> {
    let d = space.dim();
    let m = space.modes();
    if outputs.h_eff.nrows() != d || outputs.r_ops.len() != m * m {
        return Err(Error::InvalidArgument(
            "scattering outputs were built on a different Fock space".into(),
        ));
    }
    if let Some(t) = opts.tau1 {
        if !(t > T::zero()) {
            return Err(Error::InvalidArgument(format!("τ₁ must be positive, got {t}")));
        }
    }
    let hbar = space.basis.hbar;
    let gamma = if opts.mass_conserving_gamma {
        outputs.gamma_from_collisions()
    } else {
        outputs.gamma.clone()
    };
    let creators: Vec<Operator<T>> = (0..m).map(|f| space.creator(f)).collect();
    let annihilators: Vec<Operator<T>> = (0..m).map(|f| space.annihilator(f)).collect();
    let inv_hbar = c(T::one() / hbar);
    let i_over_hbar = ci(T::zero(), T::one() / hbar);
    let mut actions = Vec::with_capacity(m * m);
    let mut excluded = Vec::new();
    for h in 0..m {
        for k in 0..m {
            let x = &creators[h] * &annihilators[k];
            let unitary = commutator(&outputs.h_eff, &x) * i_over_hbar;
            let loss = commutator(&gamma, &creators[h]) * &annihilators[k]
                - &creators[h] * commutator(&gamma, &annihilators[k]);
            let mut gain = Operator::zeros(d, d);
            for l in 0..m {
                gain += outputs.r(h, l).adjoint() * outputs.r(k, l);
            }
            actions.push(unitary + (gain - loss) * inv_hbar);
            if let Some(t1) = opts.tau1 {
                let e = &space.basis.energies;
                if (e[h] - e[k]).abs() / hbar >= T::one() / t1 {
                    excluded.push((h, k));
                }
            }
        }
    }
    Ok(GeneratorL {
        space: space.clone(),
        hbar,
        h_eff: outputs.h_eff.clone(),
        gamma,
        gamma_scattering: outputs.gamma.clone(),
        r_ops: outputs.r_ops.clone(),
        tau1: opts.tau1,
        mass_conserving_gamma: opts.mass_conserving_gamma,
        excluded,
        creators,
        annihilators,
        actions,
    })
}

impl<T: Real> GeneratorL<T> {
    pub fn modes(&self) -> usize {
        self.space.modes()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn r(&self, k: usize, l: usize) -> &Operator<T> {
        &self.r_ops[k * self.modes() + l]
    }

    pub fn creator(&self, h: usize) -> &Operator<T> {
        &self.creators[h]
    }

    pub fn annihilator(&self, k: usize) -> &Operator<T> {
        &self.annihilators[k]
    }

    /// `a_h† a_k`.
    pub fn bilinear(&self, h: usize, k: usize) -> Operator<T> {
        &self.creators[h] * &self.annihilators[k]
    }

    /// `L′(a_h† a_k)`.
    pub fn action(&self, h: usize, k: usize) -> &Operator<T> {
        &self.actions[h * self.modes() + k]
    }

    pub fn is_slow(&self, h: usize, k: usize) -> bool {
        !self.excluded.contains(&(h, k))
    }

    /// Whether a one-body observable lies in the span of slow bilinears.
    pub fn is_slow_observable(&self, coeffs: &DMatrix<Complex<T>>) -> bool {
        self.excluded
            .iter()
            .all(|&(h, k)| coeffs[(h, k)].re == T::zero() && coeffs[(h, k)].im == T::zero())
    }

    /// Largest operator norm among the bilinear actions.
    pub fn norm(&self) -> T {
        self.actions.iter().map(operator_norm).fold(T::zero(), |a, b| a.max(b))
    }

    /// `L′(Σ c_{hk} a_h† a_k)`.
    pub fn apply_one_body(&self, coeffs: &DMatrix<Complex<T>>) -> Operator<T> {
        let m = self.modes();
        let d = self.dim();
        let mut out = Operator::zeros(d, d);
        for h in 0..m {
            for k in 0..m {
                let w = coeffs[(h, k)];
                if w.re != T::zero() || w.im != T::zero() {
                    out += self.action(h, k) * w;
                }
            }
        }
        out
    }

    /// `L′(scale · Σ W_{l1l2f2f1} a†_{l1} a†_{l2} a_{f2} a_{f1})` by the
    /// product rule on `a†_{l1}a†_{l2}a_{f2}a_{f1} = A_{l1f1}A_{l2f2} − δ_{f1l2} A_{l1f2}`.
    pub fn apply_two_body(&self, tensor: &InteractionTensor<T>, scale: T) -> Operator<T> {
        let m = self.modes();
        let d = self.dim();
        let s = c(scale);
        let mut out = Operator::zeros(d, d);
        let bil: Vec<Operator<T>> = (0..m * m).map(|i| self.bilinear(i / m, i % m)).collect();
        for a in 0..m {
            for b in 0..m {
                // Right and left partners of A_{ab} and L′(A_{ab}).
                let mut right = Operator::zeros(d, d);
                let mut left = Operator::zeros(d, d);
                for p in 0..m {
                    for q in 0..m {
                        let w_right = tensor.get(a, p, q, b);
                        if w_right.re != T::zero() || w_right.im != T::zero() {
                            right += &bil[p * m + q] * w_right;
                        }
                        let w_left = tensor.get(p, a, b, q);
                        if w_left.re != T::zero() || w_left.im != T::zero() {
                            left += &bil[p * m + q] * w_left;
                        }
                    }
                }
                let la = self.action(a, b);
                out += (la * &right + &left * la) * s;
                let contraction = (0..m).fold(c(T::zero()), |acc, f| acc + tensor.get(a, f, b, f));
                if contraction.re != T::zero() || contraction.im != T::zero() {
                    out -= la * (contraction * s);
                }
            }
        }
        out
    }

    /// `L′(M̂)` with `M̂ = m Σ_h a_h† a_h`.
    pub fn apply_to_mass(&self) -> Operator<T> {
        let d = self.dim();
        let mut out = Operator::zeros(d, d);
        for h in 0..self.modes() {
            out += self.action(h, h);
        }
        out * c(self.space.basis.mass)
    }

    /// `(gain, loss)` with `L′(n_h) − (i/ħ)[H_eff, n_h] = gain − loss`.
    pub fn gain_loss_split(&self, h: usize) -> (Operator<T>, Operator<T>) {
        let d = self.dim();
        let inv_hbar = c(T::one() / self.hbar);
        let mut gain = Operator::zeros(d, d);
        for l in 0..self.modes() {
            gain += self.r(h, l).adjoint() * self.r(h, l);
        }
        let loss = commutator(&self.gamma, &self.creators[h]) * &self.annihilators[h]
            - &self.creators[h] * commutator(&self.gamma, &self.annihilators[h]);
        (gain * inv_hbar, loss * inv_hbar)
    }
}
