// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DVector, Schur};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, ModeBasis, Statistics};
use crate::model::{two_body_operator, InteractionTensor};
use crate::scalar::{c, CVector, Operator, Real};

/// The (anti)symmetrized two-particle space with its free energies, pair
/// interaction and Pauli-corrected interaction `V_L`.
///
/// The orthonormal pair basis is the two-particle sector of the Fock space,
/// so `|l l⟩` for bosons is the normalized doubly occupied state.
#[derive(Clone, Debug)]
pub struct TwoParticleSpace<T: Real> {
    pub basis: ModeBasis<T>,
    /// Modes `(l1, l2)` with `l1 ≤ l2` of each pair state.
    pub pairs: Vec<(usize, usize)>,
    pub h0: DVector<T>,
    pub v: Operator<T>,
    pub occupations: Vec<T>,
    /// `1 ± n̄_{l1} ± n̄_{l2}` per pair state.
    pub pauli: Vec<T>,
    pub v_l: Operator<T>,
    hl_spectrum: Vec<Complex<T>>,
    /// `a†_{l1} a†_{l2} |0⟩` in the pair basis, indexed `l1 * M + l2`.
    creation: Vec<CVector<T>>,
}

impl<T: Real> TwoParticleSpace<T> {
    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn modes(&self) -> usize {
        self.basis.mode_count
    }

    pub fn statistics(&self) -> Statistics {
        self.basis.statistics
    }

    /// `H_L = H0 + V_L`, generally non-Hermitian.
    pub fn h_l(&self) -> Operator<T> {
        let mut h = self.v_l.clone();
        for i in 0..self.dim() {
            h[(i, i)] += c(self.h0[i]);
        }
        h
    }

    pub fn h_l_spectrum(&self) -> &[Complex<T>] {
        &self.hl_spectrum
    }

    /// `a†_{l1} a†_{l2} |0⟩`.
    pub fn creation(&self, l1: usize, l2: usize) -> &CVector<T> {
        &self.creation[l1 * self.modes() + l2]
    }

    /// Reads a pair-space matrix `X` as a two-body tensor,
    /// `W_{l1 l2 f2 f1} = ½ ⟨0| a_{l2} a_{l1} X a†_{f1} a†_{f2} |0⟩`, so that
    /// `½ Σ W a†a†aa` restricted to two particles is `X`.
    pub fn pair_to_tensor(&self, x: &Operator<T>) -> InteractionTensor<T> {
        let half = c(T::lit(0.5));
        InteractionTensor::from_fn(self.modes(), |l1, l2, f2, f1| {
            self.creation(l1, l2).dotc(&(x * self.creation(f1, f2))) * half
        })
    }

    /// Same as [`Self::pair_to_tensor`] with the matrix chosen per column pair
    /// `(f1, f2)` through its pair-state index.
    pub(crate) fn pair_to_tensor_by_column(&self, x: impl Fn(usize) -> Operator<T>) -> InteractionTensor<T> {
        let m = self.modes();
        let cols: Vec<Option<CVector<T>>> = (0..m * m)
            .map(|i| {
                let (f1, f2) = (i / m, i % m);
                let v = self.creation(f1, f2);
                if v.iter().all(|z| z.re == T::zero() && z.im == T::zero()) {
                    return None;
                }
                Some(x(self.pair_index(f1, f2)) * v)
            })
            .collect();
        let half = c(T::lit(0.5));
        InteractionTensor::from_fn(m, |l1, l2, f2, f1| match &cols[f1 * m + f2] {
            Some(col) => self.creation(l1, l2).dotc(col) * half,
            None => c(T::zero()),
        })
    }

    /// Pair-state index holding modes `f1, f2` in either order.
    pub fn pair_index(&self, f1: usize, f2: usize) -> usize {
        let key = (f1.min(f2), f1.max(f2));
        self.pairs.iter().position(|&p| p == key).expect("pair present")
    }
}

/// Builds the two-particle space for mean occupations `n̄`.
pub fn build_two_particle_space<T: Real>(
    basis: &ModeBasis<T>,
    tensor: &InteractionTensor<T>,
    occupations: &[T],
) -> Result<TwoParticleSpace<T>> {
    let m = basis.mode_count;
    if tensor.modes() != m || occupations.len() != m {
        return Err(Error::InvalidArgument(format!(
            "expected {m} modes, got tensor {} and {} occupations",
            tensor.modes(),
            occupations.len()
        )));
    }
    for (l, &n) in occupations.iter().enumerate() {
        if !(n >= T::zero()) || !n.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "occupation of mode {l} must be ≥ 0, got {n}"
            )));
        }
        if basis.statistics == Statistics::Fermi && n > T::one() {
            return Err(Error::InvalidArgument(format!(
                "fermion occupation of mode {l} exceeds 1: {n}"
            )));
        }
    }
    if basis.statistics == Statistics::Fermi && m < 2 {
        return Err(Error::InvalidArgument("fermion pairs need at least two modes".into()));
    }
    let fock = FockSpace::new(basis.clone(), 2)?;
    let sector = fock.sector(2);
    let dim = sector.len();
    let pairs: Vec<(usize, usize)> = sector
        .clone()
        .map(|i| {
            let occ = fock.state(i);
            let mut modes = occ
                .iter()
                .enumerate()
                .flat_map(|(l, &n)| std::iter::repeat_n(l, n as usize));
            (modes.next().unwrap(), modes.next().unwrap())
        })
        .collect();
    let h0 = DVector::from_iterator(dim, pairs.iter().map(|&(a, b)| basis.energies[a] + basis.energies[b]));
    let v_full = two_body_operator(&fock, tensor, T::lit(0.5));
    let v = v_full.view((sector.start, sector.start), (dim, dim)).into_owned();

    let s: T = basis.statistics.sign();
    let pauli: Vec<T> = pairs
        .iter()
        .map(|&(a, b)| T::one() + s * occupations[a] + s * occupations[b])
        .collect();
    let mut v_l = v.clone();
    for (i, &p) in pauli.iter().enumerate() {
        v_l.row_mut(i).scale_mut(p);
    }

    let mut creation = Vec::with_capacity(m * m);
    for l1 in 0..m {
        for l2 in 0..m {
            let mut vec = CVector::zeros(dim);
            let mut occ = vec![0u8; m];
            let amp = fock
                .create_in_place(&mut occ, l2)
                .and_then(|a2| fock.create_in_place(&mut occ, l1).map(|a1| a1 * a2));
            if let Some(a) = amp {
                vec[fock.index_of(&occ).unwrap() - sector.start] = c(a);
            }
            creation.push(vec);
        }
    }

    let mut out = TwoParticleSpace {
        basis: basis.clone(),
        pairs,
        h0,
        v,
        occupations: occupations.to_vec(),
        pauli,
        v_l,
        hl_spectrum: Vec::new(),
        creation,
    };
    out.hl_spectrum = spectrum(&out.h_l())?;
    Ok(out)
}

/// Eigenvalues of a general complex matrix from its (triangular) Schur form.
pub fn spectrum<T: Real>(a: &Operator<T>) -> Result<Vec<Complex<T>>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::numeric("schur", "QR iteration did not converge"))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}
