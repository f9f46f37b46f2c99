// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::ops::Range;

use num_complex::Complex;

use super::basis::{ModeBasis, Statistics};
use crate::error::{Error, Result};
use crate::scalar::{c, CVector, Operator, Real};

/// Occupation numbers, one entry per mode.
pub type Occupation = Vec<u8>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderKind {
    Annihilate,
    Create,
}

/// Occupation-number basis over all particle-number sectors `0..=N_max`.
///
/// Within a sector, states are listed in descending lexicographic order of
/// the occupation vector (mode 0 most occupied first). The order is a pure
/// function of `(M, N_max, statistics)`.
#[derive(Clone, Debug)]
pub struct FockSpace<T: Real> {
    pub basis: ModeBasis<T>,
    pub max_total: usize,
    states: Vec<Occupation>,
    sectors: Vec<Range<usize>>,
    index: HashMap<Occupation, usize>,
}

impl<T: Real> FockSpace<T> {
    pub fn new(basis: ModeBasis<T>, max_total: usize) -> Result<Self> {
        let m = basis.mode_count;
        if basis.statistics == Statistics::Fermi && max_total > m {
            return Err(Error::Infeasible(format!(
                "Pauli exclusion: {max_total} fermions do not fit in {m} modes"
            )));
        }
        if max_total > u8::MAX as usize {
            return Err(Error::InvalidArgument("particle cutoff too large".into()));
        }
        let cap = match basis.statistics {
            Statistics::Bose => max_total as u8,
            Statistics::Fermi => 1,
        };
        let mut states = Vec::new();
        let mut sectors = Vec::with_capacity(max_total + 1);
        for n in 0..=max_total {
            let start = states.len();
            let mut occ = vec![0u8; m];
            enumerate(&mut occ, 0, n as u8, cap, &mut states);
            sectors.push(start..states.len());
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self {
            basis,
            max_total,
            states,
            sectors,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn modes(&self) -> usize {
        self.basis.mode_count
    }

    pub fn statistics(&self) -> Statistics {
        self.basis.statistics
    }

    pub fn sector_dims(&self) -> Vec<usize> {
        self.sectors.iter().map(|r| r.len()).collect()
    }

    pub fn sector(&self, n: usize) -> Range<usize> {
        self.sectors[n].clone()
    }

    pub fn state(&self, i: usize) -> &Occupation {
        &self.states[i]
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    pub fn basis_vector(&self, i: usize) -> CVector<T> {
        let mut v = CVector::zeros(self.dim());
        v[i] = c(T::one());
        v
    }

    /// Applies `a_f` to an occupation vector in place; returns the amplitude
    /// (`√n_f` for bosons, Jordan–Wigner sign for fermions) or `None` if the
    /// result vanishes.
    pub fn annihilate_in_place(&self, occ: &mut [u8], f: usize) -> Option<T> {
        let n = occ[f];
        if n == 0 {
            return None;
        }
        let amp = match self.basis.statistics {
            Statistics::Bose => T::from_u8(n).unwrap().sqrt(),
            Statistics::Fermi => jordan_wigner_sign(occ, f),
        };
        occ[f] = n - 1;
        Some(amp)
    }

    /// Applies `a_f†` in place. Does not check the particle cutoff; callers
    /// look the result up with [`FockSpace::index_of`].
    pub fn create_in_place(&self, occ: &mut [u8], f: usize) -> Option<T> {
        let n = occ[f];
        let amp = match self.basis.statistics {
            Statistics::Bose => T::from_u8(n + 1).unwrap().sqrt(),
            Statistics::Fermi => {
                if n == 1 {
                    return None;
                }
                jordan_wigner_sign(occ, f)
            }
        };
        occ[f] = n + 1;
        Some(amp)
    }

    pub fn ladder(&self, f: usize, kind: LadderKind) -> Operator<T> {
        assert!(f < self.modes(), "mode index {f} out of range");
        let d = self.dim();
        let mut a = Operator::zeros(d, d);
        let mut occ = vec![0u8; self.modes()];
        for (src, s) in self.states.iter().enumerate() {
            occ.copy_from_slice(s);
            if let Some(amp) = self.annihilate_in_place(&mut occ, f) {
                let dst = self.index[&occ];
                a[(dst, src)] = c(amp);
            }
        }
        match kind {
            LadderKind::Annihilate => a,
            LadderKind::Create => a.adjoint(),
        }
    }

    pub fn annihilator(&self, f: usize) -> Operator<T> {
        self.ladder(f, LadderKind::Annihilate)
    }

    pub fn creator(&self, f: usize) -> Operator<T> {
        self.ladder(f, LadderKind::Create)
    }

    pub fn number(&self, f: usize) -> Operator<T> {
        let d = self.dim();
        Operator::from_fn(d, d, |i, j| {
            if i == j {
                c(T::from_u8(self.states[i][f]).unwrap())
            } else {
                c(T::zero())
            }
        })
    }

    pub fn total_number(&self) -> Operator<T> {
        let d = self.dim();
        Operator::from_fn(d, d, |i, j| {
            if i == j {
                c(T::from_usize_lossy(self.particle_number(i)))
            } else {
                c(T::zero())
            }
        })
    }

    /// Projector onto the `n`-particle sector.
    pub fn sector_projector(&self, n: usize) -> Operator<T> {
        let d = self.dim();
        let r = self.sector(n);
        Operator::from_fn(d, d, |i, j| {
            if i == j && r.contains(&i) {
                c(T::one())
            } else {
                c(T::zero())
            }
        })
    }

    /// `Σ_{hk} coeff(h,k) a_h† a_k`.
    pub fn one_body(&self, coeff: impl Fn(usize, usize) -> Complex<T>) -> Operator<T> {
        let m = self.modes();
        let table: Vec<Complex<T>> = (0..m * m).map(|i| coeff(i / m, i % m)).collect();
        let d = self.dim();
        let mut op = Operator::zeros(d, d);
        let mut mid = vec![0u8; m];
        let mut out = vec![0u8; m];
        for (src, s) in self.states.iter().enumerate() {
            for k in 0..m {
                mid.copy_from_slice(s);
                let Some(ak) = self.annihilate_in_place(&mut mid, k) else {
                    continue;
                };
                for h in 0..m {
                    let w = table[h * m + k];
                    if w.re == T::zero() && w.im == T::zero() {
                        continue;
                    }
                    out.copy_from_slice(&mid);
                    let Some(ah) = self.create_in_place(&mut out, h) else {
                        continue;
                    };
                    if let Some(&dst) = self.index.get(&out) {
                        op[(dst, src)] += w * c(ak * ah);
                    }
                }
            }
        }
        op
    }

    /// `Σ coeff(l1,l2,f2,f1, spectators) a_{l1}† a_{l2}† a_{f2} a_{f1}`.
    ///
    /// `spectators` is the occupation left after the two annihilations, so
    /// coefficients that are functions of the number operators sitting
    /// between creators and annihilators can be evaluated exactly.
    pub fn two_body(&self, coeff: impl Fn(usize, usize, usize, usize, &[u8]) -> Complex<T>) -> Operator<T> {
        let m = self.modes();
        let d = self.dim();
        let mut op = Operator::zeros(d, d);
        let mut mid1 = vec![0u8; m];
        let mut mid2 = vec![0u8; m];
        let mut up1 = vec![0u8; m];
        let mut up2 = vec![0u8; m];
        for (src, s) in self.states.iter().enumerate() {
            for f1 in 0..m {
                mid1.copy_from_slice(s);
                let Some(a1) = self.annihilate_in_place(&mut mid1, f1) else {
                    continue;
                };
                for f2 in 0..m {
                    mid2.copy_from_slice(&mid1);
                    let Some(a2) = self.annihilate_in_place(&mut mid2, f2) else {
                        continue;
                    };
                    for l2 in 0..m {
                        up1.copy_from_slice(&mid2);
                        let Some(c2) = self.create_in_place(&mut up1, l2) else {
                            continue;
                        };
                        for l1 in 0..m {
                            up2.copy_from_slice(&up1);
                            let Some(c1) = self.create_in_place(&mut up2, l1) else {
                                continue;
                            };
                            let Some(&dst) = self.index.get(&up2) else { continue };
                            let w = coeff(l1, l2, f2, f1, &mid2);
                            op[(dst, src)] += w * c(a1 * a2 * c1 * c2);
                        }
                    }
                }
            }
        }
        op
    }

    /// `Σ coeff(f2,f1, result) a_{f2} a_{f1}`, where `result` is the
    /// occupation the pair annihilation lands on. A coefficient that depends on
    /// `result` is an operator function of the number operators standing to
    /// the left of the pair.
    pub fn pair_annihilator(&self, coeff: impl Fn(usize, usize, &[u8]) -> Complex<T>) -> Operator<T> {
        let m = self.modes();
        let d = self.dim();
        let mut op = Operator::zeros(d, d);
        let mut mid1 = vec![0u8; m];
        let mut mid2 = vec![0u8; m];
        for (src, s) in self.states.iter().enumerate() {
            for f1 in 0..m {
                mid1.copy_from_slice(s);
                let Some(a1) = self.annihilate_in_place(&mut mid1, f1) else {
                    continue;
                };
                for f2 in 0..m {
                    mid2.copy_from_slice(&mid1);
                    let Some(a2) = self.annihilate_in_place(&mut mid2, f2) else {
                        continue;
                    };
                    let dst = self.index[&mid2];
                    op[(dst, src)] += coeff(f2, f1, &mid2) * c(a1 * a2);
                }
            }
        }
        op
    }
}

fn jordan_wigner_sign<T: Real>(occ: &[u8], f: usize) -> T {
    let parity: u32 = occ[..f].iter().map(|&n| n as u32).sum();
    if parity.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

fn enumerate(occ: &mut Vec<u8>, mode: usize, remaining: u8, cap: u8, out: &mut Vec<Occupation>) {
    if mode == occ.len() - 1 {
        if remaining <= cap {
            occ[mode] = remaining;
            out.push(occ.clone());
            occ[mode] = 0;
        }
        return;
    }
    for n in (0..=remaining.min(cap)).rev() {
        occ[mode] = n;
        enumerate(occ, mode + 1, remaining - n, cap, out);
    }
    occ[mode] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::{commutator, max_abs};
    use std::f64::consts::PI;

    fn space(m: usize, stats: Statistics, n: usize) -> FockSpace<f64> {
        FockSpace::new(ModeBasis::new(m, PI, 1.0, 1.0, stats).unwrap(), n).unwrap()
    }

    #[test]
    fn sector_dimensions() {
        assert_eq!(space(3, Statistics::Bose, 2).sector_dims(), vec![1, 3, 6]);
        assert_eq!(space(3, Statistics::Bose, 2).dim(), 10);
        assert_eq!(space(3, Statistics::Fermi, 2).sector_dims(), vec![1, 3, 3]);
        assert_eq!(space(3, Statistics::Fermi, 2).dim(), 7);
    }

    #[test]
    fn fermi_overfill_is_infeasible() {
        let b = ModeBasis::new(2, 1.0, 1.0, 1.0, Statistics::Fermi).unwrap();
        assert!(matches!(FockSpace::new(b, 3), Err(Error::Infeasible(_))));
    }

    #[test]
    fn ordering_is_lexicographic_and_stable() {
        let s = space(3, Statistics::Bose, 2);
        let sector2: Vec<_> = s.sector(2).map(|i| s.state(i).clone()).collect();
        assert_eq!(
            sector2,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
    }

    #[test]
    fn vacuum_matrix_element_and_nilpotency() {
        let s = space(2, Statistics::Bose, 2);
        let aa = s.annihilator(0) * s.creator(0);
        assert!((aa[(0, 0)].re - 1.0).abs() < 1e-15);
        let f = space(3, Statistics::Fermi, 3);
        let c0 = f.creator(0);
        assert_eq!(max_abs(&(&c0 * &c0)), 0.0);
    }

    #[test]
    fn distinct_mode_ccr_vanishes_below_cutoff() {
        let s = space(2, Statistics::Bose, 3);
        let comm = commutator(&s.annihilator(0), &s.creator(1));
        let below = s.sector(3).start;
        for j in 0..below {
            for i in 0..s.dim() {
                assert_eq!(comm[(i, j)].norm(), 0.0);
            }
        }
        // the top sector is where truncation must show up
        assert!(max_abs(&comm) > 1.0);
    }

    #[test]
    fn one_body_number_matches_diagonal_number() {
        let s = space(3, Statistics::Fermi, 2);
        let n1 = s.one_body(|h, k| if h == 1 && k == 1 { c(1.0) } else { c(0.0) });
        assert!(max_abs(&(n1 - s.number(1))) < 1e-15);
    }

    #[test]
    fn two_body_matches_ladder_products() {
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let s = space(3, stats, 3);
            let (l1, l2, f2, f1) = (0, 2, 1, 2);
            let direct = s.creator(l1) * s.creator(l2) * s.annihilator(f2) * s.annihilator(f1);
            let built = s.two_body(|a, b, cc, d, _| {
                if (a, b, cc, d) == (l1, l2, f2, f1) {
                    c(1.0)
                } else {
                    c(0.0)
                }
            });
            assert!(max_abs(&(direct - built)) < 1e-14);
        }
    }
}
