// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex;

use super::potential::Potential;
use super::quadrature::{breakpoints, Rule};
use crate::error::{Error, Result};
use crate::fock::ModeBasis;
use crate::scalar::{c, cabs, Real};

/// Two-body matrix elements `V_{l1 l2 f2 f1}`, the coefficient of
/// `a†_{l1} a†_{l2} a_{f2} a_{f1}` (times ½ in the Hamiltonian).
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTensor<T: Real> {
    modes: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> InteractionTensor<T> {
    pub fn zeros(modes: usize) -> Self {
        Self {
            modes,
            data: vec![c(T::zero()); modes.pow(4)],
        }
    }

    pub fn from_fn(modes: usize, mut f: impl FnMut(usize, usize, usize, usize) -> Complex<T>) -> Self {
        let mut t = Self::zeros(modes);
        for l1 in 0..modes {
            for l2 in 0..modes {
                for f2 in 0..modes {
                    for f1 in 0..modes {
                        t.set(l1, l2, f2, f1, f(l1, l2, f2, f1));
                    }
                }
            }
        }
        t
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    #[inline]
    fn offset(&self, l1: usize, l2: usize, f2: usize, f1: usize) -> usize {
        ((l1 * self.modes + l2) * self.modes + f2) * self.modes + f1
    }

    #[inline]
    pub fn get(&self, l1: usize, l2: usize, f2: usize, f1: usize) -> Complex<T> {
        self.data[self.offset(l1, l2, f2, f1)]
    }

    #[inline]
    pub fn set(&mut self, l1: usize, l2: usize, f2: usize, f1: usize, v: Complex<T>) {
        let o = self.offset(l1, l2, f2, f1);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(cabs(*z)))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            modes: self.modes,
            data: self.data.iter().map(|z| *z * c(s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.modes, other.modes);
        Self {
            modes: self.modes,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-T::one()))
    }

    /// Largest violation of `V_{l1l2f2f1} = V_{l2l1f1f2}` and
    /// `V_{l1l2f2f1} = conj(V_{f1f2l2l1})`.
    pub fn symmetry_defect(&self) -> T {
        let m = self.modes;
        let mut worst = T::zero();
        for l1 in 0..m {
            for l2 in 0..m {
                for f2 in 0..m {
                    for f1 in 0..m {
                        let v = self.get(l1, l2, f2, f1);
                        worst = worst.max(cabs(v - self.get(l2, l1, f1, f2)));
                        worst = worst.max(cabs(v - self.get(f1, f2, l2, l1).conj()));
                    }
                }
            }
        }
        worst
    }

    /// Averages over the exchange/adjoint orbit so both symmetries hold
    /// exactly; returns the defect measured beforehand.
    pub fn symmetrize(&mut self) -> T {
        let defect = self.symmetry_defect();
        let old = self.clone();
        let quarter = c(T::lit(0.25));
        for l1 in 0..self.modes {
            for l2 in 0..self.modes {
                for f2 in 0..self.modes {
                    for f1 in 0..self.modes {
                        let v = old.get(l1, l2, f2, f1)
                            + old.get(l2, l1, f1, f2)
                            + old.get(f1, f2, l2, l1).conj()
                            + old.get(f2, f1, l1, l2).conj();
                        self.set(l1, l2, f2, f1, v * quarter);
                    }
                }
            }
        }
        defect
    }
}

/// Result of [`interaction_tensor`]: the symmetrized tensor plus the two
/// accuracy diagnostics.
#[derive(Clone, Debug)]
pub struct TensorBuild<T: Real> {
    pub tensor: InteractionTensor<T>,
    /// Symmetry defect of the raw quadrature output, before averaging.
    pub symmetry_defect: T,
    /// Relative change between the requested order and a 1.5× finer rule.
    pub quadrature_defect: T,
    pub order: usize,
}

pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// `V_{l1l2f2f1} = ∫∫ u_{l1}(x) u_{l2}(y) V(|x-y|) u_{f2}(y) u_{f1}(x) dx dy`.
///
/// Outer integral: composite Gauss–Legendre over `max(2, M)` panels. Inner
/// integral: split at `x` and `x ± reach` so kinks and narrow potentials sit
/// on panel edges. The accuracy estimate compares against `1.5 × order`;
/// the finer result is returned.
pub fn interaction_tensor<T: Real>(
    basis: &ModeBasis<T>,
    potential: &Potential<T>,
    quad_order: usize,
) -> Result<TensorBuild<T>> {
    let m = basis.mode_count;
    if quad_order < 2 * m {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {quad_order} below 2M = {}",
            2 * m
        )));
    }
    if potential.is_zero() {
        return Ok(TensorBuild {
            tensor: InteractionTensor::zeros(m),
            symmetry_defect: T::zero(),
            quadrature_defect: T::zero(),
            order: quad_order,
        });
    }
    let fine_order = quad_order + (quad_order / 2).max(1);
    let coarse = raw_tensor(basis, potential, quad_order);
    let mut fine = raw_tensor(basis, potential, fine_order);
    let scale = fine.max_abs();
    let quadrature_defect = if scale > T::zero() {
        coarse.sub(&fine).max_abs() / scale
    } else {
        T::zero()
    };
    if quadrature_defect > T::lit(QUADRATURE_TOLERANCE) {
        return Err(Error::Accuracy {
            defect: quadrature_defect.as_f64(),
            order: quad_order,
            suggested: 2 * quad_order,
        });
    }
    let symmetry_defect = fine.symmetrize();
    Ok(TensorBuild {
        tensor: fine,
        symmetry_defect,
        quadrature_defect,
        order: fine_order,
    })
}

fn raw_tensor<T: Real>(basis: &ModeBasis<T>, potential: &Potential<T>, order: usize) -> InteractionTensor<T> {
    let m = basis.mode_count;
    let l = basis.box_length;
    let rule = Rule::<T>::new(order);
    let panels = m.max(2);
    let outer_breaks: Vec<T> = (0..=panels)
        .map(|i| l * T::from_usize_lossy(i) / T::from_usize_lossy(panels))
        .collect();
    let w = potential.reach().min(l);
    let mut out = InteractionTensor::zeros(m);
    let mut ux = vec![T::zero(); m];
    let mut uy = vec![T::zero(); m];
    let mut inner = vec![T::zero(); m * m];
    for (x, wx) in rule.composite(&outer_breaks) {
        for (f, u) in ux.iter_mut().enumerate() {
            *u = basis.mode_function(f, x);
        }
        inner.iter_mut().for_each(|b| *b = T::zero());
        let ybreaks = breakpoints(T::zero(), l, &[x - w, x, x + w]);
        for (y, wy) in rule.composite(&ybreaks) {
            let v = wy * potential.eval(x - y);
            for (f, u) in uy.iter_mut().enumerate() {
                *u = basis.mode_function(f, y);
            }
            for b in 0..m {
                for cc in b..m {
                    inner[b * m + cc] += v * uy[b] * uy[cc];
                }
            }
        }
        for b in 0..m {
            for cc in 0..b {
                inner[b * m + cc] = inner[cc * m + b];
            }
        }
        for l1 in 0..m {
            for f1 in 0..m {
                let wxx = wx * ux[l1] * ux[f1];
                for l2 in 0..m {
                    for f2 in 0..m {
                        let o = out.offset(l1, l2, f2, f1);
                        out.data[o].re += wxx * inner[l2 * m + f2];
                    }
                }
            }
        }
    }
    out
}
