// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exchange statistics of the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bose,
    Fermi,
}

impl Statistics {
    /// `+1` for bosons, `-1` for fermions: the ± of (anti)commutators and of
    /// the Pauli factor `1 ± n ± n`.
    pub fn sign<T: Real>(self) -> T {
        match self {
            Statistics::Bose => T::one(),
            Statistics::Fermi => -T::one(),
        }
    }
}

/// Dirichlet box modes on `[0, L]`.
///
/// Mode indices are zero-based in code: index `f` is the standing wave with
/// `f + 1` half-wavelengths, `u_f(x) = √(2/L) sin((f+1)πx/L)`.
#[derive(Clone, Debug)]
pub struct ModeBasis<T: Real> {
    pub mode_count: usize,
    pub box_length: T,
    pub mass: T,
    pub hbar: T,
    pub statistics: Statistics,
    pub energies: Vec<T>,
}

impl<T: Real> ModeBasis<T> {
    pub fn new(mode_count: usize, box_length: T, mass: T, hbar: T, statistics: Statistics) -> Result<Self> {
        if mode_count == 0 {
            return Err(Error::InvalidArgument("mode count must be at least 1".into()));
        }
        for (name, v) in [("box length", box_length), ("mass", mass), ("hbar", hbar)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let energies = (0..mode_count)
            .map(|f| {
                let k = T::pi() * T::from_usize_lossy(f + 1) / box_length;
                hbar * hbar * k * k / (T::lit(2.0) * mass)
            })
            .collect();
        Ok(Self {
            mode_count,
            box_length,
            mass,
            hbar,
            statistics,
            energies,
        })
    }

    pub fn wavenumber(&self, f: usize) -> T {
        T::pi() * T::from_usize_lossy(f + 1) / self.box_length
    }

    pub fn mode_function(&self, f: usize, x: T) -> T {
        (T::lit(2.0) / self.box_length).sqrt() * (self.wavenumber(f) * x).sin()
    }

    pub fn mode_derivative(&self, f: usize, x: T) -> T {
        let k = self.wavenumber(f);
        (T::lit(2.0) / self.box_length).sqrt() * k * (k * x).cos()
    }

    /// Largest single-particle level spacing `E_M - E_1` (zero for one mode).
    pub fn bandwidth(&self) -> T {
        self.energies[self.mode_count - 1] - self.energies[0]
    }
}
