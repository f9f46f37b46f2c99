// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    /// `λ exp(-r²/2r₀²)`
    Gaussian,
    /// Unit-area gaussian of width `r₀` times `λ`, standing in for `λ δ(r)`.
    Contact,
    /// `λ exp(-r/r₀)`
    Screened,
}

/// Real, even two-body potential `V(|r|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potential<T: Real> {
    pub kind: PotentialKind,
    pub strength: T,
    pub range: T,
}

impl<T: Real> Potential<T> {
    pub fn new(kind: PotentialKind, strength: T, range: T) -> Result<Self> {
        if !(range > T::zero()) || !range.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "potential range must be positive, got {range}"
            )));
        }
        if !strength.is_finite() {
            return Err(Error::InvalidArgument("potential strength must be finite".into()));
        }
        Ok(Self { kind, strength, range })
    }

    pub fn eval(&self, r: T) -> T {
        let r = r.abs();
        let r0 = self.range;
        match self.kind {
            PotentialKind::Gaussian => self.strength * (-(r * r) / (T::lit(2.0) * r0 * r0)).exp(),
            PotentialKind::Contact => {
                let norm = T::one() / ((T::two_pi()).sqrt() * r0);
                self.strength * norm * (-(r * r) / (T::lit(2.0) * r0 * r0)).exp()
            }
            PotentialKind::Screened => self.strength * (-r / r0).exp(),
        }
    }

    /// Distance beyond which the potential is below double-precision
    /// relevance; used to place quadrature breakpoints.
    pub fn reach(&self) -> T {
        match self.kind {
            PotentialKind::Gaussian | PotentialKind::Contact => T::lit(9.0) * self.range,
            PotentialKind::Screened => T::lit(37.0) * self.range,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.strength == T::zero()
    }
}
