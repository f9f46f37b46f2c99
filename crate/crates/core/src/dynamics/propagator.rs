// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::fock::linalg::{expect, HermitianEigen};
use crate::scalar::{c, polar, Operator, Real};

/// Exact unitary evolution `e^{-iHt/ħ}` from a cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct Propagator<T: Real> {
    pub eigen: HermitianEigen<T>,
    pub hbar: T,
}

impl<T: Real> Propagator<T> {
    pub fn new(h: &Operator<T>, hbar: T) -> Self {
        Self {
            eigen: HermitianEigen::new(h),
            hbar,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    /// `U(t) = e^{-iHt/ħ}`.
    pub fn unitary(&self, t: T) -> Operator<T> {
        let hbar = self.hbar;
        self.eigen.map(|e| polar(T::one(), -e * t / hbar))
    }

    /// `U ρ U†`.
    pub fn evolve_state(&self, rho: &Operator<T>, t: T) -> Operator<T> {
        self.rotate(rho, t, false)
    }

    /// Heisenberg picture `U† A U`.
    pub fn heisenberg(&self, a: &Operator<T>, t: T) -> Operator<T> {
        self.rotate(a, t, true)
    }

    fn rotate(&self, a: &Operator<T>, t: T, heisenberg: bool) -> Operator<T> {
        let n = self.dim();
        let mut x = self.eigen.to_eigenbasis(a);
        let sign = if heisenberg { T::one() } else { -T::one() };
        for i in 0..n {
            for j in 0..n {
                let w = (self.eigen.values[i] - self.eigen.values[j]) * t * sign / self.hbar;
                x[(i, j)] *= polar(T::one(), w);
            }
        }
        self.eigen.from_eigenbasis(&x)
    }
}

/// `e^{-iHt/ħ} ρ e^{iHt/ħ}`.
pub fn unitary_evolve<T: Real>(rho: &Operator<T>, h: &Operator<T>, hbar: T, t: T) -> Operator<T> {
    Propagator::new(h, hbar).evolve_state(rho, t)
}

/// Relative tolerance on `|C(τ)|/|C(0)|` for calling a return a recurrence.
pub const RECURRENCE_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub lags: Vec<f64>,
    pub values: Vec<(f64, f64)>,
    /// First lag with `|C| ≤ e⁻¹ |C(0)|`.
    pub tau_c: Option<f64>,
    /// First lag after `tau_c` with `|C| ≥ (1 − 10⁻³)|C(0)|`.
    pub recurrence_time: Option<f64>,
}

impl CorrelationSeries {
    pub fn from_values(lags: Vec<f64>, values: Vec<(f64, f64)>) -> Self {
        let mag = |v: &(f64, f64)| v.0.hypot(v.1);
        let c0 = values.first().map(mag).unwrap_or(0.0);
        let mut tau_c = None;
        let mut recurrence_time = None;
        if c0 > 0.0 {
            for (i, v) in values.iter().enumerate() {
                let m = mag(v);
                if tau_c.is_none() {
                    if m <= (-1.0f64).exp() * c0 {
                        tau_c = Some(lags[i]);
                    }
                } else if m >= (1.0 - RECURRENCE_TOLERANCE) * c0 {
                    recurrence_time = Some(lags[i]);
                    break;
                }
            }
        }
        Self {
            lags,
            values,
            tau_c,
            recurrence_time,
        }
    }

    /// Whitespace-separated `τ Re Im` rows.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# tau re im\n");
        for (t, (re, im)) in self.lags.iter().zip(&self.values) {
            s.push_str(&format!("{t:e} {re:e} {im:e}\n"));
        }
        s
    }
}

/// `C(τ) = Tr(A B(τ) ρ)` with `B(τ)` Heisenberg-evolved. With `connected`,
/// `⟨A⟩⟨B⟩` is subtracted.
pub fn correlation<T: Real>(
    prop: &Propagator<T>,
    rho: &Operator<T>,
    a: &Operator<T>,
    b: &Operator<T>,
    lags: &[T],
    connected: bool,
) -> CorrelationSeries {
    let n = prop.dim();
    let bt = prop.eigen.to_eigenbasis(b);
    let xt = prop.eigen.to_eigenbasis(&(rho * a));
    let shift = if connected {
        c(expect(a, rho) * expect(b, rho))
    } else {
        c(T::zero())
    };
    let values = lags
        .iter()
        .map(|&tau| {
            let mut sum = Complex::new(T::zero(), T::zero());
            for i in 0..n {
                for j in 0..n {
                    let w = (prop.eigen.values[i] - prop.eigen.values[j]) * tau / prop.hbar;
                    sum += bt[(i, j)] * xt[(j, i)] * polar(T::one(), w);
                }
            }
            let v = sum - shift;
            (v.re.as_f64(), v.im.as_f64())
        })
        .collect();
    CorrelationSeries::from_values(lags.iter().map(|t| t.as_f64()).collect(), values)
}

/// Period of exact recurrence when every level is an integer multiple of
/// `unit` (within `tol` relative): `2πħ / (unit · g)` with `g` the gcd of
/// all level differences. `None` if the spectrum is not commensurate.
pub fn commensurate_period<T: Real>(levels: &[T], unit: T, hbar: T, tol: T) -> Option<T> {
    let base = *levels.first()?;
    let mut g: u64 = 0;
    for &e in levels {
        let x = (e - base) / unit;
        let k = x.round();
        if (x - k).abs() > tol {
            return None;
        }
        g = gcd(g, k.abs().to_u64()?);
    }
    if g == 0 {
        return None;
    }
    Some(T::two_pi() * hbar / (unit * T::from_u64(g)?))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest `|C(τ)|/|C(0)|` over the lags where `C` has already fallen below
/// `e⁻¹|C(0)|` at least once (0 if it never does).
pub fn max_return_after_decay(series: &CorrelationSeries) -> f64 {
    let mag = |v: &(f64, f64)| v.0.hypot(v.1);
    let c0 = series.values.first().map(mag).unwrap_or(0.0);
    let Some(tc) = series.tau_c else { return 0.0 };
    series
        .lags
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= tc)
        .map(|(_, v)| mag(v) / c0)
        .fold(0.0, f64::max)
}
