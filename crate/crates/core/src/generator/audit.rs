// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::operator::GeneratorL;
use crate::error::{Error, Result};
use crate::fock::linalg::{expect, max_abs, trace_product, HermitianEigen};
use crate::gibbs::GibbsState;
use crate::scalar::{c, cabs, ci, CVector, Operator, Real};

/// First-order validity window of the positivity audit: `t·‖L′‖ ≤ 0.1`.
pub const CP_STEP_FRACTION: f64 = 0.1;
pub const CP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CpViolation {
    pub trial: usize,
    pub value: f64,
    /// The offending family `{ψ_h}` as `(re, im)` components.
    pub family: Vec<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CpReport {
    pub trials: usize,
    pub t: f64,
    pub seed: u64,
    pub min_form: f64,
    /// Smallest form among families with `Σ a_k ψ_k = 0`, where only the
    /// first-order term survives.
    pub min_form_null_families: f64,
    pub max_imaginary_part: f64,
    pub violations: Vec<CpViolation>,
}

impl CpReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

fn gaussian_vector<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> CVector<T> {
    CVector::from_fn(d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        ci(T::lit(re), T::lit(im))
    })
}

/// Removes from `{ψ_k}` the component outside the kernel of
/// `{ψ_k} ↦ Σ_k a_k ψ_k`.
fn project_to_null_family<T: Real>(gen: &GeneratorL<T>, family: &mut [CVector<T>]) {
    let d = gen.dim();
    let m = gen.modes();
    let mut gram = Operator::zeros(d, d);
    for k in 0..m {
        gram += gen.annihilator(k) * gen.annihilator(k).adjoint();
    }
    let eig = HermitianEigen::new(&gram);
    let top = eig.values.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let cut = top * T::lit(1e-12);
    let pinv = eig.map(|x| if x > cut { c(T::one() / x) } else { c(T::zero()) });
    let mut image = CVector::zeros(d);
    for (k, psi) in family.iter().enumerate().take(m) {
        image += gen.annihilator(k) * psi;
    }
    let w = pinv * image;
    for (k, psi) in family.iter_mut().enumerate().take(m) {
        *psi -= gen.annihilator(k).adjoint() * &w;
    }
}

fn quadratic_form<T: Real>(gen: &GeneratorL<T>, family: &[CVector<T>], t: T) -> Complex<T> {
    let m = gen.modes();
    let mut q = c(T::zero());
    for h in 0..m {
        for k in 0..m {
            let x = gen.bilinear(h, k) + gen.action(h, k) * c(t);
            q += family[h].dotc(&(x * &family[k]));
        }
    }
    q
}

/// Randomized audit of `Σ_{hk} ⟨ψ_h|(a_h†a_k + t L′(a_h†a_k))|ψ_k⟩ ≥ 0`.
///
/// `t` defaults to the edge of the first-order window. Odd trials are
/// projected onto families with `Σ_k a_k ψ_k = 0`, where the zeroth-order
/// term vanishes and the sign is decided by the generator alone.
pub fn check_relative_cp<T: Real>(gen: &GeneratorL<T>, t: Option<T>, trials: usize, seed: u64) -> Result<CpReport> {
    let norm = gen.norm();
    let t = match t {
        Some(t) => {
            if t < T::zero() || t * norm > T::lit(CP_STEP_FRACTION * (1.0 + 1e-12)) {
                return Err(Error::InvalidArgument(format!(
                    "t = {t} outside the first-order window t·‖L′‖ ≤ {CP_STEP_FRACTION}"
                )));
            }
            t
        }
        None if norm > T::zero() => T::lit(CP_STEP_FRACTION) / norm,
        None => T::zero(),
    };
    let d = gen.dim();
    let m = gen.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CpReport {
        trials,
        t: t.as_f64(),
        seed,
        min_form: f64::INFINITY,
        min_form_null_families: f64::INFINITY,
        max_imaginary_part: 0.0,
        violations: Vec::new(),
    };
    for trial in 0..trials {
        let mut family: Vec<CVector<T>> = (0..m).map(|_| gaussian_vector(d, &mut rng)).collect();
        let null = trial % 2 == 1;
        if null {
            project_to_null_family(gen, &mut family);
        }
        let total: T = family.iter().map(|v| v.norm_squared()).fold(T::zero(), |a, b| a + b);
        if total > T::zero() {
            let s = c(T::one() / total.sqrt());
            family.iter_mut().for_each(|v| *v *= s);
        }
        let q = quadratic_form(gen, &family, t);
        let value = q.re.as_f64();
        report.min_form = report.min_form.min(value);
        if null {
            report.min_form_null_families = report.min_form_null_families.min(value);
        }
        report.max_imaginary_part = report.max_imaginary_part.max(q.im.as_f64().abs());
        if value < -CP_TOLERANCE {
            report.violations.push(CpViolation {
                trial,
                value,
                family: family
                    .iter()
                    .map(|v| v.iter().map(|z| (z.re.as_f64(), z.im.as_f64())).collect())
                    .collect(),
            });
        }
    }
    Ok(report)
}

/// Largest entry of `L′(n_h) − (i/ħ)[H_eff, n_h] − (gain − loss)` over modes.
pub fn gain_loss_identity_defect<T: Real>(gen: &GeneratorL<T>) -> T {
    let i_over_hbar = ci(T::zero(), T::one() / gen.hbar);
    (0..gen.modes())
        .map(|h| {
            let n = gen.bilinear(h, h);
            let free = (&gen.h_eff * &n - &n * &gen.h_eff) * i_over_hbar;
            let (gain, loss) = gen.gain_loss_split(h);
            max_abs(&(gen.action(h, h) - free - gain + loss))
        })
        .fold(T::zero(), |a, b| a.max(b))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationarityReport {
    pub beta: f64,
    pub mu: f64,
    /// `|Tr(L′(n_h) ρ_eq)|` per mode.
    pub residuals: Vec<f64>,
    pub gain: Vec<f64>,
    pub loss: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub stationary: bool,
}

fn stationarity_report<T: Real>(
    gen: &GeneratorL<T>,
    rho: &Operator<T>,
    beta: f64,
    mu: f64,
    tol: f64,
) -> StationarityReport {
    let mut residuals = Vec::new();
    let mut gain = Vec::new();
    let mut loss = Vec::new();
    for h in 0..gen.modes() {
        residuals.push(cabs(trace_product(gen.action(h, h), rho)).as_f64());
        let (g, l) = gen.gain_loss_split(h);
        gain.push(expect(&g, rho).as_f64());
        loss.push(expect(&l, rho).as_f64());
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    StationarityReport {
        beta,
        mu,
        residuals,
        gain,
        loss,
        max_residual,
        tolerance: tol,
        stationary: max_residual <= tol,
    }
}

/// Residual `|Tr(L′(n_h) ρ_eq)|` in the global equilibrium
/// `ρ_eq ∝ exp(−β(H_eff − μ M̂))`.
pub fn stationarity_at_equilibrium<T: Real>(
    gen: &GeneratorL<T>,
    beta: T,
    mu: T,
    tol: f64,
) -> Result<StationarityReport> {
    let mass = gen.space.total_number() * c(gen.space.basis.mass);
    let k = (&gen.h_eff - mass * c(mu)) * c(beta);
    let gs = GibbsState::from_exponent(k)?;
    Ok(stationarity_report(gen, &gs.rho, beta.as_f64(), mu.as_f64(), tol))
}

/// Same report in the infinite-temperature state of the `n`-particle sector.
pub fn stationarity_at_infinite_temperature<T: Real>(
    gen: &GeneratorL<T>,
    n: usize,
    tol: f64,
) -> Result<StationarityReport> {
    if n > gen.space.max_total {
        return Err(Error::InvalidArgument(format!("sector {n} above the particle cutoff")));
    }
    let p = gen.space.sector_projector(n);
    let dim = gen.space.sector(n).len();
    let rho = p * c(T::one() / T::from_usize_lossy(dim));
    Ok(stationarity_report(gen, &rho, 0.0, f64::NAN, tol))
}

/// `max_N |Tr(P_N L′(N̂)) ρ| / N`: first-order trace change of the
/// pre-adjoint evolution within each particle-number sector.
pub fn trace_preservation_defect<T: Real>(gen: &GeneratorL<T>, rho: &Operator<T>) -> T {
    let d = gen.dim();
    let mut ln = Operator::zeros(d, d);
    for h in 0..gen.modes() {
        ln += gen.action(h, h);
    }
    (1..=gen.space.max_total)
        .map(|n| {
            let p = gen.space.sector_projector(n);
            cabs(trace_product(&(&p * &ln * &p), rho)) / T::from_usize_lossy(n)
        })
        .fold(T::zero(), |a, b| a.max(b))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OraclePoint {
    pub t: f64,
    /// Largest `|⟨A + tL′A⟩ − ⟨A(t)⟩|` over surviving bilinears.
    pub max_abs_error: f64,
    /// The same divided by the largest `|⟨A(t)⟩ − ⟨A⟩|` (the actual change).
    pub relative_to_change: f64,
    /// The same divided by the largest `|⟨A(t)⟩|`.
    pub relative_to_value: f64,
}

/// First-order generator prediction against exact Heisenberg evolution
/// under `h` for the bilinears passing the slow filter.
pub fn oracle_comparison<T: Real>(
    gen: &GeneratorL<T>,
    h: &Operator<T>,
    rho: &Operator<T>,
    times: &[T],
) -> Vec<OraclePoint> {
    let eig = HermitianEigen::new(h);
    let m = gen.modes();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .filter(|&(a, b)| gen.is_slow(a, b))
        .collect();
    times
        .iter()
        .map(|&t| {
            let phase = |i: usize| {
                let theta = eig.values[i] * t / gen.hbar;
                ci(theta.cos(), -theta.sin())
            };
            let u = eig.map_by_index(phase);
            let mut err = T::zero();
            let mut change = T::zero();
            let mut value = T::zero();
            for &(a, b) in &pairs {
                let x = gen.bilinear(a, b);
                let now = trace_product(&x, rho);
                let exact = trace_product(&(u.adjoint() * &x * &u), rho);
                let approx = now + trace_product(gen.action(a, b), rho) * c(t);
                err = err.max(cabs(approx - exact));
                change = change.max(cabs(exact - now));
                value = value.max(cabs(exact));
            }
            let ratio = |a: T, b: T| if b > T::zero() { (a / b).as_f64() } else { a.as_f64() };
            OraclePoint {
                t: t.as_f64(),
                max_abs_error: err.as_f64(),
                relative_to_change: ratio(err, change),
                relative_to_value: ratio(err, value),
            }
        })
        .collect()
}
