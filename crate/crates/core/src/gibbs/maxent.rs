// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::state::{von_neumann_entropy, GibbsState};
use crate::fock::linalg::{identity, operator_norm, trace_product};
use crate::scalar::{c, Operator, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxEntropyReport {
    pub trials: usize,
    pub gibbs_entropy: f64,
    /// Largest `|dS/dt|` at `t = 0` along a constraint-preserving direction.
    pub max_first_order_slope: f64,
    /// Largest `S(candidate) - S(gibbs)`; non-positive when the Gibbs state
    /// is the maximizer.
    pub max_entropy_excess: f64,
    /// Largest constraint violation among the candidates.
    pub max_constraint_drift: f64,
}

impl MaxEntropyReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_entropy_excess <= tol && self.max_first_order_slope <= 1e-8
    }
}

/// Compares the Gibbs entropy with random states carrying the same
/// constraint expectations.
///
/// Each candidate is `ρ + tX` with `X` a random Hermitian matrix made
/// Hilbert–Schmidt orthogonal to the identity and every constraint, and `t`
/// half the largest step that keeps the candidate positive.
pub fn check_max_entropy<T: Real>(
    gs: &GibbsState<T>,
    constraints: &[&Operator<T>],
    trials: usize,
    seed: u64,
) -> MaxEntropyReport {
    let d = gs.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = identity::<T>(d);
    let mut basis: Vec<Operator<T>> = Vec::new();
    for g in std::iter::once(&id).chain(constraints.iter().copied()) {
        if let Some(e) = orthonormalize(g, &basis) {
            basis.push(e);
        }
    }
    let s0 = gs.entropy();
    let log_rho = gs.log_rho();
    let pmin = gs.weights.iter().copied().fold(T::one(), |a, b| a.min(b));
    let mut report = MaxEntropyReport {
        trials,
        gibbs_entropy: s0.as_f64(),
        max_first_order_slope: 0.0,
        max_entropy_excess: f64::NEG_INFINITY,
        max_constraint_drift: 0.0,
    };
    for _ in 0..trials {
        let raw = Operator::<T>::from_fn(d, d, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            num_complex::Complex::new(T::lit(re), T::lit(im))
        });
        let herm = (&raw + raw.adjoint()) * c(T::lit(0.5));
        let Some(x) = orthonormalize(&herm, &basis) else {
            continue;
        };
        report.max_first_order_slope = report
            .max_first_order_slope
            .max(trace_product(&x, &log_rho).re.abs().as_f64());
        let t = T::lit(0.5) * pmin / operator_norm(&x);
        let candidate = &gs.rho + &x * c(t);
        let excess = von_neumann_entropy(&candidate) - s0;
        report.max_entropy_excess = report.max_entropy_excess.max(excess.as_f64());
        for g in constraints {
            let drift = (trace_product(g, &candidate).re - trace_product(g, &gs.rho).re).abs();
            report.max_constraint_drift = report.max_constraint_drift.max(drift.as_f64());
        }
    }
    report
}

/// Gram–Schmidt step in the Hilbert–Schmidt inner product `Re Tr(A B)`;
/// `None` when `a` is (numerically) in the span of `basis`.
fn orthonormalize<T: Real>(a: &Operator<T>, basis: &[Operator<T>]) -> Option<Operator<T>> {
    let mut v = a.clone();
    // two passes keep the projection accurate for nearly dependent inputs
    for _ in 0..2 {
        for e in basis {
            let overlap = trace_product(e, &v).re;
            v -= e * c(overlap);
        }
    }
    let norm = trace_product(&v, &v).re.sqrt();
    let scale = trace_product(a, a).re.sqrt();
    if norm <= T::lit(1e-10) * scale.max(T::lit(1e-300)) {
        None
    } else {
        Some(v * c(T::one() / norm))
    }
}
