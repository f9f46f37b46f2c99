// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::propagator::Propagator;
use crate::error::{Error, Result};
use crate::fock::linalg::{expect, psd_solve, trace_norm_hermitian};
use crate::gibbs::{solve_multipliers, ClassicalState, GibbsState, SolverOptions};
use crate::model::CellObservables;
use crate::scalar::{c, ci, Operator, Real};

/// Largest dimension the history reconstruction is run at.
pub const HISTORY_MAX_DIM: usize = 64;

/// Multipliers and their time derivatives at one quadrature node.
#[derive(Clone, Debug)]
pub struct HistoryNode<T: Real> {
    pub time: T,
    pub theta: Vec<T>,
    pub theta_dot: Vec<T>,
}

/// `K̇ + (i/ħ)[H, K]` at a node, `K = Σ θ_i G_i`, in H's eigenbasis.
pub(crate) fn node_integrand<T: Real>(
    prop: &Propagator<T>,
    ops_eig: &[Operator<T>],
    node: &HistoryNode<T>,
) -> Operator<T> {
    let n = prop.dim();
    let mut k = Operator::zeros(n, n);
    let mut kdot = Operator::zeros(n, n);
    for ((g, &th), &thd) in ops_eig.iter().zip(&node.theta).zip(&node.theta_dot) {
        k += g * c(th);
        kdot += g * c(thd);
    }
    // In the eigenbasis [H, K]_ij = (E_i − E_j) K_ij.
    for i in 0..n {
        for j in 0..n {
            let w = (prop.eigen.values[i] - prop.eigen.values[j]) / prop.hbar;
            kdot[(i, j)] += k[(i, j)] * ci(T::zero(), w);
        }
    }
    kdot
}

/// Rotates an eigenbasis operator by `U_s · U_s†` with `U_s = e^{-iHs/ħ}`.
pub(crate) fn rotate_eig<T: Real>(prop: &Propagator<T>, x: &Operator<T>, s: T) -> Operator<T> {
    let n = prop.dim();
    let mut out = x.clone();
    for i in 0..n {
        for j in 0..n {
            let w = -(prop.eigen.values[i] - prop.eigen.values[j]) * s / prop.hbar;
            out[(i, j)] *= crate::scalar::polar(T::one(), w);
        }
    }
    out
}

fn simpson_weights<T: Real>(intervals: usize, h: T) -> Vec<T> {
    (0..=intervals)
        .map(|j| {
            let w = if j == 0 || j == intervals {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            T::lit(w) * h / T::lit(3.0)
        })
        .collect()
}

/// `∫ U_{t−τ}(K̇(τ) + (i/ħ)[H, K(τ)])U†_{t−τ} dτ` over equally spaced nodes
/// ending at `t`, by composite Simpson. Returns the integral and an error
/// estimate (Richardson against the half grid when the interval count is a
/// multiple of four, otherwise the Simpson–trapezoid difference).
pub fn history_exponent<T: Real>(
    nodes: &[HistoryNode<T>],
    ops: &[Operator<T>],
    prop: &Propagator<T>,
) -> Result<(Operator<T>, T)> {
    if nodes.len() < 3 || nodes.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "Simpson quadrature needs an odd node count ≥ 3, got {}",
            nodes.len()
        )));
    }
    let intervals = nodes.len() - 1;
    let t = nodes[intervals].time;
    let h = (t - nodes[0].time) / T::from_usize_lossy(intervals);
    let ops_eig: Vec<Operator<T>> = ops.iter().map(|g| prop.eigen.to_eigenbasis(g)).collect();
    let samples: Vec<Operator<T>> = nodes
        .iter()
        .map(|nd| rotate_eig(prop, &node_integrand(prop, &ops_eig, nd), t - nd.time))
        .collect();
    let sum = |weights: &[T], stride: usize| {
        let n = prop.dim();
        let mut acc = Operator::zeros(n, n);
        for (w, s) in weights.iter().zip(samples.iter().step_by(stride)) {
            acc += s * c(*w);
        }
        acc
    };
    let fine = sum(&simpson_weights(intervals, h), 1);
    let coarse = if intervals.is_multiple_of(4) {
        sum(&simpson_weights(intervals / 2, h * T::lit(2.0)), 2)
    } else {
        let mut w = vec![h; intervals + 1];
        w[0] = h * T::lit(0.5);
        w[intervals] = h * T::lit(0.5);
        sum(&w, 1)
    };
    let diff = crate::fock::linalg::max_abs(&(&fine - &coarse));
    let estimate = if intervals.is_multiple_of(4) {
        diff / T::lit(15.0)
    } else {
        diff
    };
    Ok((prop.eigen.from_eigenbasis(&fine), estimate))
}

/// Lab-frame relevant operators `(E_c, P_c, M_c)` of a cell set, skipping
/// momentum operators that vanish identically, with the matching
/// multipliers of `z`.
pub fn hydro_operators<T: Real>(obs: &CellObservables<T>, z: &ClassicalState<T>) -> (Vec<Operator<T>>, Vec<T>) {
    let mut ops = Vec::new();
    let mut theta = Vec::new();
    for cell in 0..obs.cell_count {
        let th = z.natural(cell);
        ops.push(obs.e_lab[cell].clone());
        theta.push(th[0]);
        if crate::fock::linalg::max_abs(&obs.p_lab[cell]) > T::lit(1e-14) {
            ops.push(obs.p_lab[cell].clone());
            theta.push(th[1]);
        }
        ops.push(obs.m_ops[cell].clone());
        theta.push(th[2]);
    }
    (ops, theta)
}

/// `θ̇ = −cov⁻¹ d⟨G⟩/dt` in the pseudo-inverse sense.
pub(crate) fn multiplier_rates<T: Real>(gs: &GibbsState<T>, ops: &[Operator<T>], rates: &[T], cut: T) -> Vec<T> {
    let refs: Vec<&Operator<T>> = ops.iter().collect();
    let cov = gs.covariance_matrix(&refs);
    let r = DVector::from_iterator(rates.len(), rates.iter().map(|&x| -x));
    psd_solve(&cov, &r, cut).0.iter().copied().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryOptions {
    pub initial_intervals: usize,
    pub max_intervals: usize,
    /// Required quadrature error estimate.
    pub bound: f64,
    /// Refinement levels always computed, for the convergence order.
    pub min_levels: usize,
    pub solver: SolverOptions,
}

impl Default for HistoryOptions {
    fn default() -> Self {
        Self {
            initial_intervals: 4,
            max_intervals: 512,
            bound: 1e-6,
            min_levels: 4,
            solver: SolverOptions {
                strict: false,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistoryLevel {
    pub intervals: usize,
    pub defect: f64,
    pub estimate: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistoryReport {
    pub dim: usize,
    pub duration: f64,
    pub levels: Vec<HistoryLevel>,
    /// Trace-norm distance between the evolved and reconstructed states at
    /// the finest level.
    pub defect: f64,
    /// `log₂` of successive defect ratios, from the last pair of levels
    /// still above the rounding floor.
    pub order: Option<f64>,
    /// Trace distance of the instantaneous Gibbs state alone (history
    /// dropped), for scale.
    pub markovian_defect: f64,
}

/// Evolves `ŵ[z0]` exactly for `duration` and rebuilds the final state from
/// the instantaneous multipliers plus the history integral, refining the
/// node grid until the quadrature estimate is below the bound.
pub fn verify_history_identity<T: Real>(
    z0: &ClassicalState<T>,
    obs: &CellObservables<T>,
    duration: T,
    opts: &HistoryOptions,
) -> Result<HistoryReport> {
    let dim = obs.hamiltonian.nrows();
    if dim > HISTORY_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "history reconstruction is limited to dimension {HISTORY_MAX_DIM}, got {dim}"
        )));
    }
    if !(duration >= T::zero()) {
        return Err(Error::InvalidArgument(format!("duration must be ≥ 0, got {duration}")));
    }
    let (ops, theta0) = hydro_operators(obs, z0);
    let prop = Propagator::new(&obs.hamiltonian, obs.hbar);
    let mut k0 = Operator::zeros(dim, dim);
    for (g, &th) in ops.iter().zip(&theta0) {
        k0 += g * c(th);
    }
    let rho0 = GibbsState::from_exponent(k0)?.rho;
    let exact = prop.evolve_state(&rho0, duration);
    let h = &obs.hamiltonian;
    let i_over_hbar = ci(T::zero(), T::one() / obs.hbar);
    let dops: Vec<Operator<T>> = ops.iter().map(|g| (h * g - g * h) * i_over_hbar).collect();
    let refs: Vec<&Operator<T>> = ops.iter().collect();
    let cut = T::lit(opts.solver.singular_cut.max(1e-12));

    let mut levels = Vec::new();
    let mut markovian_defect;
    let mut intervals = opts.initial_intervals.max(2);
    if intervals % 2 == 1 {
        intervals += 1;
    }
    loop {
        let step = duration / T::from_usize_lossy(intervals);
        let mut nodes = Vec::with_capacity(intervals + 1);
        let mut guess = theta0.clone();
        let mut last_state = None;
        for j in 0..=intervals {
            let tau = step * T::from_usize_lossy(j);
            let rho = prop.evolve_state(&rho0, tau);
            let targets: Vec<T> = ops.iter().map(|g| expect(g, &rho)).collect();
            let (theta, gs, _) =
                solve_multipliers(None, &refs, &targets, &guess, &opts.solver).map_err(|e| Error::NodeInversion {
                    node: j,
                    source: Box::new(e),
                })?;
            let rates: Vec<T> = dops.iter().map(|d| expect(d, &rho)).collect();
            let theta_dot = multiplier_rates(&gs, &ops, &rates, cut);
            guess = theta.clone();
            nodes.push(HistoryNode {
                time: tau,
                theta,
                theta_dot,
            });
            last_state = Some(gs);
        }
        let (integral, estimate) = history_exponent(&nodes, &ops, &prop)?;
        let inst = last_state.expect("at least one node");
        let rebuilt = GibbsState::from_exponent(&inst.exponent - integral)?;
        let defect = trace_norm_hermitian(&(&exact - &rebuilt.rho)).as_f64();
        markovian_defect = trace_norm_hermitian(&(&exact - &inst.rho)).as_f64();
        levels.push(HistoryLevel {
            intervals,
            defect,
            estimate: estimate.as_f64(),
        });
        let done = estimate.as_f64() < opts.bound && levels.len() >= opts.min_levels;
        if done || intervals * 2 > opts.max_intervals {
            break;
        }
        intervals *= 2;
    }
    let last = levels.last().expect("one level");
    if last.estimate >= opts.bound {
        return Err(Error::RefineNeeded {
            estimate: last.estimate,
            bound: opts.bound,
        });
    }
    let floor = 1e-11;
    let order = levels
        .windows(2)
        .rfind(|w| w[1].defect > floor)
        .map(|w| (w[0].defect / w[1].defect).log2());
    Ok(HistoryReport {
        dim,
        duration: duration.as_f64(),
        defect: last.defect,
        levels,
        order,
        markovian_defect,
    })
}
