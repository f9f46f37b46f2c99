// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::state::{CellTargets, ClassicalState, GibbsState};
use crate::error::{Error, Result};
use crate::fock::linalg::{max_abs, psd_solve, HermitianEigen};
use crate::model::CellObservables;
use crate::scalar::{c, Operator, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Convergence threshold on `max_i |⟨G_i⟩ - t_i| / (1 + |t_i|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smallest Armijo step before the solve is declared stalled.
    pub damping_floor: f64,
    /// Gram eigenvalues below `singular_cut × λ_max` count as degenerate.
    pub singular_cut: f64,
    /// Degenerate Gram matrices are an error when set; otherwise the Newton
    /// step is taken in the pseudo-inverse sense.
    pub strict: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 200,
            damping_floor: 2f64.powi(-20),
            singular_cut: 1e-13,
            strict: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    /// Residual 2-norm after each accepted step, starting with the initial
    /// guess.
    pub history: Vec<f64>,
    /// Directions discarded by the pseudo-inverse (non-strict mode).
    pub dropped_directions: usize,
    /// Smallest eigenvalue seen in any Gram matrix along the way.
    pub min_gram_eigenvalue: f64,
}

/// Finds `θ` with `Tr(G_i e^{-K}) / Z = t_i`, `K = base + Σ θ_i G_i`, by
/// damped Newton steps on the exact Kubo–Mori Jacobian `∂⟨G_i⟩/∂θ_j = -cov`.
pub fn solve_multipliers<T: Real>(
    base: Option<&Operator<T>>,
    ops: &[&Operator<T>],
    targets: &[T],
    theta0: &[T],
    opts: &SolverOptions,
) -> Result<(Vec<T>, GibbsState<T>, SolveReport)> {
    let n = ops.len();
    if targets.len() != n || theta0.len() != n {
        return Err(Error::InvalidArgument(
            "targets, operators and initial guess differ in length".into(),
        ));
    }
    for (i, op) in ops.iter().enumerate() {
        let eig = HermitianEigen::new(op);
        let lo = eig.min_value();
        let hi = eig.values.iter().copied().fold(lo, |a, b| a.max(b));
        let margin = (hi - lo) * T::lit(1e-12);
        if !(targets[i] > lo + margin && targets[i] < hi - margin) {
            return Err(Error::Infeasible(format!(
                "target {} of constraint {i} is outside the open spectral range [{lo}, {hi}]",
                targets[i]
            )));
        }
    }
    let d = ops.first().map(|o| o.nrows()).unwrap_or(0);
    let exponent = |theta: &[T]| {
        let mut k = base.cloned().unwrap_or_else(|| Operator::zeros(d, d));
        for (g, &t) in ops.iter().zip(theta) {
            k += *g * c(t);
        }
        k
    };
    let scale: Vec<T> = targets.iter().map(|t| T::one() + t.abs()).collect();
    let residual = |gs: &GibbsState<T>| -> DVector<T> {
        DVector::from_iterator(n, (0..n).map(|i| (gs.expect(ops[i]) - targets[i]) / scale[i]))
    };
    let tol = T::lit(opts.tolerance);
    let mut theta = theta0.to_vec();
    let mut gs = GibbsState::from_exponent(exponent(&theta))?;
    let mut r = residual(&gs);
    let mut report = SolveReport {
        history: vec![r.norm().as_f64()],
        min_gram_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    for iter in 0..=opts.max_iterations {
        let rmax = r.amax();
        report.iterations = iter;
        report.residual = rmax.as_f64();
        if rmax <= tol {
            return Ok((theta, gs, report));
        }
        if iter == opts.max_iterations {
            break;
        }
        let gram = gs.covariance_matrix(ops);
        // Newton: -cov Δ = t - ⟨G⟩, residual is scaled per row
        let rhs = DVector::from_iterator(n, (0..n).map(|i| r[i] * scale[i]));
        let step = newton_step(&gram, &rhs, opts, &mut report)?;
        let r0 = r.norm();
        let mut alpha = T::one();
        loop {
            let trial: Vec<T> = theta.iter().zip(step.iter()).map(|(t, s)| *t + alpha * *s).collect();
            if let Ok(next) = GibbsState::from_exponent(exponent(&trial)) {
                let rn = residual(&next);
                if rn.norm() <= (T::one() - T::lit(1e-4) * alpha) * r0 {
                    theta = trial;
                    gs = next;
                    r = rn;
                    report.history.push(r.norm().as_f64());
                    break;
                }
            }
            alpha *= T::lit(0.5);
            if alpha.as_f64() < opts.damping_floor {
                return Err(Error::Infeasible(format!(
                    "residual stalls at {:.3e} with the step floor reached",
                    rmax.as_f64()
                )));
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual: r.amax().as_f64(),
    })
}

fn newton_step<T: Real>(
    gram: &DMatrix<T>,
    rhs: &DVector<T>,
    opts: &SolverOptions,
    report: &mut SolveReport,
) -> Result<DVector<T>> {
    let eig = SymmetricEigen::new(gram.clone());
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let lmin = eig.eigenvalues.iter().copied().fold(lmax, |m, x| m.min(x));
    report.min_gram_eigenvalue = report.min_gram_eigenvalue.min(lmin.as_f64());
    let cut = lmax * T::lit(opts.singular_cut);
    if lmax == T::zero() || (opts.strict && lmin <= cut) {
        return Err(Error::DegenerateConstraints(format!(
            "Kubo–Mori Gram matrix is singular (eigenvalues {:.3e} .. {:.3e})",
            lmin.as_f64(),
            lmax.as_f64()
        )));
    }
    let (x, dropped) = psd_solve(gram, rhs, T::lit(opts.singular_cut));
    report.dropped_directions = report.dropped_directions.max(dropped);
    Ok(x)
}

/// Outcome of [`invert_expectations`].
#[derive(Clone, Debug)]
pub struct Inversion<T: Real> {
    pub state: ClassicalState<T>,
    pub gibbs: GibbsState<T>,
    pub report: SolveReport,
}

/// Recovers `(β, μ, v)` per cell from lab-frame targets.
///
/// `v_c = ⟨P_c⟩/⟨M_c⟩` fixes the velocity; with it the rest-frame exponent
/// is linear in the lab operators, so the remaining unknowns are solved in
/// one Newton pass over `θ = (θ_E, θ_P, θ_M)` per cell. Momentum operators
/// that vanish identically (single-mode boxes) are left out.
pub fn invert_expectations<T: Real>(
    targets: &CellTargets<T>,
    obs: &CellObservables<T>,
    z0: &ClassicalState<T>,
    opts: &SolverOptions,
) -> Result<Inversion<T>> {
    let cells = obs.cell_count;
    if targets.cells() != cells {
        return Err(Error::InvalidArgument("target count does not match cells".into()));
    }
    z0.validate(cells)?;
    if let Some(m) = targets.mass.iter().find(|m| !(**m > T::zero())) {
        return Err(Error::Infeasible(format!("cell mass target {m} is not positive")));
    }
    let v = targets.velocities();
    let mut ops: Vec<&Operator<T>> = Vec::new();
    let mut t = Vec::new();
    let mut theta0 = Vec::new();
    let mut slots = Vec::new();
    for cell in 0..cells {
        let th = z0.natural(cell);
        ops.push(&obs.e_lab[cell]);
        t.push(targets.energy[cell]);
        theta0.push(th[0]);
        slots.push((cell, 0));
        if max_abs(&obs.p_lab[cell]) > T::lit(1e-14) {
            ops.push(&obs.p_lab[cell]);
            t.push(targets.momentum[cell]);
            theta0.push(th[1]);
            slots.push((cell, 1));
        }
        ops.push(&obs.m_ops[cell]);
        t.push(targets.mass[cell]);
        theta0.push(th[2]);
        slots.push((cell, 2));
    }
    let (theta, gibbs, report) = solve_multipliers(None, &ops, &t, &theta0, opts)?;
    let mut natural = vec![[T::zero(); 3]; cells];
    for ((cell, slot), value) in slots.into_iter().zip(theta) {
        natural[cell][slot] = value;
    }
    let state = ClassicalState::from_natural(&natural, &v);
    if let Some(b) = state.beta.iter().find(|b| !(**b > T::zero())) {
        return Err(Error::Infeasible(format!(
            "targets require a non-positive inverse temperature ({b})"
        )));
    }
    Ok(Inversion { state, gibbs, report })
}

/// Solves for the rest-frame momentum multipliers `κ_c` so that
/// `⟨P⁰_c⟩ = 0` at fixed `(β, μ, v)`; returns the completed state.
pub fn complete_rest_frame<T: Real>(
    z: &ClassicalState<T>,
    obs: &CellObservables<T>,
    opts: &SolverOptions,
) -> Result<(ClassicalState<T>, GibbsState<T>)> {
    z.validate(obs.cell_count)?;
    let d = obs.hamiltonian.nrows();
    let mut base = Operator::<T>::zeros(d, d);
    let mut p0 = Vec::new();
    let mut cells = Vec::new();
    for cell in 0..obs.cell_count {
        let v = z.v[cell];
        base += (obs.rest_energy(cell, v) - &obs.m_ops[cell] * c(z.mu[cell])) * c(z.beta[cell]);
        let p = obs.rest_momentum(cell, v);
        if max_abs(&p) > T::lit(1e-14) {
            p0.push(p);
            cells.push(cell);
        }
    }
    let refs: Vec<&Operator<T>> = p0.iter().collect();
    let targets = vec![T::zero(); refs.len()];
    let guess: Vec<T> = cells.iter().map(|&c| z.kappa[c]).collect();
    let (kappa, gs, _) = solve_multipliers(Some(&base), &refs, &targets, &guess, opts)?;
    let mut out = z.clone();
    out.kappa = vec![T::zero(); obs.cell_count];
    for (cell, k) in cells.into_iter().zip(kappa) {
        out.kappa[cell] = k;
    }
    Ok((out, gs))
}

/// Kinetic description: constraints `{E_c} ∪ {f_ij}` with multipliers
/// `{β_c} ∪ {θ_ij}`. The phase-space densities are linearly dependent
/// whenever the grid has more points than one-body degrees of freedom, so
/// the Newton step is always taken in the pseudo-inverse sense.
pub fn invert_kinetic<T: Real>(
    energy_ops: &[Operator<T>],
    density_ops: &[Operator<T>],
    targets: &[T],
    theta0: &[T],
    opts: &SolverOptions,
) -> Result<(Vec<T>, GibbsState<T>, SolveReport)> {
    let ops: Vec<&Operator<T>> = energy_ops.iter().chain(density_ops).collect();
    let relaxed = SolverOptions { strict: false, ..*opts };
    solve_multipliers(None, &ops, targets, theta0, &relaxed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Statistics;
    use crate::gibbs::state::gibbs_state;
    use crate::model::{phase_space_density, PhaseSpaceSpec};
    use crate::testutil::{observables, space};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_recovers_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let opts = SolverOptions::default();
        let fixtures = [
            observables(2, 2, Statistics::Bose, 0.2, 1),
            observables(3, 2, Statistics::Fermi, 0.3, 2),
            observables(3, 2, Statistics::Bose, 0.1, 3),
        ];
        let mut worst: f64 = 0.0;
        for trial in 0..50 {
            let obs = &fixtures[trial % fixtures.len()];
            let cells = obs.cell_count;
            let z = ClassicalState::new(
                (0..cells).map(|_| rng.random_range(0.4..2.0)).collect(),
                (0..cells).map(|_| rng.random_range(-0.5..1.5)).collect(),
                (0..cells).map(|_| rng.random_range(-0.3..0.3)).collect(),
            )
            .unwrap();
            let (z, gs) = complete_rest_frame(&z, obs, &opts).unwrap();
            let targets = CellTargets::measure(obs, &gs.rho);
            let inv = invert_expectations(&targets, obs, &ClassicalState::uniform(cells, 1.0, 0.0), &opts).unwrap();
            worst = worst.max(inv.state.max_abs_difference(&z));
            for cell in 0..cells {
                let p0 = obs.rest_momentum(cell, inv.state.v[cell]);
                assert!(inv.gibbs.expect(&p0).abs() < 1e-8);
            }
            assert!(inv.report.history.windows(2).all(|w| w[1] <= w[0]));
            assert!(inv.report.min_gram_eigenvalue > -1e-12);
        }
        assert!(worst < 1e-6, "round-trip error {worst:e}");
    }

    /// Targets from configuration sums at a known `(β, μ)`, computed
    /// without the operator machinery: free bosons, one cell.
    #[test]
    fn single_cell_free_inversion_matches_configuration_sums() {
        let obs = observables(2, 3, Statistics::Bose, 0.0, 1);
        let e = [0.5, 2.0];
        let confs: Vec<[usize; 2]> = (0..=3).flat_map(|a| (0..=3 - a).map(move |b| [a, b])).collect();
        let (beta, mu) = (1.3, 0.4);
        let w: Vec<f64> = confs
            .iter()
            .map(|n| (-beta * ((e[0] - mu) * n[0] as f64 + (e[1] - mu) * n[1] as f64)).exp())
            .collect();
        let z: f64 = w.iter().sum();
        let en: f64 = confs
            .iter()
            .zip(&w)
            .map(|(n, w)| w * (e[0] * n[0] as f64 + e[1] * n[1] as f64))
            .sum();
        let nn: f64 = confs.iter().zip(&w).map(|(n, w)| w * (n[0] + n[1]) as f64).sum();
        let targets = CellTargets {
            energy: vec![en / z],
            mass: vec![nn / z],
            momentum: vec![0.0],
        };
        let inv = invert_expectations(
            &targets,
            &obs,
            &ClassicalState::uniform(1, 1.0, 0.0),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(
            (inv.state.beta[0] - beta).abs() < 1e-9,
            "{} vs {beta}",
            inv.state.beta[0]
        );
        assert!((inv.state.mu[0] - mu).abs() < 1e-9);
        assert!(inv.state.v[0].abs() < 1e-12);
    }

    #[test]
    fn mirror_symmetric_momenta_are_degenerate() {
        // with two modes the cell momenta of a two-cell box coincide
        let obs = observables(2, 2, Statistics::Bose, 0.1, 2);
        assert!(max_abs(&(&obs.p_lab[0] - &obs.p_lab[1])) < 1e-12);
        let gs = gibbs_state(&ClassicalState::uniform(2, 1.0, 0.2), &obs).unwrap();
        let targets = CellTargets::measure(&obs, &gs.rho);
        let z0 = ClassicalState::uniform(2, 1.0, 0.0);
        let strict = invert_expectations(&targets, &obs, &z0, &SolverOptions::default());
        assert!(matches!(strict, Err(Error::DegenerateConstraints(_))));
        let relaxed = SolverOptions {
            strict: false,
            ..Default::default()
        };
        let inv = invert_expectations(&targets, &obs, &z0, &relaxed).unwrap();
        assert!(max_abs(&(&inv.gibbs.rho - &gs.rho)) < 1e-9);
    }

    #[test]
    fn vacuum_targets_are_infeasible() {
        let obs = observables(2, 2, Statistics::Bose, 0.1, 1);
        let targets = CellTargets {
            energy: vec![0.0],
            mass: vec![0.0],
            momentum: vec![0.0],
        };
        let r = invert_expectations(
            &targets,
            &obs,
            &ClassicalState::uniform(1, 1.0, 0.0),
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn duplicated_constraint_is_degenerate_in_strict_mode() {
        let obs = observables(2, 2, Statistics::Bose, 0.1, 1);
        let gs = gibbs_state(&ClassicalState::uniform(1, 1.0, 0.2), &obs).unwrap();
        let m = &obs.m_ops[0];
        let t = gs.expect(m);
        let r = solve_multipliers(None, &[m, m], &[t, t], &[0.0, 0.0], &SolverOptions::default());
        assert!(matches!(r, Err(Error::DegenerateConstraints(_))));
    }

    #[test]
    fn kinetic_inversion_reproduces_phase_space_targets() {
        let s = space(2, 2, Statistics::Bose);
        let obs = observables(2, 2, Statistics::Bose, 0.1, 2);
        let mut spec = PhaseSpaceSpec::default_for(2);
        spec.positions = 2;
        spec.momenta = 3;
        let grid = phase_space_density(&s, &spec).unwrap();
        let mut truth = vec![0.8, 1.1];
        truth.extend((0..grid.len()).map(|i| 0.1 * (i as f64 - 2.0)));
        let ops: Vec<&Operator<f64>> = obs.e_lab.iter().chain(&grid.f_ops).collect();
        let mut k = Operator::<f64>::zeros(s.dim(), s.dim());
        for (g, t) in ops.iter().zip(&truth) {
            k += *g * c(*t);
        }
        let gs = GibbsState::from_exponent(k).unwrap();
        let targets: Vec<f64> = ops.iter().map(|g| gs.expect(g)).collect();
        let mut guess = vec![1.0, 1.0];
        guess.extend(vec![0.0; grid.len()]);
        let (_, fit, _) = invert_kinetic(&obs.e_lab, &grid.f_ops, &targets, &guess, &SolverOptions::default()).unwrap();
        // multipliers are not unique; the state is
        assert!(max_abs(&(&fit.rho - &gs.rho)) < 1e-8);
    }
}
