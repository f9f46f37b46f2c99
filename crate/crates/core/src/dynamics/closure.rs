// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::history::{multiplier_rates, node_integrand, rotate_eig, HistoryNode};
use super::propagator::{correlation, CorrelationSeries, Propagator};
use crate::error::{Error, Result};
use crate::fock::linalg::{commutator, expect, max_abs, trace_product, weight_divided_difference};
use crate::fock::FockSpace;
use crate::generator::GeneratorL;
use crate::gibbs::{solve_multipliers, ClassicalState, GibbsState, SolveReport, SolverOptions};
use crate::model::{CellObservables, PhaseSpaceGrid};
use crate::scalar::{c, ci, Operator, Real};
use crate::scattering::mean_occupations;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Energy,
    Momentum,
    Mass,
    /// Phase-space density at a flattened grid index.
    Density(usize),
}

/// A relevant set `{G_i}` with the Markovian rate operators `Ġ_i`, so that
/// `d⟨G_i⟩/dt = Tr(Ġ_i ŵ)` in the accompanying state.
#[derive(Clone, Debug)]
pub struct RelevantSet<T: Real> {
    pub cells: usize,
    pub hbar: T,
    pub ops: Vec<Operator<T>>,
    /// `(cell, quantity)` of each operator; densities carry cell 0.
    pub slots: Vec<(usize, Quantity)>,
    pub rates: Vec<Operator<T>>,
}

fn hydro_slots<T: Real>(obs: &CellObservables<T>) -> (Vec<Operator<T>>, Vec<(usize, Quantity)>) {
    let mut ops = Vec::new();
    let mut slots = Vec::new();
    for cell in 0..obs.cell_count {
        ops.push(obs.e_lab[cell].clone());
        slots.push((cell, Quantity::Energy));
        if max_abs(&obs.p_lab[cell]) > T::lit(1e-14) {
            ops.push(obs.p_lab[cell].clone());
            slots.push((cell, Quantity::Momentum));
        }
        ops.push(obs.m_ops[cell].clone());
        slots.push((cell, Quantity::Mass));
    }
    (ops, slots)
}

impl<T: Real> RelevantSet<T> {
    /// Cell energy, momentum and mass under the unitary dynamics of
    /// `obs.hamiltonian`. Momentum operators that vanish identically are
    /// left out.
    pub fn hydro(obs: &CellObservables<T>) -> Self {
        let (ops, slots) = hydro_slots(obs);
        let i_over_hbar = ci(T::zero(), T::one() / obs.hbar);
        let rates = ops
            .iter()
            .map(|g| commutator(&obs.hamiltonian, g) * i_over_hbar)
            .collect();
        Self {
            cells: obs.cell_count,
            hbar: obs.hbar,
            ops,
            slots,
            rates,
        }
    }

    /// Same operators, with rates from the irreversible generator. Cell
    /// energies go through the product rule on their two-body part.
    pub fn hydro_kinetic(obs: &CellObservables<T>, gen: &GeneratorL<T>) -> Result<Self> {
        if obs.hamiltonian.nrows() != gen.dim() {
            return Err(Error::InvalidArgument(
                "cell observables and generator live on different spaces".into(),
            ));
        }
        let (ops, slots) = hydro_slots(obs);
        let rates = slots
            .iter()
            .map(|&(cell, q)| {
                let k = &obs.coefficients[cell];
                match q {
                    Quantity::Energy => {
                        gen.apply_one_body(&k.kinetic) + gen.apply_two_body(&k.interaction, T::lit(0.5))
                    }
                    Quantity::Momentum => gen.apply_one_body(&k.momentum),
                    Quantity::Mass => gen.apply_one_body(&k.mass),
                    Quantity::Density(_) => unreachable!("hydro slots carry no densities"),
                }
            })
            .collect();
        Ok(Self {
            cells: obs.cell_count,
            hbar: obs.hbar,
            ops,
            slots,
            rates,
        })
    }

    /// Kinetic description: cell energies plus the phase-space densities,
    /// all with generator rates.
    pub fn phase_space_kinetic(
        obs: &CellObservables<T>,
        grid: &PhaseSpaceGrid<T>,
        gen: &GeneratorL<T>,
    ) -> Result<Self> {
        let mut set = Self::hydro_kinetic(obs, gen)?;
        let keep: Vec<usize> = (0..set.slots.len())
            .filter(|&i| set.slots[i].1 == Quantity::Energy)
            .collect();
        set.ops = keep.iter().map(|&i| set.ops[i].clone()).collect();
        set.rates = keep.iter().map(|&i| set.rates[i].clone()).collect();
        set.slots = keep.iter().map(|&i| set.slots[i]).collect();
        for (idx, (f, a)) in grid.f_ops.iter().zip(&grid.coefficients).enumerate() {
            set.ops.push(f.clone());
            set.rates.push(gen.apply_one_body(a));
            set.slots.push((0, Quantity::Density(idx)));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn is_hydro(&self) -> bool {
        self.slots.iter().all(|(_, q)| !matches!(q, Quantity::Density(_)))
    }

    /// Multipliers of `z` on this set (hydro sets only; densities get 0).
    pub fn multipliers(&self, z: &ClassicalState<T>) -> Vec<T> {
        self.slots
            .iter()
            .map(|&(cell, q)| {
                let th = z.natural(cell);
                match q {
                    Quantity::Energy => th[0],
                    Quantity::Momentum => th[1],
                    Quantity::Mass => th[2],
                    Quantity::Density(_) => T::zero(),
                }
            })
            .collect()
    }

    pub fn exponent(&self, theta: &[T]) -> Operator<T> {
        let d = self.ops[0].nrows();
        let mut k = Operator::zeros(d, d);
        for (g, &t) in self.ops.iter().zip(theta) {
            k += g * c(t);
        }
        k
    }

    pub fn measure(&self, rho: &Operator<T>) -> Vec<T> {
        self.ops.iter().map(|g| expect(g, rho)).collect()
    }

    fn markov_rates(&self, rho: &Operator<T>) -> Vec<T> {
        self.rates.iter().map(|r| trace_product(r, rho).re).collect()
    }

    fn invert(&self, y: &[T], guess: &[T], solver: &SolverOptions) -> Result<(Vec<T>, GibbsState<T>, SolveReport)> {
        let refs: Vec<&Operator<T>> = self.ops.iter().collect();
        solve_multipliers(None, &refs, y, guess, solver)
    }

    /// `(β, μ, v)` per cell from multipliers and expectations of a hydro set.
    pub fn classical_state(&self, theta: &[T], y: &[T]) -> Option<ClassicalState<T>> {
        if !self.is_hydro() {
            return None;
        }
        let mut natural = vec![[T::zero(); 3]; self.cells];
        let mut mass = vec![T::zero(); self.cells];
        let mut momentum = vec![T::zero(); self.cells];
        for ((&(cell, q), &t), &v) in self.slots.iter().zip(theta).zip(y) {
            match q {
                Quantity::Energy => natural[cell][0] = t,
                Quantity::Momentum => {
                    natural[cell][1] = t;
                    momentum[cell] = v;
                }
                Quantity::Mass => {
                    natural[cell][2] = t;
                    mass[cell] = v;
                }
                Quantity::Density(_) => {}
            }
        }
        let vel: Vec<T> = momentum.iter().zip(&mass).map(|(p, m)| *p / *m).collect();
        Some(ClassicalState::from_natural(&natural, &vel))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub step: f64,
    pub steps: usize,
    /// Record every n-th step.
    pub record_every: usize,
    pub solver: SolverOptions,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            steps: 100,
            record_every: 1,
            solver: SolverOptions {
                strict: false,
                ..Default::default()
            },
        }
    }
}

impl IntegratorOptions {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) || self.record_every == 0 {
            return Err(Error::InvalidArgument(format!(
                "step must be positive and record interval nonzero (step {}, every {})",
                self.step, self.record_every
            )));
        }
        Ok(())
    }
}

/// Recorded expectations, multipliers and relevant entropy along a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory<T: Real> {
    pub label: String,
    pub cells: usize,
    pub slots: Vec<(usize, Quantity)>,
    pub times: Vec<T>,
    pub expectations: Vec<Vec<T>>,
    pub multipliers: Vec<Vec<T>>,
    /// Von Neumann entropy of the accompanying state.
    pub entropy: Vec<T>,
    /// Newton iterations of the inversion at each record.
    pub iterations: Vec<usize>,
    /// Set when the run stopped early; the records up to that point are kept.
    pub failure: Option<String>,
}

impl<T: Real> Trajectory<T> {
    fn new(label: &str, set: &RelevantSet<T>) -> Self {
        Self {
            label: label.to_string(),
            cells: set.cells,
            slots: set.slots.clone(),
            times: Vec::new(),
            expectations: Vec::new(),
            multipliers: Vec::new(),
            entropy: Vec::new(),
            iterations: Vec::new(),
            failure: None,
        }
    }

    fn record(&mut self, t: T, y: &[T], theta: &[T], gs: &GibbsState<T>, iterations: usize) {
        self.times.push(t);
        self.expectations.push(y.to_vec());
        self.multipliers.push(theta.to_vec());
        self.entropy.push(gs.entropy());
        self.iterations.push(iterations);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn value(&self, record: usize, cell: usize, q: Quantity) -> Option<T> {
        let i = self.slots.iter().position(|&s| s == (cell, q))?;
        Some(self.expectations[record][i])
    }

    /// Sum over cells; zero for a quantity the set does not carry.
    pub fn total(&self, record: usize, q: Quantity) -> T {
        self.slots
            .iter()
            .zip(&self.expectations[record])
            .filter(|((_, s), _)| *s == q)
            .fold(T::zero(), |acc, (_, &v)| acc + v)
    }

    pub fn cell_series(&self, cell: usize, q: Quantity) -> Vec<T> {
        (0..self.len())
            .map(|i| self.value(i, cell, q).unwrap_or(T::zero()))
            .collect()
    }

    pub fn classical_state(&self, record: usize) -> Option<ClassicalState<T>> {
        let set = RelevantSet {
            cells: self.cells,
            hbar: T::one(),
            ops: Vec::new(),
            slots: self.slots.clone(),
            rates: Vec::new(),
        };
        set.classical_state(&self.multipliers[record], &self.expectations[record])
    }

    /// Hydro sets: `t`, then `beta_c, mu_c, v_c, E_c, M_c, P_c` per cell,
    /// then `entropy`. Other sets: `t`, one column per slot, `entropy`.
    pub fn to_csv(&self) -> String {
        let hydro = self.slots.iter().all(|(_, q)| !matches!(q, Quantity::Density(_)));
        let mut s = String::from("t");
        if hydro {
            for cell in 0..self.cells {
                for name in ["beta", "mu", "v", "E", "M", "P"] {
                    s.push_str(&format!(",{name}_{cell}"));
                }
            }
        } else {
            for &(cell, q) in &self.slots {
                match q {
                    Quantity::Energy => s.push_str(&format!(",E_{cell}")),
                    Quantity::Momentum => s.push_str(&format!(",P_{cell}")),
                    Quantity::Mass => s.push_str(&format!(",M_{cell}")),
                    Quantity::Density(i) => s.push_str(&format!(",f_{i}")),
                }
            }
        }
        s.push_str(",entropy\n");
        for i in 0..self.len() {
            s.push_str(&format!("{:e}", self.times[i].as_f64()));
            if hydro {
                let z = self.classical_state(i).expect("hydro slots");
                for cell in 0..self.cells {
                    let vals = [
                        z.beta[cell],
                        z.mu[cell],
                        z.v[cell],
                        self.value(i, cell, Quantity::Energy).unwrap_or(T::zero()),
                        self.value(i, cell, Quantity::Mass).unwrap_or(T::zero()),
                        self.value(i, cell, Quantity::Momentum).unwrap_or(T::zero()),
                    ];
                    for v in vals {
                        s.push_str(&format!(",{:e}", v.as_f64()));
                    }
                }
            } else {
                for v in &self.expectations[i] {
                    s.push_str(&format!(",{:e}", v.as_f64()));
                }
            }
            s.push_str(&format!(",{:e}\n", self.entropy[i].as_f64()));
        }
        s
    }
}

/// Sliding-window history correction for the closed equations.
struct Memory<T: Real> {
    prop: Propagator<T>,
    tau_c: T,
    ops_eig: Vec<Operator<T>>,
    /// `(time, integrand in H's eigenbasis)` at past step points.
    nodes: Vec<(T, Operator<T>)>,
}

impl<T: Real> Memory<T> {
    /// First-order history correction `δ` to the accompanying state at `t`:
    /// the trapezoid window integral `X` over `[t − τ_c, t]` mapped through
    /// the derivative of `exp(−K + X)/Z` at `X = 0`.
    fn correction(&self, t: T, current: &Operator<T>, gs: &GibbsState<T>) -> Option<Operator<T>> {
        let start = t - self.tau_c;
        let mut pts: Vec<(T, &Operator<T>)> = self
            .nodes
            .iter()
            .filter(|(s, _)| *s >= start - T::lit(1e-12) && *s < t)
            .map(|(s, x)| (*s, x))
            .collect();
        pts.push((t, current));
        if pts.len() < 2 {
            return None;
        }
        let n = self.prop.dim();
        let mut x = Operator::zeros(n, n);
        for w in pts.windows(2) {
            let h = (w[1].0 - w[0].0) * T::lit(0.5);
            x += rotate_eig(&self.prop, w[0].1, t - w[0].0) * c(h);
            x += rotate_eig(&self.prop, w[1].1, t - w[1].0) * c(h);
        }
        let x = self.prop.eigen.from_eigenbasis(&x);
        let mut d = gs.eigen.to_eigenbasis(&x);
        let k = &gs.eigen.values;
        let p = &gs.weights;
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] *= c(-weight_divided_difference(p[i], k[i], p[j], k[j]));
            }
        }
        let delta = gs.eigen.from_eigenbasis(&d);
        let tr = crate::fock::linalg::trace(&delta);
        Some(delta - &gs.rho * tr)
    }
}

const MEMORY_PASSES: usize = 2;

struct Stage<T: Real> {
    theta: Vec<T>,
    gs: GibbsState<T>,
    iterations: usize,
    rate: Vec<T>,
    integrand: Option<Operator<T>>,
}

fn stage<T: Real>(
    set: &RelevantSet<T>,
    memory: Option<&Memory<T>>,
    t: T,
    y: &[T],
    guess: &[T],
    solver: &SolverOptions,
) -> Result<Stage<T>> {
    let (theta, gs, report) = set.invert(y, guess, solver)?;
    let markov = set.markov_rates(&gs.rho);
    let mut rate = markov.clone();
    let mut integrand = None;
    if let Some(mem) = memory {
        // The node at `t` needs θ̇, which depends on the corrected rate; one
        // fixed-point pass starting from the Markovian rate.
        let cut = T::lit(solver.singular_cut.max(1e-12));
        for _ in 0..MEMORY_PASSES {
            let node = HistoryNode {
                time: t,
                theta_dot: multiplier_rates(&gs, &set.ops, &rate, cut),
                theta: theta.clone(),
            };
            let x = node_integrand(&mem.prop, &mem.ops_eig, &node);
            rate = markov.clone();
            if let Some(delta) = mem.correction(t, &x, &gs) {
                for (r, g) in rate.iter_mut().zip(&set.rates) {
                    *r += trace_product(g, &delta).re;
                }
            }
            integrand = Some(x);
        }
    }
    Ok(Stage {
        theta,
        gs,
        iterations: report.iterations,
        rate,
        integrand,
    })
}

fn axpy<T: Real>(y: &[T], a: T, k: &[T]) -> Vec<T> {
    y.iter().zip(k).map(|(y, k)| *y + a * *k).collect()
}

/// Replaces the rate operators from the accompanying state at the start of
/// every step.
type RateRefresh<'a, T> = &'a mut dyn FnMut(&GibbsState<T>) -> Result<Vec<Operator<T>>>;

fn integrate<T: Real>(
    label: &str,
    set: &RelevantSet<T>,
    rho0: &Operator<T>,
    theta_guess: &[T],
    memory: Option<Memory<T>>,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>> {
    integrate_with(label, set.clone(), rho0, theta_guess, memory, None, opts)
}

fn integrate_with<T: Real>(
    label: &str,
    mut set: RelevantSet<T>,
    rho0: &Operator<T>,
    theta_guess: &[T],
    mut memory: Option<Memory<T>>,
    mut refresh: Option<RateRefresh<'_, T>>,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>> {
    opts.validate()?;
    let h = T::lit(opts.step);
    let half = h * T::lit(0.5);
    let mut traj = Trajectory::new(label, &set);
    let mut t = T::zero();
    let mut y = set.measure(rho0);
    let mut s1 = stage(&set, memory.as_ref(), t, &y, theta_guess, &opts.solver)?;
    traj.record(t, &y, &s1.theta, &s1.gs, s1.iterations);
    for n in 1..=opts.steps {
        if let (Some(mem), Some(x)) = (memory.as_mut(), s1.integrand.take()) {
            mem.nodes.push((t, x));
            let keep_from = t - mem.tau_c - h;
            mem.nodes.retain(|(s, _)| *s >= keep_from);
        }
        if let Some(f) = refresh.as_mut() {
            match f(&s1.gs) {
                Ok(rates) => {
                    set.rates = rates;
                    s1.rate = set.markov_rates(&s1.gs.rho);
                }
                Err(e) => {
                    traj.failure = Some(format!("step {n} at t = {}: {e}", t.as_f64()));
                    break;
                }
            }
        }
        let set = &set;
        let step = (|| -> Result<(Vec<T>, Stage<T>)> {
            let mem = memory.as_ref();
            let k1 = &s1.rate;
            let s2 = stage(set, mem, t + half, &axpy(&y, half, k1), &s1.theta, &opts.solver)?;
            let s3 = stage(set, mem, t + half, &axpy(&y, half, &s2.rate), &s2.theta, &opts.solver)?;
            let s4 = stage(set, mem, t + h, &axpy(&y, h, &s3.rate), &s3.theta, &opts.solver)?;
            let sixth = h / T::lit(6.0);
            let two = T::lit(2.0);
            let next: Vec<T> = (0..y.len())
                .map(|i| y[i] + sixth * (k1[i] + two * s2.rate[i] + two * s3.rate[i] + s4.rate[i]))
                .collect();
            let s_next = stage(set, mem, t + h, &next, &s4.theta, &opts.solver)?;
            Ok((next, s_next))
        })();
        match step {
            Ok((next, s_next)) => {
                y = next;
                s1 = s_next;
                t = h * T::from_usize_lossy(n);
                if n % opts.record_every == 0 {
                    traj.record(t, &y, &s1.theta, &s1.gs, s1.iterations);
                }
            }
            Err(e) => {
                traj.failure = Some(format!("step {n} at t = {}: {e}", t.as_f64()));
                break;
            }
        }
    }
    Ok(traj)
}

fn initial_state<T: Real>(set: &RelevantSet<T>, z0: &ClassicalState<T>) -> Result<(Operator<T>, Vec<T>)> {
    z0.validate(set.cells)?;
    let theta = set.multipliers(z0);
    let rho = GibbsState::from_exponent(set.exponent(&theta))?.rho;
    Ok((rho, theta))
}

/// Closed (Markovian) hydrodynamic equations `d⟨G⟩/dt = Tr(Ġ ŵ[⟨G⟩])`,
/// RK4 with re-inversion at every stage.
pub fn evolve_closed_hydro<T: Real>(
    obs: &CellObservables<T>,
    z0: &ClassicalState<T>,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>> {
    let set = RelevantSet::hydro(obs);
    let (rho0, theta0) = initial_state(&set, z0)?;
    integrate("closed", &set, &rho0, &theta0, None, opts)
}

/// Closed equations with the history integral kept over the window
/// `[t − τ_c, t]`, to first order in the accompanying state. `τ_c = 0`
/// reproduces [`evolve_closed_hydro`].
pub fn evolve_with_memory<T: Real>(
    obs: &CellObservables<T>,
    z0: &ClassicalState<T>,
    tau_c: T,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>> {
    if !(tau_c >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "memory window must be ≥ 0, got {tau_c}"
        )));
    }
    let set = RelevantSet::hydro(obs);
    let (rho0, theta0) = initial_state(&set, z0)?;
    let prop = Propagator::new(&obs.hamiltonian, obs.hbar);
    let ops_eig = set.ops.iter().map(|g| prop.eigen.to_eigenbasis(g)).collect();
    let memory = Memory {
        prop,
        tau_c,
        ops_eig,
        nodes: Vec::new(),
    };
    integrate("memory", &set, &rho0, &theta0, Some(memory), opts)
}

/// Closed equations with generator rates on the hydrodynamic set. `obs`
/// should partition the Hamiltonian the generator was built around
/// (normally `H_eff`).
pub fn evolve_kinetic<T: Real>(
    obs: &CellObservables<T>,
    gen: &GeneratorL<T>,
    z0: &ClassicalState<T>,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>> {
    let set = RelevantSet::hydro_kinetic(obs, gen)?;
    let (rho0, theta0) = initial_state(&set, z0)?;
    integrate("kinetic", &set, &rho0, &theta0, None, opts)
}

/// [`evolve_kinetic`] with the generator rebuilt at the start of every step
/// from the mean occupations of the accompanying state, so the Pauli factors
/// follow the trajectory. The relevant operators keep their `t = 0` form.
pub fn evolve_kinetic_refreshed<T, F>(
    space: &FockSpace<T>,
    obs: &CellObservables<T>,
    z0: &ClassicalState<T>,
    mut rebuild: F,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<GeneratorL<T>>,
{
    let set0 = RelevantSet::hydro(obs);
    let (rho0, theta0) = initial_state(&set0, z0)?;
    let gen0 = rebuild(&mean_occupations(space, &rho0))?;
    let set = RelevantSet::hydro_kinetic(obs, &gen0)?;
    let mut refresh = |gs: &GibbsState<T>| -> Result<Vec<Operator<T>>> {
        let gen = rebuild(&mean_occupations(space, &gs.rho))?;
        Ok(RelevantSet::hydro_kinetic(obs, &gen)?.rates)
    };
    integrate_with("kinetic-refreshed", set, &rho0, &theta0, None, Some(&mut refresh), opts)
}

/// Generator rates on cell energies plus phase-space densities, starting
/// from the hydrodynamic state `ŵ[z0]`.
pub fn evolve_kinetic_phase_space<T: Real>(
    obs: &CellObservables<T>,
    grid: &PhaseSpaceGrid<T>,
    gen: &GeneratorL<T>,
    z0: &ClassicalState<T>,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>> {
    let hydro = RelevantSet::hydro_kinetic(obs, gen)?;
    let (rho0, _) = initial_state(&hydro, z0)?;
    let set = RelevantSet::phase_space_kinetic(obs, grid, gen)?;
    let mut guess = vec![T::zero(); set.len()];
    for (g, &(cell, q)) in guess.iter_mut().zip(&set.slots) {
        if q == Quantity::Energy {
            *g = z0.beta[cell];
        }
    }
    let solver = SolverOptions {
        strict: false,
        ..opts.solver
    };
    integrate(
        "kinetic-phase-space",
        &set,
        &rho0,
        &guess,
        None,
        &IntegratorOptions { solver, ..*opts },
    )
}

/// Exact unitary oracle: expectations of the hydro set in `U ŵ[z0] U†`,
/// with the accompanying state re-inverted at each record.
pub fn evolve_exact<T: Real>(
    obs: &CellObservables<T>,
    z0: &ClassicalState<T>,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>> {
    opts.validate()?;
    let set = RelevantSet::hydro(obs);
    let (rho0, theta0) = initial_state(&set, z0)?;
    let prop = Propagator::new(&obs.hamiltonian, obs.hbar);
    let mut traj = Trajectory::new("exact", &set);
    let mut guess = theta0;
    for n in (0..=opts.steps).step_by(opts.record_every) {
        let t = T::lit(opts.step) * T::from_usize_lossy(n);
        let y = set.measure(&prop.evolve_state(&rho0, t));
        match set.invert(&y, &guess, &opts.solver) {
            Ok((theta, gs, rep)) => {
                traj.record(t, &y, &theta, &gs, rep.iterations);
                guess = theta;
            }
            Err(e) => {
                traj.failure = Some(format!("inversion at t = {}: {e}", t.as_f64()));
                break;
            }
        }
    }
    Ok(traj)
}

/// Connected autocorrelation of the mass current through the first inner
/// interface in `ŵ[z]`. Needs at least two cells.
pub fn interface_current_correlation<T: Real>(
    obs: &CellObservables<T>,
    z: &ClassicalState<T>,
    lags: &[T],
) -> Result<CorrelationSeries> {
    if obs.cell_count < 2 {
        return Err(Error::InvalidArgument(
            "a flow correlation needs at least two cells".into(),
        ));
    }
    let set = RelevantSet::hydro(obs);
    let (rho, _) = initial_state(&set, z)?;
    let prop = Propagator::new(&obs.hamiltonian, obs.hbar);
    let j = &obs.j_ops[1];
    Ok(correlation(&prop, &rho, j, j, lags, true))
}
