// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use qsf::dynamics::{interface_current_correlation, IntegratorOptions};
use qsf::fock::{FockSpace, ModeBasis};
use qsf::generator::{build_generator, GeneratorL, GeneratorOptions};
use qsf::gibbs::{gibbs_state, ClassicalState, SolverOptions};
use qsf::model::{
    build_cell_observables, interaction_tensor, phase_space_density, CellObservables, InteractionTensor,
    PhaseSpaceGrid, PhaseSpaceSpec, Potential, TensorBuild,
};
use qsf::scattering::{build_scattering, mean_occupations, PauliMode, Regularization, ScatteringOutputs};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Tag};

pub const DEFAULT_CELL_QUAD_ORDER: usize = 24;

/// Every derived parameter that the config leaves implicit, as recorded in
/// the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub cells: usize,
    pub range: f64,
    pub cell_quad_order: usize,
    pub eta: f64,
    pub epsilon: f64,
    pub positions: usize,
    pub momenta: usize,
    pub velocity: Vec<f64>,
    pub dimension: usize,
    pub level_energies: Vec<f64>,
}

/// The physical objects a config describes.
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub space: FockSpace<f64>,
    pub potential: Potential<f64>,
    pub tensor: TensorBuild<f64>,
    /// Cells of the bare Hamiltonian.
    pub obs: CellObservables<f64>,
    pub z0: ClassicalState<f64>,
    pub reg: Regularization<f64>,
    pub resolved: Resolved,
}

impl Scenario {
    pub fn build(cfg: ScenarioConfig) -> Result<Self, CliError> {
        let m = &cfg.model;
        let basis = ModeBasis::new(m.modes, m.box_length, m.mass, m.hbar, m.statistics).op("fock/mode_basis")?;
        let space = FockSpace::new(basis, m.max_particles).op("fock/fock_space")?;
        let potential = Potential::new(m.potential, m.strength, cfg.range()).op("model/potential")?;
        let tensor = interaction_tensor(&space.basis, &potential, m.quad_order).op("model/interaction_tensor")?;
        let cells = cfg.cells();
        let velocity = cfg.velocity();
        let cell_quad_order = cfg.discretization.cell_quad_order.unwrap_or(DEFAULT_CELL_QUAD_ORDER);
        let obs = build_cell_observables(&space, &potential, &tensor.tensor, cells, cell_quad_order, &velocity)
            .op("model/cell_observables")?;
        let z0 = ClassicalState::new(cfg.run.beta.clone(), cfg.run.mu.clone(), velocity.clone())
            .op("gibbs/classical_state")?;
        let reg = match cfg.regularization.eta {
            Some(eta) => Regularization::new(eta, cfg.regularization.epsilon.unwrap_or(eta / 10.0))
                .op("scattering/regularization")?,
            None => Regularization::default_for(&space.basis),
        };
        let resolved = Resolved {
            cells,
            range: cfg.range(),
            cell_quad_order,
            eta: reg.eta,
            epsilon: reg.epsilon,
            positions: cfg.discretization.positions.unwrap_or(4 * m.modes),
            momenta: cfg.discretization.momenta.unwrap_or(8 * m.modes),
            velocity,
            dimension: space.dim(),
            level_energies: space.basis.energies.clone(),
        };
        Ok(Self {
            cfg,
            space,
            potential,
            tensor,
            obs,
            z0,
            reg,
            resolved,
        })
    }

    pub fn solver(&self) -> SolverOptions {
        let s = &self.cfg.solver;
        SolverOptions {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            damping_floor: s.damping_floor,
            singular_cut: s.singular_cut,
            strict: false,
        }
    }

    pub fn integrator(&self) -> IntegratorOptions {
        IntegratorOptions {
            step: self.cfg.run.step,
            steps: self.cfg.run.steps,
            record_every: self.cfg.run.record_every,
            solver: self.solver(),
        }
    }

    pub fn lags(&self) -> Vec<f64> {
        (0..self.cfg.run.lag_count)
            .map(|i| self.cfg.run.lag_step * i as f64)
            .collect()
    }

    pub fn generator_options(&self) -> GeneratorOptions<f64> {
        GeneratorOptions {
            tau1: self.cfg.regularization.tau1,
            mass_conserving_gamma: self.cfg.regularization.mass_conserving_gamma,
        }
    }

    /// Mean occupations of the initial state under the bare Hamiltonian.
    pub fn initial_occupations(&self) -> Result<Vec<f64>, CliError> {
        let gs = gibbs_state(&self.z0, &self.obs).op("gibbs/gibbs_state")?;
        Ok(mean_occupations(&self.space, &gs.rho))
    }

    pub fn scattering(&self, occupations: &[f64]) -> Result<ScatteringOutputs<f64>, CliError> {
        build_scattering(
            &self.space,
            &self.tensor.tensor,
            occupations,
            self.reg,
            self.cfg.regularization.pauli,
        )
        .op("scattering/build_scattering")
    }

    pub fn generator(&self, out: &ScatteringOutputs<f64>) -> Result<GeneratorL<f64>, CliError> {
        build_generator(&self.space, out, self.generator_options()).op("generator/build_generator")
    }

    /// Cells partitioning `H_eff`, so that cell energies sum to the
    /// Hamiltonian the generator rotates with.
    pub fn effective_observables(&self, out: &ScatteringOutputs<f64>) -> Result<CellObservables<f64>, CliError> {
        let v_eff: &InteractionTensor<f64> =
            match (&out.kernels, out.mode) {
                (Some(k), PauliMode::MeanField) => &k.v_eff,
                _ => return Err(CliError::Numeric {
                    op: "dynamics/kinetic_observables",
                    source: qsf::Error::InvalidArgument(
                        "kinetic closure needs mean-field Pauli factors (the exact mode has no single V_eff tensor)"
                            .into(),
                    ),
                }),
            };
        build_cell_observables(
            &self.space,
            &self.potential,
            v_eff,
            self.resolved.cells,
            self.resolved.cell_quad_order,
            &self.resolved.velocity,
        )
        .op("model/cell_observables")
    }

    pub fn phase_space_grid(&self) -> Result<PhaseSpaceGrid<f64>, CliError> {
        let d = &self.cfg.discretization;
        let spec = PhaseSpaceSpec {
            positions: self.resolved.positions,
            momenta: self.resolved.momenta,
            sigma: d.sigma,
            p_max: d.p_max,
            normalization: d.normalization,
        };
        phase_space_density(&self.space, &spec).op("model/phase_space_density")
    }

    /// The configured memory window, or the decay time of the interface
    /// current correlation of the initial state.
    pub fn tau_c(&self) -> Result<f64, CliError> {
        if let Some(t) = self.cfg.run.tau_c {
            return Ok(t);
        }
        let series = interface_current_correlation(&self.obs, &self.z0, &self.lags()).op("dynamics/correlation")?;
        series.tau_c.ok_or_else(|| CliError::Numeric {
            op: "dynamics/tau_c",
            source: qsf::Error::InvalidArgument(
                "the interface current never decays below 1/e on the lag grid; set run.tau_c".into(),
            ),
        })
    }
}
