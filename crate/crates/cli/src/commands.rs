// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use qsf::dynamics::{
    commensurate_period, evolve_closed_hydro, evolve_exact, evolve_kinetic, evolve_kinetic_phase_space,
    evolve_kinetic_refreshed, evolve_with_memory, interface_current_correlation, verify_history_identity,
    HistoryOptions, Propagator, Quantity, Trajectory, HISTORY_MAX_DIM, RECURRENCE_TOLERANCE,
};
use qsf::fock::linalg::{expect, max_abs};
use qsf::generator::{
    check_relative_cp, gain_loss_identity_defect, stationarity_at_equilibrium, GeneratorL, CP_TOLERANCE,
};
use qsf::gibbs::{check_max_entropy, gibbs_state, invert_expectations, CellTargets, ClassicalState};
use qsf::model::InteractionTensor;
use qsf::scalar::ci;
use qsf::scattering::{build_two_particle_space, t_matrix, t_matrix_lippmann_schwinger, TwoParticleSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::checks::{self, Check};
use crate::config::{Format, OccupationMode, RelevantKind};
use crate::error::{CliError, Tag};
use crate::output::{self, OutDir};
use crate::scenario::Scenario;

/// Tolerances of the invariant suites.
pub const MASS_DRIFT: f64 = 1e-9;
pub const ENERGY_DRIFT_RATE: f64 = 1e-6;
pub const ROUND_TRIP: f64 = 1e-6;
pub const REST_MOMENTUM: f64 = 1e-8;
pub const MAX_ENTROPY_SLACK: f64 = 1e-9;
pub const LS_AGREEMENT: f64 = 1e-10;
pub const MASS_GENERATOR: f64 = 1e-10;
pub const GAIN_LOSS: f64 = 1e-12;
pub const STATIONARITY: f64 = 1e-4;
pub const HISTORY_DEFECT: f64 = 1e-4;
pub const HISTORY_ORDER: f64 = 1.9;
/// Runs inside `check` are capped at this many steps.
pub const CHECK_STEPS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    EvolveExact,
    EvolveClosed,
    EvolveMemory,
    EvolveKinetic,
    Correlations,
    Tmatrix,
    Generator,
    VerifyHistory,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::EvolveExact => "evolve-exact",
            Command::EvolveClosed => "evolve-closed",
            Command::EvolveMemory => "evolve-memory",
            Command::EvolveKinetic => "evolve-kinetic",
            Command::Correlations => "correlations",
            Command::Tmatrix => "tmatrix",
            Command::Generator => "generator",
            Command::VerifyHistory => "verify-history",
        }
    }
}

pub fn run(cmd: Command, sc: &Scenario, seed: u64, out: &mut OutDir) -> Result<Vec<Check>, CliError> {
    match cmd {
        Command::Check => check(sc, seed, out),
        Command::EvolveExact => {
            let tr = evolve_exact(&sc.obs, &sc.z0, &sc.integrator()).op("dynamics/evolve_exact")?;
            emit_trajectory(sc, out, &tr, json!({}))
        }
        Command::EvolveClosed => {
            let tr = evolve_closed_hydro(&sc.obs, &sc.z0, &sc.integrator()).op("dynamics/evolve_closed_hydro")?;
            emit_trajectory(sc, out, &tr, json!({}))
        }
        Command::EvolveMemory => {
            let tau_c = sc.tau_c()?;
            let tr = evolve_with_memory(&sc.obs, &sc.z0, tau_c, &sc.integrator()).op("dynamics/evolve_with_memory")?;
            emit_trajectory(sc, out, &tr, json!({ "tau_c": tau_c }))
        }
        Command::EvolveKinetic => evolve_kinetic_cmd(sc, out),
        Command::Correlations => correlations(sc, out),
        Command::Tmatrix => tmatrix(sc, out),
        Command::Generator => generator_cmd(sc, seed, out),
        Command::VerifyHistory => {
            let (report, checks) = history(sc)?;
            out.write_json("history.json", &json!({ "report": report, "checks": checks }))?;
            Ok(checks)
        }
    }
}

fn totals(tr: &Trajectory<f64>, q: Quantity) -> Vec<f64> {
    (0..tr.len()).map(|i| tr.total(i, q)).collect()
}

/// Mass and energy drift checks of a trajectory.
fn conservation(prefix: &str, tr: &Trajectory<f64>) -> Vec<Check> {
    let span = tr.times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let carries = |q: Quantity| tr.slots.iter().any(|(_, s)| *s == q);
    let mut out = Vec::new();
    // Phase-space sets carry no mass operator.
    if carries(Quantity::Mass) {
        out.push(Check::at_most(
            format!("{prefix}/mass-drift"),
            checks::drift(&totals(tr, Quantity::Mass)),
            MASS_DRIFT,
        ));
    }
    if carries(Quantity::Energy) {
        out.push(Check::at_most(
            format!("{prefix}/energy-drift-rate"),
            checks::drift(&totals(tr, Quantity::Energy)) / span,
            ENERGY_DRIFT_RATE,
        ));
    }
    if let Some(f) = &tr.failure {
        out.push(Check::at_least(format!("{prefix}/completed"), 0.0, 1.0).with_note(f.clone()));
    }
    out
}

fn emit_trajectory(
    sc: &Scenario,
    out: &mut OutDir,
    tr: &Trajectory<f64>,
    extra: serde_json::Value,
) -> Result<Vec<Check>, CliError> {
    let checks = conservation(&tr.label, tr);
    let stem = format!("trajectory_{}", tr.label);
    if sc.cfg.output.formats.contains(&Format::Csv) {
        out.write(&format!("{stem}.csv"), tr.to_csv().as_bytes())?;
    }
    if sc.cfg.output.formats.contains(&Format::Plot) {
        out.write_plot(&stem, &output::trajectory_plot(tr))?;
    }
    let report = json!({
        "label": tr.label,
        "records": tr.len(),
        "failure": tr.failure,
        "mass_drift": checks::drift(&totals(tr, Quantity::Mass)),
        "energy_drift": checks::drift(&totals(tr, Quantity::Energy)),
        "entropy_first": tr.entropy.first(),
        "entropy_last": tr.entropy.last(),
        "max_iterations": tr.iterations.iter().max(),
        "extra": extra,
        "checks": checks,
    });
    out.write_json(&format!("{stem}.json"), &report)?;
    Ok(checks)
}

fn beta_gaps(tr: &Trajectory<f64>) -> Vec<f64> {
    (0..tr.len())
        .filter_map(|i| tr.classical_state(i))
        .map(|z| {
            let hi = z.beta.iter().copied().fold(f64::MIN, f64::max);
            let lo = z.beta.iter().copied().fold(f64::MAX, f64::min);
            hi - lo
        })
        .collect()
}

fn kinetic_trajectory(
    sc: &Scenario,
    mode: OccupationMode,
    opts: &qsf::dynamics::IntegratorOptions,
) -> Result<Trajectory<f64>, CliError> {
    let occ = sc.initial_occupations()?;
    let out = sc.scattering(&occ)?;
    let gen = sc.generator(&out)?;
    let obs = sc.effective_observables(&out)?;
    let tr = match (sc.cfg.run.relevant, mode) {
        (RelevantKind::PhaseSpace, _) => {
            let grid = sc.phase_space_grid()?;
            evolve_kinetic_phase_space(&obs, &grid, &gen, &sc.z0, opts).op("dynamics/evolve_kinetic_phase_space")?
        }
        (RelevantKind::Hydro, OccupationMode::Frozen) => {
            evolve_kinetic(&obs, &gen, &sc.z0, opts).op("dynamics/evolve_kinetic")?
        }
        (RelevantKind::Hydro, OccupationMode::Refresh) => {
            let rebuild = |n: &[f64]| {
                let o = qsf::scattering::build_scattering(
                    &sc.space,
                    &sc.tensor.tensor,
                    n,
                    sc.reg,
                    sc.cfg.regularization.pauli,
                )?;
                qsf::generator::build_generator(&sc.space, &o, sc.generator_options())
            };
            evolve_kinetic_refreshed(&sc.space, &obs, &sc.z0, rebuild, opts).op("dynamics/evolve_kinetic_refreshed")?
        }
    };
    Ok(tr)
}

fn evolve_kinetic_cmd(sc: &Scenario, out: &mut OutDir) -> Result<Vec<Check>, CliError> {
    let mode = sc.cfg.regularization.occupations;
    let tr = kinetic_trajectory(sc, mode, &sc.integrator())?;
    let mut extra = json!({ "occupations": mode, "relevant": sc.cfg.run.relevant });
    let mut checks = Vec::new();
    if sc.cfg.run.relevant == RelevantKind::Hydro {
        // The other occupation mode, for the difference report.
        let other = match mode {
            OccupationMode::Refresh => OccupationMode::Frozen,
            OccupationMode::Frozen => OccupationMode::Refresh,
        };
        let alt = kinetic_trajectory(sc, other, &sc.integrator())?;
        let diff = tr
            .expectations
            .iter()
            .zip(&alt.expectations)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        let gaps = beta_gaps(&tr);
        extra["occupation_mode_difference"] = json!(diff);
        extra["beta_gap_first"] = json!(gaps.first());
        extra["beta_gap_last"] = json!(gaps.last());
        if let (Some(&a), Some(&b)) = (gaps.first(), gaps.last()) {
            checks.push(Check::at_most("kinetic/beta-gap-shrinks", b, a));
        }
    } else {
        extra["occupations"] = json!("frozen");
    }
    let mut all = emit_trajectory(sc, out, &tr, extra)?;
    all.extend(checks);
    Ok(all)
}

/// Exact recurrence period of the spectrum of `H` if it is commensurate
/// with the lowest single-particle level.
fn predicted_period(sc: &Scenario) -> Option<f64> {
    let prop = Propagator::new(&sc.obs.hamiltonian, sc.cfg.model.hbar);
    let levels: Vec<f64> = prop.eigen.values.iter().copied().collect();
    commensurate_period(&levels, sc.space.basis.energies[0], sc.cfg.model.hbar, 1e-9)
}

fn correlations(sc: &Scenario, out: &mut OutDir) -> Result<Vec<Check>, CliError> {
    let lags = sc.lags();
    let series = interface_current_correlation(&sc.obs, &sc.z0, &lags).op("dynamics/correlation")?;
    let period = predicted_period(sc);
    let mag = |v: &(f64, f64)| v.0.hypot(v.1);
    let c0 = series.values.first().map(mag).unwrap_or(0.0);
    let mut checks = Vec::new();
    let mut at_period = None;
    if let Some(p) = period {
        let step = sc.cfg.run.lag_step;
        let k = (p / step).round() as usize;
        if k < series.values.len() && c0 > 0.0 {
            let ratio = mag(&series.values[k]) / c0;
            at_period = Some(ratio);
            checks.push(
                Check::at_least(
                    "correlations/return-at-predicted-period",
                    ratio,
                    1.0 - RECURRENCE_TOLERANCE,
                )
                .with_note(format!("lag {} vs period {p}", lags[k])),
            );
        }
    }
    if sc.cfg.output.formats.contains(&Format::Plot) {
        out.write_plot("correlation", &output::correlation_plot(&series))?;
    }
    out.write_json(
        "correlation.json",
        &json!({
            "tau_c": series.tau_c,
            "recurrence_time": series.recurrence_time,
            "predicted_period": period,
            "return_at_predicted_period": at_period,
            "max_return_after_decay": qsf::dynamics::max_return_after_decay(&series),
            "checks": checks,
        }),
    )?;
    Ok(checks)
}

fn pair_space(sc: &Scenario, tensor: &InteractionTensor<f64>, occ: &[f64]) -> Result<TwoParticleSpace<f64>, CliError> {
    build_two_particle_space(&sc.space.basis, tensor, occ).op("scattering/two_particle_space")
}

/// Born-limit order from `max|T − V|` over three decades of the coupling.
fn born_order(sc: &Scenario, occ: &[f64]) -> Result<(Vec<(f64, f64)>, f64), CliError> {
    let hbar = sc.cfg.model.hbar;
    let mut points = Vec::new();
    for k in 0..4 {
        let s = 10f64.powi(-k);
        let p = pair_space(sc, &sc.tensor.tensor.scaled(s), occ)?;
        let z = ci(p.h0[0], hbar * sc.reg.eta);
        let t = t_matrix(&p, z).op("scattering/t_matrix")?;
        points.push((s * sc.cfg.model.strength, max_abs(&(&t.t - &p.v))));
    }
    let first = points[0];
    let last = points[points.len() - 1];
    let order = (first.1 / last.1).ln() / (first.0 / last.0).ln();
    Ok((points, order))
}

fn scattering_checks(sc: &Scenario, occ: &[f64]) -> Result<(Vec<Check>, serde_json::Value), CliError> {
    let hbar = sc.cfg.model.hbar;
    let m = sc.space.modes();
    let mut checks = Vec::new();
    let zero = pair_space(sc, &InteractionTensor::zeros(m), occ)?;
    if zero.dim() == 0 {
        return Ok((checks, json!({ "pair_dimension": 0 })));
    }
    let z0 = ci(zero.h0[0], hbar * sc.reg.eta);
    let t0 = t_matrix(&zero, z0).op("scattering/t_matrix")?;
    checks.push(Check::at_most("scattering/free-t-vanishes", max_abs(&t0.t), 0.0));
    let empty = pair_space(sc, &sc.tensor.tensor, &vec![0.0; m])?;
    let mut ls: f64 = 0.0;
    for f in 0..empty.dim() {
        let z = ci(empty.h0[f], hbar * sc.reg.eta);
        let a = t_matrix(&empty, z).op("scattering/t_matrix")?;
        let b = t_matrix_lippmann_schwinger(&empty, z).op("scattering/t_matrix_lippmann_schwinger")?;
        ls = ls.max(max_abs(&(&a.t - &b.t)));
    }
    checks.push(Check::at_most(
        "scattering/lippmann-schwinger-agreement",
        ls,
        LS_AGREEMENT,
    ));
    let mut info = json!({ "pair_dimension": empty.dim(), "lippmann_schwinger_defect": ls });
    if sc.cfg.model.strength > 0.0 {
        let (points, order) = born_order(sc, occ)?;
        checks.push(Check::at_least("scattering/born-order", order, 1.9).with_note("fitted over three decades"));
        checks.push(Check::at_most("scattering/born-order-upper", order, 2.1));
        info["born_points"] = json!(points);
        info["born_order"] = json!(order);
    }
    Ok((checks, info))
}

fn tmatrix(sc: &Scenario, out: &mut OutDir) -> Result<Vec<Check>, CliError> {
    let occ = sc.initial_occupations()?;
    let (checks, mut info) = scattering_checks(sc, &occ)?;
    let p = pair_space(sc, &sc.tensor.tensor, &occ)?;
    let hbar = sc.cfg.model.hbar;
    let mut rows = Vec::new();
    for f in 0..p.dim() {
        let z = ci(p.h0[f], hbar * sc.reg.eta);
        let (t_spec, g_spec) =
            qsf::scattering::diagnostic_spectra(&p, z, sc.reg.eta).op("scattering/diagnostic_spectra")?;
        for (i, e) in t_spec.iter().enumerate() {
            rows.push(vec![
                f as f64,
                p.h0[f],
                e.re,
                e.im,
                g_spec.get(i).copied().unwrap_or(f64::NAN),
            ]);
        }
    }
    if sc.cfg.output.formats.contains(&Format::Plot) {
        let plot = output::columns_plot(
            "Eigenvalues of the Pauli-corrected T-matrix at each on-shell pair energy, with the pair-space Γ spectrum.",
            &[
                ("pair", "index of the pair state fixing the energy"),
                ("energy", "free pair energy E (T evaluated at E + iħη)"),
                ("t_re", "real part of a T eigenvalue"),
                ("t_im", "imaginary part of a T eigenvalue"),
                ("gamma", "matching eigenvalue of Γ (ascending order)"),
            ],
            &rows,
        );
        out.write_plot("tmatrix_spectra", &plot)?;
    }
    info["occupations"] = json!(occ);
    info["checks"] = json!(checks);
    out.write_json("tmatrix.json", &info)?;
    Ok(checks)
}

#[derive(Serialize)]
struct GeneratorReport {
    mass_defect: f64,
    gain_loss_defect: f64,
    gamma_defect: f64,
    cp: qsf::generator::CpReport,
    stationarity: qsf::generator::StationarityReport,
    excluded_pairs: Vec<(usize, usize)>,
}

fn generator_checks(
    sc: &Scenario,
    gen: &GeneratorL<f64>,
    gamma_defect: f64,
    seed: u64,
) -> Result<(Vec<Check>, GeneratorReport), CliError> {
    let beta = sc.cfg.run.beta[0];
    let mu = sc.cfg.run.mu[0];
    let cp = check_relative_cp(gen, None, sc.cfg.run.trials, seed).op("generator/check_relative_cp")?;
    let stationarity = stationarity_at_equilibrium(gen, beta, mu, STATIONARITY).op("generator/stationarity")?;
    let report = GeneratorReport {
        mass_defect: max_abs(&gen.apply_to_mass()),
        gain_loss_defect: gain_loss_identity_defect(gen),
        gamma_defect,
        cp,
        stationarity,
        excluded_pairs: gen.excluded.clone(),
    };
    let mut checks = vec![
        Check::at_most("generator/mass-conservation", report.mass_defect, MASS_GENERATOR),
        Check::at_least("generator/relative-cp", report.cp.min_form, -CP_TOLERANCE),
        Check::at_most("generator/gain-loss-identity", report.gain_loss_defect, GAIN_LOSS),
        Check::at_most(
            "generator/equilibrium-stationarity",
            report.stationarity.max_residual,
            STATIONARITY,
        ),
    ];
    if !sc.cfg.regularization.mass_conserving_gamma {
        checks[0].note = Some("T-matrix Γ in use; exact conservation needs the collision Γ".into());
    }
    Ok((checks, report))
}

fn generator_cmd(sc: &Scenario, seed: u64, out: &mut OutDir) -> Result<Vec<Check>, CliError> {
    let occ = sc.initial_occupations()?;
    let scattering = sc.scattering(&occ)?;
    let gen = sc.generator(&scattering)?;
    let (checks, report) = generator_checks(sc, &gen, scattering.gamma_defect(), seed)?;
    out.write_json(
        "generator.json",
        &json!({ "report": report, "warnings": scattering.warnings, "checks": checks }),
    )?;
    Ok(checks)
}

fn history(sc: &Scenario) -> Result<(qsf::dynamics::HistoryReport, Vec<Check>), CliError> {
    let opts = HistoryOptions {
        bound: sc.cfg.run.history_bound,
        solver: sc.solver(),
        ..Default::default()
    };
    let report = verify_history_identity(&sc.z0, &sc.obs, sc.cfg.run.history_duration, &opts)
        .op("dynamics/verify_history_identity")?;
    let mut checks = vec![Check::at_most("history/defect", report.defect, HISTORY_DEFECT)];
    match report.order {
        Some(o) => checks.push(Check::at_least("history/convergence-order", o, HISTORY_ORDER)),
        None => checks
            .push(Check::at_most("history/convergence-order", 0.0, 0.0).with_note("all levels at the rounding floor")),
    }
    Ok((report, checks))
}

/// Random states for the inversion round trip.
fn random_states(cells: usize, count: usize, seed: u64) -> Vec<ClassicalState<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let beta = (0..cells).map(|_| rng.random_range(0.5..2.0)).collect();
            let mu = (0..cells).map(|_| rng.random_range(-1.0..-0.1)).collect();
            ClassicalState::new(beta, mu, vec![0.0; cells]).expect("positive β")
        })
        .collect()
}

fn gibbs_checks(sc: &Scenario, seed: u64) -> Result<Vec<Check>, CliError> {
    let solver = qsf::gibbs::SolverOptions {
        strict: false,
        ..sc.solver()
    };
    let cells = sc.obs.cell_count;
    let mut round_trip: f64 = 0.0;
    let mut rest: f64 = 0.0;
    let mut entropy_excess: f64 = f64::MIN;
    for z in random_states(cells, 20, seed) {
        let gs = gibbs_state(&z, &sc.obs).op("gibbs/gibbs_state")?;
        let targets = CellTargets::measure(&sc.obs, &gs.rho);
        let inv = invert_expectations(&targets, &sc.obs, &ClassicalState::uniform(cells, 1.0, -0.5), &solver)
            .op("gibbs/invert_expectations")?;
        round_trip = round_trip.max(inv.state.max_abs_difference(&z));
        for c in 0..cells {
            rest = rest.max(expect(&sc.obs.p_ops[c], &inv.gibbs.rho).abs());
        }
    }
    let gs = gibbs_state(&sc.z0, &sc.obs).op("gibbs/gibbs_state")?;
    let mut constraints: Vec<&qsf::Operator<f64>> = Vec::new();
    for c in 0..cells {
        constraints.push(&sc.obs.e_lab[c]);
        constraints.push(&sc.obs.p_lab[c]);
        constraints.push(&sc.obs.m_ops[c]);
    }
    let me = check_max_entropy(&gs, &constraints, 20, seed);
    entropy_excess = entropy_excess.max(me.max_entropy_excess);
    Ok(vec![
        Check::at_most("gibbs/inversion-round-trip", round_trip, ROUND_TRIP),
        Check::at_most("gibbs/rest-frame-momentum", rest, REST_MOMENTUM),
        Check::at_most("gibbs/max-entropy-excess", entropy_excess, MAX_ENTROPY_SLACK),
    ])
}

fn model_checks(sc: &Scenario) -> Vec<Check> {
    let obs = &sc.obs;
    let d = obs.hamiltonian.nrows();
    let mut e_sum = qsf::Operator::<f64>::zeros(d, d);
    let mut m_sum = qsf::Operator::<f64>::zeros(d, d);
    for c in 0..obs.cell_count {
        e_sum += &obs.e_lab[c];
        m_sum += &obs.m_ops[c];
    }
    let total_mass = sc.space.total_number() * ci(sc.space.basis.mass, 0.0);
    let i_over_hbar = ci(0.0, 1.0 / obs.hbar);
    let mut continuity: f64 = 0.0;
    for c in 0..obs.cell_count {
        let rate = qsf::fock::linalg::commutator(&obs.hamiltonian, &obs.m_ops[c]) * i_over_hbar;
        continuity = continuity.max(max_abs(&(rate - &obs.j_ops[c] + &obs.j_ops[c + 1])));
    }
    vec![
        Check::at_most("model/energy-partition", max_abs(&(e_sum - &obs.hamiltonian)), 1e-10),
        Check::at_most("model/mass-partition", max_abs(&(m_sum - total_mass)), 1e-10),
        Check::at_most("model/continuity", continuity, 1e-10),
        Check::at_most("model/tensor-quadrature", sc.tensor.quadrature_defect, 1e-6),
    ]
}

fn check(sc: &Scenario, seed: u64, out: &mut OutDir) -> Result<Vec<Check>, CliError> {
    let mut all = checks::algebra(&sc.space, &sc.obs.hamiltonian);
    all.extend(model_checks(sc));
    all.extend(gibbs_checks(sc, seed)?);
    let occ = sc.initial_occupations()?;
    all.extend(scattering_checks(sc, &occ)?.0);
    let scattering = sc.scattering(&occ)?;
    let gen = sc.generator(&scattering)?;
    all.extend(generator_checks(sc, &gen, scattering.gamma_defect(), seed)?.0);
    if sc.space.dim() <= HISTORY_MAX_DIM {
        all.extend(history(sc)?.1);
    }
    let mut short = sc.integrator();
    short.steps = short.steps.min(CHECK_STEPS);
    let closed = evolve_closed_hydro(&sc.obs, &sc.z0, &short).op("dynamics/evolve_closed_hydro")?;
    all.extend(conservation("closed", &closed));
    let kinetic = kinetic_trajectory(sc, sc.cfg.regularization.occupations, &short)?;
    all.extend(conservation(&kinetic.label, &kinetic));
    let passed = checks::all_pass(&all);
    out.write_json("check.json", &json!({ "passed": passed, "checks": all }))?;
    Ok(all)
}
