// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use num_complex::Complex;

use super::hamiltonian::{one_body_operator, two_body_operator};
use super::potential::Potential;
use super::quadrature::{breakpoints, Rule};
use super::tensor::InteractionTensor;
use crate::error::{Error, Result};
use crate::fock::linalg::commutator;
use crate::fock::{FockSpace, ModeBasis};
use crate::scalar::{c, ci, Operator, Real};

/// One-body coefficient matrix `A_hk` of `Σ A_hk a†_h a_k`.
pub type OneBody<T> = DMatrix<Complex<T>>;

/// Mode-space ingredients of one cell's operators.
#[derive(Clone, Debug)]
pub struct CellCoefficients<T: Real> {
    /// `(ħ²/2m) ∫_c u_h' u_k'`, plus an even share of the quadrature residual.
    pub kinetic: OneBody<T>,
    /// `m ∫_c u_h u_k`, plus an even share of the residual against `m δ_hk`.
    pub mass: OneBody<T>,
    /// `(-iħ/2) ∫_c (u_h u_k' - u_h' u_k)`.
    pub momentum: OneBody<T>,
    /// Pair interaction whose midpoint lies in the cell; the cell energy
    /// carries `½` of it.
    pub interaction: InteractionTensor<T>,
}

/// Coarse-grained energy, mass and momentum on `C` uniform cells, with the
/// interface currents that make discrete continuity exact.
///
/// `e_lab`/`p_lab` are lab-frame; `e_ops`/`p_ops` are the rest-frame
/// versions at `velocity`:
/// `E⁰_c = E_c - v_c P_c + ½ v_c² M_c`, `P⁰_c = P_c - v_c M_c`.
#[derive(Clone, Debug)]
pub struct CellObservables<T: Real> {
    pub cell_count: usize,
    pub edges: Vec<T>,
    pub velocity: Vec<T>,
    pub hbar: T,
    /// `Σ_c E_c`, the Hamiltonian these cells partition.
    pub hamiltonian: Operator<T>,
    pub e_lab: Vec<Operator<T>>,
    pub p_lab: Vec<Operator<T>>,
    pub m_ops: Vec<Operator<T>>,
    pub e_ops: Vec<Operator<T>>,
    pub p_ops: Vec<Operator<T>>,
    /// Mass currents through the `C + 1` interfaces; the walls carry zero.
    pub j_ops: Vec<Operator<T>>,
    /// Energy currents, same layout as `j_ops`.
    pub je_ops: Vec<Operator<T>>,
    pub coefficients: Vec<CellCoefficients<T>>,
    /// Largest entry of the two-body residual `V - Σ_c V_c` that was spread
    /// evenly over the cells.
    pub interaction_residual: T,
}

/// Builds cell observables partitioning `H = Σ E_f n_f + ½ Σ V a†a†aa`.
///
/// `potential` supplies the real-space kernel for the midpoint assignment of
/// pair energy; `tensor` is the total two-body tensor the cells must sum to.
/// Any difference (quadrature error, or an effective tensor without a
/// real-space kernel) is split evenly between the cells.
pub fn build_cell_observables<T: Real>(
    space: &FockSpace<T>,
    potential: &Potential<T>,
    tensor: &InteractionTensor<T>,
    cells: usize,
    quad_order: usize,
    velocity: &[T],
) -> Result<CellObservables<T>> {
    if cells == 0 {
        return Err(Error::InvalidArgument("cell count must be at least 1".into()));
    }
    if velocity.len() != cells {
        return Err(Error::InvalidArgument(format!(
            "{} velocities for {cells} cells",
            velocity.len()
        )));
    }
    if quad_order < 2 {
        return Err(Error::InvalidArgument(
            "cell quadrature order must be at least 2".into(),
        ));
    }
    let basis = &space.basis;
    let m = basis.mode_count;
    let l = basis.box_length;
    let cf = T::from_usize_lossy(cells);
    let edges: Vec<T> = (0..=cells).map(|i| l * T::from_usize_lossy(i) / cf).collect();
    let rule = Rule::<T>::new(quad_order);

    let mut coeffs: Vec<CellCoefficients<T>> = Vec::with_capacity(cells);
    let kin_scale = basis.hbar * basis.hbar / (T::lit(2.0) * basis.mass);
    let mom_scale = ci(T::zero(), -basis.hbar * T::lit(0.5));
    let pair = if potential.is_zero() {
        vec![InteractionTensor::zeros(m); cells]
    } else {
        midpoint_tensors(basis, potential, &edges, quad_order)
    };
    for (cell, vc) in pair.into_iter().enumerate() {
        let (a, b) = (edges[cell], edges[cell + 1]);
        let mut overlap = DMatrix::<T>::zeros(m, m);
        let mut grad = DMatrix::<T>::zeros(m, m);
        let mut flux = DMatrix::<T>::zeros(m, m);
        for (x, w) in rule.on(a, b) {
            let u: Vec<T> = (0..m).map(|f| basis.mode_function(f, x)).collect();
            let du: Vec<T> = (0..m).map(|f| basis.mode_derivative(f, x)).collect();
            for h in 0..m {
                for k in 0..m {
                    overlap[(h, k)] += w * u[h] * u[k];
                    grad[(h, k)] += w * du[h] * du[k];
                    flux[(h, k)] += w * (u[h] * du[k] - du[h] * u[k]);
                }
            }
        }
        coeffs.push(CellCoefficients {
            kinetic: grad.map(|x| c(x * kin_scale)),
            mass: overlap.map(|x| c(x * basis.mass)),
            momentum: flux.map(|x| mom_scale * c(x)),
            interaction: vc,
        });
    }

    // Spread the residuals so the partitions are exact.
    let share = T::one() / cf;
    let mut kin_res = OneBody::<T>::from_fn(m, m, |h, k| if h == k { c(basis.energies[h]) } else { c(T::zero()) });
    let mut mass_res = OneBody::<T>::from_fn(m, m, |h, k| if h == k { c(basis.mass) } else { c(T::zero()) });
    let mut pair_res = tensor.clone();
    for cc in &coeffs {
        kin_res -= &cc.kinetic;
        mass_res -= &cc.mass;
        pair_res = pair_res.sub(&cc.interaction);
    }
    let interaction_residual = pair_res.max_abs();
    let pair_share = pair_res.scaled(share);
    for cc in coeffs.iter_mut() {
        cc.kinetic += &kin_res * c(share);
        cc.mass += &mass_res * c(share);
        cc.interaction = cc.interaction.add(&pair_share);
    }

    let half = T::lit(0.5);
    let e_lab: Vec<Operator<T>> = coeffs
        .iter()
        .map(|cc| one_body_operator(space, &cc.kinetic) + two_body_operator(space, &cc.interaction, half))
        .collect();
    let m_ops: Vec<Operator<T>> = coeffs.iter().map(|cc| one_body_operator(space, &cc.mass)).collect();
    let p_lab: Vec<Operator<T>> = coeffs.iter().map(|cc| one_body_operator(space, &cc.momentum)).collect();
    let d = space.dim();
    let hamiltonian = e_lab.iter().fold(Operator::zeros(d, d), |acc, e| acc + e);
    let j_ops = interface_currents(&hamiltonian, &m_ops, basis.hbar);
    let je_ops = interface_currents(&hamiltonian, &e_lab, basis.hbar);

    let mut obs = CellObservables {
        cell_count: cells,
        edges,
        velocity: velocity.to_vec(),
        hbar: basis.hbar,
        hamiltonian,
        e_ops: Vec::new(),
        p_ops: Vec::new(),
        e_lab,
        p_lab,
        m_ops,
        j_ops,
        je_ops,
        coefficients: coeffs,
        interaction_residual,
    };
    obs.set_velocity(velocity)?;
    Ok(obs)
}

/// `J_c = -(i/ħ)[H, Σ_{c'<c} D_{c'}]` for the `C - 1` inner interfaces, zero
/// at the walls, so that `(i/ħ)[H, D_c] = J_c - J_{c+1}` exactly.
pub fn interface_currents<T: Real>(h: &Operator<T>, densities: &[Operator<T>], hbar: T) -> Vec<Operator<T>> {
    let d = h.nrows();
    let cells = densities.len();
    let factor = ci(T::zero(), -T::one() / hbar);
    let mut out = vec![Operator::zeros(d, d)];
    let mut left = Operator::zeros(d, d);
    for density in densities.iter().take(cells.saturating_sub(1)) {
        left += density;
        out.push(commutator(h, &left) * factor);
    }
    out.push(Operator::zeros(d, d));
    out
}

impl<T: Real> CellObservables<T> {
    /// Re-evaluates the rest-frame operators at a new velocity field.
    pub fn set_velocity(&mut self, velocity: &[T]) -> Result<()> {
        if velocity.len() != self.cell_count || velocity.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "velocity field must be finite, one value per cell".into(),
            ));
        }
        self.velocity = velocity.to_vec();
        self.e_ops = (0..self.cell_count).map(|i| self.rest_energy(i, velocity[i])).collect();
        self.p_ops = (0..self.cell_count)
            .map(|i| self.rest_momentum(i, velocity[i]))
            .collect();
        Ok(())
    }

    pub fn with_velocity(&self, velocity: &[T]) -> Result<Self> {
        let mut out = self.clone();
        out.set_velocity(velocity)?;
        Ok(out)
    }

    /// `E_c - v P_c + ½ v² M_c`.
    pub fn rest_energy(&self, cell: usize, v: T) -> Operator<T> {
        &self.e_lab[cell] - &self.p_lab[cell] * c(v) + &self.m_ops[cell] * c(T::lit(0.5) * v * v)
    }

    /// `P_c - v M_c`.
    pub fn rest_momentum(&self, cell: usize, v: T) -> Operator<T> {
        &self.p_lab[cell] - &self.m_ops[cell] * c(v)
    }

    pub fn total_mass(&self) -> Operator<T> {
        let d = self.hamiltonian.nrows();
        self.m_ops.iter().fold(Operator::zeros(d, d), |acc, m| acc + m)
    }

    /// Cell midpoints.
    pub fn centers(&self) -> Vec<T> {
        self.edges.windows(2).map(|w| (w[0] + w[1]) * T::lit(0.5)).collect()
    }
}

/// Pair-interaction tensors split by the cell containing `(x + y)/2`.
///
/// Integrates in `s = (x+y)/2`, `r = x - y` (unit Jacobian): for fixed `s`
/// the box allows `|r| ≤ 2 min(s, L - s)`.
fn midpoint_tensors<T: Real>(
    basis: &ModeBasis<T>,
    potential: &Potential<T>,
    edges: &[T],
    order: usize,
) -> Vec<InteractionTensor<T>> {
    let m = basis.mode_count;
    let l = basis.box_length;
    let rule = Rule::<T>::new(order);
    let w = potential.reach().min(l);
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(edges.len() - 1);
    let mut ux = vec![T::zero(); m];
    let mut uy = vec![T::zero(); m];
    for cell in edges.windows(2) {
        let mut t = InteractionTensor::zeros(m);
        let mut acc = vec![T::zero(); m.pow(4)];
        let sbreaks = breakpoints(cell[0], cell[1], &[l * half]);
        for (s, ws) in rule.composite(&sbreaks) {
            let reach = T::lit(2.0) * s.min(l - s);
            let rbreaks = breakpoints(-reach, reach, &[-w, T::zero(), w]);
            for (r, wr) in rule.composite(&rbreaks) {
                let weight = ws * wr * potential.eval(r);
                let x = s + r * half;
                let y = s - r * half;
                for f in 0..m {
                    ux[f] = basis.mode_function(f, x);
                    uy[f] = basis.mode_function(f, y);
                }
                for l1 in 0..m {
                    for l2 in 0..m {
                        for f2 in 0..m {
                            let partial = weight * ux[l1] * uy[l2] * uy[f2];
                            let base = ((l1 * m + l2) * m + f2) * m;
                            for f1 in 0..m {
                                acc[base + f1] += partial * ux[f1];
                            }
                        }
                    }
                }
            }
        }
        for l1 in 0..m {
            for l2 in 0..m {
                for f2 in 0..m {
                    for f1 in 0..m {
                        t.set(l1, l2, f2, f1, c(acc[((l1 * m + l2) * m + f2) * m + f1]));
                    }
                }
            }
        }
        t.symmetrize();
        out.push(t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::{expect, hermiticity_defect, max_abs};
    use crate::fock::Statistics;
    use crate::model::hamiltonian::build_hamiltonian;
    use crate::model::potential::PotentialKind;
    use crate::model::tensor::interaction_tensor;
    use std::f64::consts::PI;

    struct Setup {
        space: FockSpace<f64>,
        pot: Potential<f64>,
        tensor: InteractionTensor<f64>,
    }

    fn setup(m: usize, n: usize, stats: Statistics, lambda: f64) -> Setup {
        let basis = ModeBasis::new(m, PI, 1.0, 1.0, stats).unwrap();
        let space = FockSpace::new(basis, n).unwrap();
        let pot = Potential::new(PotentialKind::Gaussian, lambda, PI / 10.0).unwrap();
        let tensor = interaction_tensor(&space.basis, &pot, 32).unwrap().tensor;
        Setup { space, pot, tensor }
    }

    fn build(s: &Setup, cells: usize) -> CellObservables<f64> {
        build_cell_observables(&s.space, &s.pot, &s.tensor, cells, 24, &vec![0.0; cells]).unwrap()
    }

    /// `∫_0^L u_h u_k'` from the antiderivative of `sin(ax) cos(bx)`.
    fn sine_cosine(h: usize, k: usize) -> f64 {
        let (a, b) = ((h + 1) as f64, (k + 1) as f64);
        let anti = |x: f64| {
            let mut v = -((a + b) * x).cos() / (2.0 * (a + b));
            if a != b {
                v -= ((a - b) * x).cos() / (2.0 * (a - b));
            }
            v
        };
        (2.0 / PI) * b * (anti(PI) - anti(0.0))
    }

    #[test]
    fn single_cell_reproduces_global_operators() {
        let s = setup(3, 2, Statistics::Bose, 0.2);
        let obs = build(&s, 1);
        let h = build_hamiltonian(&s.space, &s.tensor);
        assert!(max_abs(&(&obs.e_ops[0] - &h)) < 1e-12);
        assert!(max_abs(&(&obs.m_ops[0] - s.space.total_number())) < 1e-12);
        let p_total = s.space.one_body(|h, k| Complex::new(0.0, -1.0) * c(sine_cosine(h, k)));
        assert!(max_abs(&(&obs.p_ops[0] - p_total)) < 1e-12);
        assert!(max_abs(&obs.j_ops[0]) == 0.0 && max_abs(&obs.j_ops[1]) == 0.0);
        assert!(max_abs(&commutator(&h, &obs.m_ops[0])) < 1e-12);
    }

    #[test]
    fn partitions_are_exact_and_operators_hermitian() {
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let s = setup(3, 2, stats, 0.3);
            let obs = build(&s, 3);
            let h = build_hamiltonian(&s.space, &s.tensor);
            assert!(max_abs(&(&obs.hamiltonian - &h)) < 1e-12);
            assert!(max_abs(&(obs.total_mass() - s.space.total_number())) < 1e-12);
            assert!(obs.interaction_residual < 1e-8);
            for c in 0..3 {
                for op in [
                    &obs.e_ops[c],
                    &obs.m_ops[c],
                    &obs.p_ops[c],
                    &obs.j_ops[c],
                    &obs.je_ops[c],
                ] {
                    assert!(hermiticity_defect(op) < 1e-12);
                }
                assert!(max_abs(&commutator(&obs.m_ops[c], &obs.total_mass())) < 1e-12);
                // cell masses commute only up to the mode truncation: the
                // Fock commutator is the one-body image of the mode-matrix one
                for c2 in 0..3 {
                    let (a, b) = (&obs.coefficients[c].mass, &obs.coefficients[c2].mass);
                    let mode_comm = a * b - b * a;
                    let lifted = crate::model::one_body_operator(&s.space, &mode_comm);
                    assert!(max_abs(&(commutator(&obs.m_ops[c], &obs.m_ops[c2]) - lifted)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn continuity_telescopes() {
        let s = setup(3, 3, Statistics::Bose, 0.7);
        let obs = build(&s, 3);
        let i_over_hbar = Complex::new(0.0, 1.0);
        for c in 0..3 {
            let lhs = commutator(&obs.hamiltonian, &obs.m_ops[c]) * i_over_hbar;
            let rhs = &obs.j_ops[c] - &obs.j_ops[c + 1];
            assert!(max_abs(&(lhs - rhs)) < 1e-12);
            let lhs = commutator(&obs.hamiltonian, &obs.e_lab[c]) * i_over_hbar;
            let rhs = &obs.je_ops[c] - &obs.je_ops[c + 1];
            assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }
    }

    #[test]
    fn velocity_shift_is_linear_in_momentum() {
        let s = setup(2, 2, Statistics::Bose, 0.1);
        let obs = build(&s, 2);
        let shifted = obs.with_velocity(&[0.3, -0.2]).unwrap();
        for cell in 0..2 {
            let w = shifted.velocity[cell];
            let diff = &shifted.p_ops[cell] - &obs.p_ops[cell] + &obs.m_ops[cell] * c(w);
            assert!(max_abs(&diff) < 1e-14);
        }
    }

    #[test]
    fn cell_masses_sum_to_particle_number() {
        let s = setup(3, 2, Statistics::Fermi, 0.1);
        let obs = build(&s, 2);
        for i in 0..s.space.dim() {
            let e = s.space.basis_vector(i);
            let rho = &e * e.adjoint();
            let total: f64 = obs.m_ops.iter().map(|m| expect(m, &rho)).sum();
            assert!((total - s.space.particle_number(i) as f64).abs() < 1e-12);
        }
    }

    /// Free two-level superposition: the interface current oscillates at the
    /// Bohr frequency `(E_2 - E_1)/ħ`.
    #[test]
    fn free_interface_current_oscillates_at_bohr_frequency() {
        let s = setup(2, 1, Statistics::Bose, 0.0);
        let obs = build(&s, 2);
        let e = &s.space.basis.energies;
        let omega = e[1] - e[0];
        let one = s.space.index_of(&[1, 0]).unwrap();
        let two = s.space.index_of(&[0, 1]).unwrap();
        let expect_at = |t: f64| {
            let mut psi = crate::scalar::CVector::<f64>::zeros(s.space.dim());
            psi[one] = Complex::from_polar(0.5f64.sqrt(), -e[0] * t);
            psi[two] = Complex::from_polar(0.5f64.sqrt(), -e[1] * t);
            (psi.adjoint() * &obs.j_ops[1] * &psi)[(0, 0)].re
        };
        let a = expect_at(0.0);
        let b = expect_at(PI / (2.0 * omega));
        assert!(a.hypot(b) > 1e-3);
        for k in 1..20 {
            let t = 0.37 * k as f64;
            let model = a * (omega * t).cos() + b * (omega * t).sin();
            assert!((expect_at(t) - model).abs() < 1e-12);
        }
    }
}
