// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cells::OneBody;
use super::hamiltonian::one_body_operator;
use super::quadrature::Rule;
use crate::error::{Error, Result};
use crate::fock::linalg::HermitianEigen;
use crate::fock::{FockSpace, ModeBasis};
use crate::scalar::{c, polar, CVector, Operator, Real};

/// How the packet POVM is normalized on the box.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PovmNormalization {
    /// Packets projected onto the modes as they are; the grid sum of
    /// `f_ij Δx Δp` approximates `N` up to wall and grid losses.
    #[default]
    Raw,
    /// Each one-body density sandwiched as `S^{-1/2} F S^{-1/2}`, where `S`
    /// is the raw grid sum, so the sum reproduces `N` exactly.
    Box,
}

#[derive(Clone, Debug)]
pub struct PhaseSpaceSpec<T: Real> {
    pub positions: usize,
    pub momenta: usize,
    /// Packet width; defaults to `L / 2M`.
    pub sigma: Option<T>,
    /// Momentum cutoff; defaults to `ħ (k_M + 2/σ)`.
    pub p_max: Option<T>,
    pub normalization: PovmNormalization,
}

impl<T: Real> PhaseSpaceSpec<T> {
    /// A grid fine enough for the normalization to hold within a few
    /// percent at the default width.
    pub fn default_for(modes: usize) -> Self {
        Self {
            positions: 4 * modes,
            momenta: 8 * modes,
            sigma: None,
            p_max: None,
            normalization: PovmNormalization::Raw,
        }
    }
}

/// Positive operators `f_ij = Σ_hk a†_h ⟨u_h|F(x_i, p_j)|u_k⟩ a_k` on a
/// midpoint grid over `[0, L] × [-p_max, p_max]`, with
/// `F(x, p) = |g_{x,p}⟩⟨g_{x,p}| / 2πħ` and `g` a gaussian packet.
#[derive(Clone, Debug)]
pub struct PhaseSpaceGrid<T: Real> {
    pub positions: Vec<T>,
    pub momenta: Vec<T>,
    pub dx: T,
    pub dp: T,
    pub sigma: T,
    pub normalization: PovmNormalization,
    /// One-body matrices, row-major over `(position, momentum)`.
    pub coefficients: Vec<OneBody<T>>,
    pub f_ops: Vec<Operator<T>>,
    /// `S^{-1/2}` for [`PovmNormalization::Box`], identity otherwise.
    whitening: OneBody<T>,
}

pub fn phase_space_density<T: Real>(space: &FockSpace<T>, spec: &PhaseSpaceSpec<T>) -> Result<PhaseSpaceGrid<T>> {
    let basis = &space.basis;
    let m = basis.mode_count;
    let l = basis.box_length;
    if spec.positions == 0 || spec.momenta == 0 {
        return Err(Error::InvalidArgument(
            "phase-space grid needs at least one point per axis".into(),
        ));
    }
    let sigma = spec.sigma.unwrap_or(l / T::from_usize_lossy(2 * m));
    if !(sigma > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "packet width must be positive, got {sigma}"
        )));
    }
    let p_max = spec
        .p_max
        .unwrap_or(basis.hbar * (basis.wavenumber(m - 1) + T::lit(2.0) / sigma));
    if !(p_max > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "momentum cutoff must be positive, got {p_max}"
        )));
    }
    let dx = l / T::from_usize_lossy(spec.positions);
    let dp = T::lit(2.0) * p_max / T::from_usize_lossy(spec.momenta);
    let half = T::lit(0.5);
    let positions: Vec<T> = (0..spec.positions)
        .map(|i| dx * (T::from_usize_lossy(i) + half))
        .collect();
    let momenta: Vec<T> = (0..spec.momenta)
        .map(|j| -p_max + dp * (T::from_usize_lossy(j) + half))
        .collect();

    let projector = PacketProjector::new(basis, sigma);
    let mut raw = Vec::with_capacity(positions.len() * momenta.len());
    for &x in &positions {
        for &p in &momenta {
            raw.push(projector.density(x, p));
        }
    }
    let whitening = match spec.normalization {
        PovmNormalization::Raw => OneBody::<T>::identity(m, m),
        PovmNormalization::Box => {
            let cell = c(dx * dp);
            let s = raw.iter().fold(OneBody::<T>::zeros(m, m), |acc, f| acc + f * cell);
            let eig = HermitianEigen::new(&s);
            if eig.min_value() <= T::zero() {
                return Err(Error::numeric(
                    "phase_space_density",
                    "grid sum of packet densities is singular",
                ));
            }
            eig.map(|x| c(T::one() / x.sqrt()))
        }
    };
    let coefficients: Vec<OneBody<T>> = raw.iter().map(|f| &whitening * f * &whitening).collect();
    let f_ops = coefficients.iter().map(|a| one_body_operator(space, a)).collect();
    Ok(PhaseSpaceGrid {
        positions,
        momenta,
        dx,
        dp,
        sigma,
        normalization: spec.normalization,
        coefficients,
        f_ops,
        whitening,
    })
}

impl<T: Real> PhaseSpaceGrid<T> {
    pub fn len(&self) -> usize {
        self.f_ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_ops.is_empty()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.momenta.len() + j
    }

    /// `Σ_ij f_ij Δx Δp` as a one-body matrix.
    pub fn total_coefficient(&self) -> OneBody<T> {
        let m = self.whitening.nrows();
        let cell = c(self.dx * self.dp);
        self.coefficients
            .iter()
            .fold(OneBody::zeros(m, m), |acc, f| acc + f * cell)
    }

    /// Rest-frame densities `f⁰(x_i, p_j) = f(x_i, p_j + m v(x_i))`, with the
    /// packet evaluated at the shifted momentum rather than interpolated.
    /// `velocity` holds one value per grid position.
    pub fn rest_frame(&self, space: &FockSpace<T>, velocity: &[T]) -> Result<Vec<Operator<T>>> {
        if velocity.len() != self.positions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} velocities for {} grid positions",
                velocity.len(),
                self.positions.len()
            )));
        }
        let projector = PacketProjector::new(&space.basis, self.sigma);
        let mass = space.basis.mass;
        let mut out = Vec::with_capacity(self.len());
        for (i, &x) in self.positions.iter().enumerate() {
            for &p in &self.momenta {
                let f = projector.density(x, p + mass * velocity[i]);
                out.push(one_body_operator(space, &(&self.whitening * f * &self.whitening)));
            }
        }
        Ok(out)
    }
}

struct PacketProjector<'a, T: Real> {
    basis: &'a ModeBasis<T>,
    sigma: T,
    nodes: Vec<(T, T)>,
    modes_at_nodes: DMatrix<T>,
}

impl<'a, T: Real> PacketProjector<'a, T> {
    fn new(basis: &'a ModeBasis<T>, sigma: T) -> Self {
        let m = basis.mode_count;
        let l = basis.box_length;
        let panels = 2 * m + 2 + (l / sigma).ceil().to_usize().unwrap_or(0);
        let breaks: Vec<T> = (0..=panels)
            .map(|i| l * T::from_usize_lossy(i) / T::from_usize_lossy(panels))
            .collect();
        let nodes = Rule::<T>::new(16).composite(&breaks);
        let modes_at_nodes = DMatrix::from_fn(m, nodes.len(), |f, n| basis.mode_function(f, nodes[n].0));
        Self {
            basis,
            sigma,
            nodes,
            modes_at_nodes,
        }
    }

    /// `⟨u_h|g_{x,p}⟩` for all modes.
    fn overlaps(&self, x: T, p: T) -> CVector<T> {
        let s = self.sigma;
        let norm = (T::two_pi() * s * s).powf(T::lit(-0.25));
        let hbar = self.basis.hbar;
        let mut out = CVector::zeros(self.basis.mode_count);
        for (n, &(y, w)) in self.nodes.iter().enumerate() {
            let d = y - x;
            let g = polar(norm * (-(d * d) / (T::lit(4.0) * s * s)).exp(), p * y / hbar);
            for f in 0..out.len() {
                out[f] += g * c(w * self.modes_at_nodes[(f, n)]);
            }
        }
        out
    }

    /// `⟨u_h|F(x,p)|u_k⟩ = ⟨u_h|g⟩⟨g|u_k⟩ / 2πħ`.
    fn density(&self, x: T, p: T) -> OneBody<T> {
        let o = self.overlaps(x, p);
        &o * o.adjoint() * c(T::one() / (T::two_pi() * self.basis.hbar))
    }
}
