// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("quadrature defect {defect:.3e} at order {order} exceeds tolerance; try order {suggested}")]
    Accuracy {
        defect: f64,
        order: usize,
        suggested: usize,
    },

    #[error("numeric failure in {op}: {msg}")]
    Numeric { op: &'static str, msg: String },

    #[error("degenerate constraints: {0}")]
    DegenerateConstraints(String),

    #[error("no convergence after {iterations} iterations (best residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("resolvent near-singular: z = {z_re}+{z_im}i lies {distance:.3e} from eigenvalue {eig_re}+{eig_im}i")]
    SpectralProximity {
        z_re: f64,
        z_im: f64,
        eig_re: f64,
        eig_im: f64,
        distance: f64,
    },

    #[error("history quadrature error estimate {estimate:.3e} exceeds {bound:.1e}; refine the node grid")]
    RefineNeeded { estimate: f64, bound: f64 },

    #[error("expectation inversion failed at history node {node}: {source}")]
    NodeInversion {
        node: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numeric(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numeric { op, msg: msg.into() }
    }
}
