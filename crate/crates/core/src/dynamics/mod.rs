// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact unitary evolution and correlations, the history reconstruction of
//! the exact state from its accompanying Gibbs states, and the closed
//! evolution equations (Markovian, windowed memory, generator-driven).

pub mod closure;
pub mod history;
pub mod propagator;

pub use closure::{
    evolve_closed_hydro, evolve_exact, evolve_kinetic, evolve_kinetic_phase_space, evolve_kinetic_refreshed,
    evolve_with_memory, interface_current_correlation, IntegratorOptions, Quantity, RelevantSet, Trajectory,
};
pub use history::{
    history_exponent, hydro_operators, verify_history_identity, HistoryLevel, HistoryNode, HistoryOptions,
    HistoryReport, HISTORY_MAX_DIM,
};
pub use propagator::{
    commensurate_period, correlation, max_return_after_decay, unitary_evolve, CorrelationSeries, Propagator,
    RECURRENCE_TOLERANCE,
};
