// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! The irreversible generator `L′` on bilinears `a_h† a_k`, built from the
//! scattering ingredients, with its conservation, positivity and
//! equilibrium audits.

pub mod audit;
pub mod operator;

pub use audit::{
    check_relative_cp, gain_loss_identity_defect, oracle_comparison, stationarity_at_equilibrium,
    stationarity_at_infinite_temperature, trace_preservation_defect, CpReport, CpViolation, OraclePoint,
    StationarityReport, CP_STEP_FRACTION, CP_TOLERANCE,
};
pub use operator::{build_generator, GeneratorL, GeneratorOptions};
