// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-particle modes, the truncated Fock space, ladder operators, and the
//! dense linear-algebra kernel everything else is built on.

pub mod basis;
pub mod linalg;
pub mod space;

pub use basis::{ModeBasis, Statistics};
pub use linalg::{expm_and_frechet, HermitianEigen};
pub use space::{FockSpace, LadderKind, Occupation};
