// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use qsf::fock::linalg::{commutator, max_abs};
use qsf::fock::{FockSpace, Statistics};
use qsf::scalar::{ci, Operator};
use serde::Serialize;

/// One pass/fail line of a report.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub value: f64,
    pub relation: &'static str,
    pub limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(id: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            id: id.into(),
            passed: value <= limit,
            value,
            relation: "<=",
            limit,
            note: None,
        }
    }

    pub fn at_least(id: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            id: id.into(),
            passed: value >= limit,
            value,
            relation: ">=",
            limit,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Ladder-operator algebra and number conservation of `h`.
pub fn algebra(space: &FockSpace<f64>, h: &Operator<f64>) -> Vec<Check> {
    let d = space.dim();
    let mut below = Operator::zeros(d, d);
    for n in 0..space.max_total {
        below += space.sector_projector(n);
    }
    let sign = match space.statistics() {
        Statistics::Bose => -1.0,
        Statistics::Fermi => 1.0,
    };
    let mut relations: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    let mut diagonal: f64 = 0.0;
    for f in 0..space.modes() {
        let a = space.annihilator(f);
        adjoint = adjoint.max(max_abs(&(space.creator(f) - a.adjoint())));
        for g in 0..space.modes() {
            let ad = space.creator(g);
            let mut rel = &a * &ad + &ad * &a * ci(sign, 0.0);
            if f == g {
                rel -= Operator::identity(d, d);
            }
            relations = relations.max(max_abs(&(&below * rel * &below)));
            let b = space.annihilator(g);
            relations = relations.max(max_abs(&(&a * &b + &b * &a * ci(sign, 0.0))));
        }
        let n = space.number(f);
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { space.state(i)[f] as f64 } else { 0.0 };
                diagonal = diagonal.max((n[(i, j)] - ci(want, 0.0)).norm());
            }
        }
    }
    vec![
        Check::at_most("algebra/canonical-relations", relations, 1e-12),
        Check::at_most("algebra/adjointness", adjoint, 1e-12),
        Check::at_most("algebra/number-diagonal", diagonal, 1e-12),
        Check::at_most(
            "algebra/number-conservation",
            max_abs(&commutator(h, &space.total_number())),
            1e-12,
        ),
    ]
}

/// Largest `|Σ_c X_c(t) − Σ_c X_c(0)|` along a trajectory.
pub fn drift(totals: &[f64]) -> f64 {
    let first = totals.first().copied().unwrap_or(0.0);
    totals.iter().map(|v| (v - first).abs()).fold(0.0, f64::max)
}
