// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::scalar::Real;

/// Gauss–Legendre rule on `[-1, 1]`, converted once to the working scalar.
#[derive(Clone, Debug)]
pub struct Rule<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    /// # Panics
    /// If `order == 0`.
    pub fn new(order: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("quadrature order must be positive"));
        let (nodes, weights) = gl
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (T::lit(x), T::lit(w)))
            .unzip();
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Nodes and weights of the composite rule over consecutive breakpoints;
    /// empty or reversed pieces are skipped.
    pub fn composite(&self, breaks: &[T]) -> Vec<(T, T)> {
        let mut out = Vec::with_capacity(self.order() * breaks.len());
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                out.extend(self.on(w[0], w[1]));
            }
        }
        out
    }

    pub fn integrate(&self, a: T, b: T, f: impl Fn(T) -> T) -> T {
        self.on(a, b).fold(T::zero(), |s, (x, w)| s + w * f(x))
    }
}

/// Sorted, deduplicated breakpoints clipped to `[lo, hi]`, always including
/// both ends.
pub(crate) fn breakpoints<T: Real>(lo: T, hi: T, interior: &[T]) -> Vec<T> {
    let mut b = vec![lo, hi];
    b.extend(interior.iter().copied().filter(|&x| x > lo && x < hi));
    b.sort_by(|a, b| a.partial_cmp(b).unwrap());
    b.dedup();
    b
}
