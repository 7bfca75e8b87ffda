//! Finite-difference first-derivative stencils on uniform grids.
//!
//! Interior nodes use centered stencils; the `order / 2` nodes nearest each
//! edge use one-sided stencils of the same order built from the closest
//! `order + 1` nodes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Formal accuracy order of a first-derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StencilOrder {
    Second,
    Fourth,
    #[default]
    Sixth,
    Eighth,
}

impl StencilOrder {
    pub fn order(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
            StencilOrder::Sixth => 6,
            StencilOrder::Eighth => 8,
        }
    }

    pub fn from_order(order: usize) -> Option<Self> {
        match order {
            2 => Some(StencilOrder::Second),
            4 => Some(StencilOrder::Fourth),
            6 => Some(StencilOrder::Sixth),
            8 => Some(StencilOrder::Eighth),
            _ => None,
        }
    }

    /// Fewest nodes along an axis the stencil can be applied to.
    pub fn min_nodes(self) -> usize {
        self.order() + 1
    }
}

/// Weights for the `m`-th derivative at `x0` from samples at `xs`
/// (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// First-derivative operator for a line of `n` equally spaced samples.
#[derive(Debug, Clone)]
pub struct DerivativeStencil {
    n: usize,
    half: usize,
    inv_h: f64,
    interior: Vec<f64>,
    // (first node index, weights) for each edge node, left edge then right edge.
    edges: Vec<(usize, Vec<f64>)>,
}

impl DerivativeStencil {
    pub fn new(order: StencilOrder, n: usize, h: f64) -> Result<Self> {
        let width = order.order() + 1;
        if n < width {
            return Err(Error::GridTooSmall {
                needed: width,
                got: n,
            });
        }
        let half = order.order() / 2;
        let offsets: Vec<f64> = (0..width).map(|k| k as f64 - half as f64).collect();
        let interior = fornberg_weights(0.0, &offsets, 1);

        let mut edges = Vec::with_capacity(2 * half);
        let window: Vec<f64> = (0..width).map(|k| k as f64).collect();
        for i in 0..half {
            edges.push((0, fornberg_weights(i as f64, &window, 1)));
        }
        let start = n - width;
        for i in (n - half)..n {
            edges.push((start, fornberg_weights((i - start) as f64, &window, 1)));
        }
        Ok(Self {
            n,
            half,
            inv_h: 1.0 / h,
            interior,
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Weights `(first_index, weights)` producing the derivative at node `i`.
    pub fn weights_at(&self, i: usize) -> (usize, &[f64]) {
        if i < self.half {
            let (s, w) = &self.edges[i];
            (*s, w)
        } else if i >= self.n - self.half {
            let (s, w) = &self.edges[self.half + i - (self.n - self.half)];
            (*s, w)
        } else {
            (i - self.half, &self.interior)
        }
    }

    pub fn inv_h(&self) -> f64 {
        self.inv_h
    }

    /// Derivative of a contiguous line of samples.
    pub fn apply(&self, line: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(line.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let (s, w) = self.weights_at(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, wk) in w.iter().enumerate() {
                acc += line[s + k] * *wk;
            }
            *o = acc * self.inv_h;
        }
    }
}
