//! Structured grid on the slab: a period box in x1, x2 and a unit interval
//! in x3 with cell-centered nodes.
//!
//! The tangential axes are periodic with nodes x_i = i*h. The normal axis is
//! not periodic; its nodes sit at cell centers x3 = (j + 1/2)*h3 so that no
//! node touches the vacuum faces x3 = 0 and x3 = 1.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Collocated slab grid. Unit torus sides and unit slab height, so h_i = 1/n_i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Node counts per axis.
    pub n: [usize; 3],
    /// Spacings per axis, h_i = 1/n_i.
    pub h: [f64; 3],
}

impl Grid {
    pub const MIN_NODES: usize = 4;
    /// The one-sided normal closures span five nodes.
    pub const MIN_NORMAL_NODES: usize = 6;

    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        let n = [n1, n2, n3];
        if n1 < Self::MIN_NODES || n2 < Self::MIN_NODES {
            return Err(Error::GridTooSmall {
                dims: n,
                min: Self::MIN_NODES,
            });
        }
        if n3 < Self::MIN_NORMAL_NODES {
            return Err(Error::GridTooSmall {
                dims: n,
                min: Self::MIN_NORMAL_NODES,
            });
        }
        let h = [1.0 / n1 as f64, 1.0 / n2 as f64, 1.0 / n3 as f64];
        Ok(Grid { n, h })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index, x1-fastest.
    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, i3: usize) -> usize {
        i1 + self.n[0] * (i2 + self.n[1] * i3)
    }

    /// Inverse of [`Grid::idx`].
    #[inline]
    pub fn coords_of(&self, idx: usize) -> (usize, usize, usize) {
        let i1 = idx % self.n[0];
        let rest = idx / self.n[0];
        (i1, rest % self.n[1], rest / self.n[1])
    }

    #[inline]
    pub fn x1(&self, i1: usize) -> f64 {
        i1 as f64 * self.h[0]
    }

    #[inline]
    pub fn x2(&self, i2: usize) -> f64 {
        i2 as f64 * self.h[1]
    }

    /// Cell-centered normal coordinate, never 0 or 1.
    #[inline]
    pub fn x3(&self, i3: usize) -> f64 {
        (i3 as f64 + 0.5) * self.h[2]
    }

    #[inline]
    pub fn pos(&self, i1: usize, i2: usize, i3: usize) -> [f64; 3] {
        [self.x1(i1), self.x2(i2), self.x3(i3)]
    }

    /// Measure of one cell; the midpoint-rule weight of every node.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    /// Distance from the node to the nearer vacuum face.
    #[inline]
    pub fn boundary_distance(&self, i3: usize) -> f64 {
        let x3 = self.x3(i3);
        x3.min(1.0 - x3)
    }

    /// End-corrected midpoint weight for the normal axis. The plain midpoint
    /// rule on the non-periodic axis satisfies
    /// `int f = h sum f + (h^2/24)[f'(1) - f'(0)] + O(h^4)`; folding
    /// one-sided estimates of the endpoint derivatives into the four rows
    /// nearest each face restores 4th-order accuracy with all weights
    /// positive. Tangential axes are periodic and need no correction.
    #[inline]
    pub fn corrected_normal_weight(&self, i3: usize) -> f64 {
        // gamma_k = l_k'(0) for the cubic through the first four cell centers.
        const GAMMA: [f64; 4] = [-71.0 / 24.0, 47.0 / 8.0, -31.0 / 8.0, 23.0 / 24.0];
        let n3 = self.n[2];
        let mut w = 1.0;
        if i3 < 4 {
            w -= GAMMA[i3] / 24.0;
        }
        if n3 - 1 - i3 < 4 {
            w -= GAMMA[n3 - 1 - i3] / 24.0;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centered_nodes_avoid_faces() {
        let g = Grid::new(8, 8, 16).unwrap();
        assert!(g.x3(0) > 0.0);
        assert!(g.x3(15) < 1.0);
        assert_eq!(g.x3(0), 0.5 / 16.0);
    }

    #[test]
    fn idx_roundtrip() {
        let g = Grid::new(5, 6, 7).unwrap();
        for idx in 0..g.len() {
            let (i1, i2, i3) = g.coords_of(idx);
            assert_eq!(g.idx(i1, i2, i3), idx);
        }
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::new(3, 8, 8).is_err());
        assert!(Grid::new(8, 8, 5).is_err());
    }

    #[test]
    fn corrected_quadrature_is_fourth_order_on_nonvanishing_integrands() {
        // int_0^1 x (1-x) (x - 1/2)^2 dx = 1/120; the integrand's derivative
        // does not vanish at the faces, so plain midpoint is O(h^2) while the
        // corrected rule is O(h^4).
        let exact = 1.0 / 120.0;
        let mut errs = Vec::new();
        for n3 in [16usize, 32, 64] {
            let g = Grid::new(4, 4, n3).unwrap();
            let mut acc = 0.0;
            for j in 0..n3 {
                let x = g.x3(j);
                acc += g.corrected_normal_weight(j) * x * (1.0 - x) * (x - 0.5) * (x - 0.5);
            }
            errs.push((acc * g.h[2] - exact).abs());
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order >= 3.8, "corrected-rule order {order}, errors {errs:?}");
    }
}
