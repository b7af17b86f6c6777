//! Mixed tangential/normal derivative indices and their application.
//!
//! An index `(m1, m2, n)` stands for `d1^m1 d2^m2 d3^n`. Discrete operators
//! commute only up to truncation error, so applications are composed in the
//! fixed order x1 powers, then x2, then x3, and enumeration is graded
//! lexicographic for reproducible report layouts.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::stencil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DerivIndex {
    pub m1: usize,
    pub m2: usize,
    /// Number of normal derivatives; each one shifts the weight power by one.
    pub n: usize,
}

impl DerivIndex {
    pub const ZERO: DerivIndex = DerivIndex { m1: 0, m2: 0, n: 0 };

    #[inline]
    pub fn total(&self) -> usize {
        self.m1 + self.m2 + self.n
    }

    pub fn label(&self) -> String {
        format!("({},{}),{}", self.m1, self.m2, self.n)
    }
}

/// All indices with `lo <= m1 + m2 + n <= hi` in graded lexicographic order.
pub fn indices(lo: usize, hi: usize) -> Vec<DerivIndex> {
    let mut out = Vec::new();
    for total in lo..=hi {
        for m1 in 0..=total {
            for m2 in 0..=(total - m1) {
                out.push(DerivIndex {
                    m1,
                    m2,
                    n: total - m1 - m2,
                });
            }
        }
    }
    out
}

/// Guard for derivative order against the configured cap and against the
/// normal-stencil support: `n3` must cover the composed five-point
/// closures, which requires `n3 >= 2b + 5`.
pub fn check_order(b: usize, grid: &Grid, max_order: usize) -> Result<()> {
    if b > max_order {
        return Err(Error::DerivOrder {
            order: b,
            max: max_order,
        });
    }
    let needed = (2 * b + 5).max(Grid::MIN_NORMAL_NODES);
    if grid.n[2] < needed {
        return Err(Error::Resolution {
            order: b,
            n3: grid.n[2],
            needed,
        });
    }
    Ok(())
}

/// Apply `d1^m1 d2^m2 d3^n` to a scalar field.
pub fn apply(f: &ScalarField, idx: DerivIndex, grid: &Grid) -> ScalarField {
    let mut cur = f.clone();
    for _ in 0..idx.m1 {
        cur = stencil::deriv(&cur, grid, stencil::AXIS_X1);
    }
    for _ in 0..idx.m2 {
        cur = stencil::deriv(&cur, grid, stencil::AXIS_X2);
    }
    for _ in 0..idx.n {
        cur = stencil::deriv(&cur, grid, stencil::AXIS_X3);
    }
    cur
}

/// Componentwise application to a vector field.
pub fn apply_vector(f: &VectorField, idx: DerivIndex, grid: &Grid) -> VectorField {
    VectorField {
        comps: std::array::from_fn(|i| apply(&f.comps[i], idx, grid)),
    }
}
