//! Value-semantic node fields: one real, three reals, or a 3x3 matrix per
//! grid node, stored x1-fastest.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::parallel;

/// One real per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            dims: grid.n,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        ScalarField {
            dims: grid.n,
            data: vec![value; grid.len()],
        }
    }

    /// Evaluate `f(x1, x2, x3)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64 + Sync) -> Self {
        let mut out = Self::zeros(grid);
        let g = *grid;
        let plane = g.n[0] * g.n[1];
        parallel::for_each_plane_mut(&mut out.data, plane, |i3, plane| {
            let x3 = g.x3(i3);
            for i2 in 0..g.n[1] {
                let x2 = g.x2(i2);
                let row = &mut plane[i2 * g.n[0]..(i2 + 1) * g.n[0]];
                for (i1, v) in row.iter_mut().enumerate() {
                    *v = f(g.x1(i1), x2, x3);
                }
            }
        });
        out
    }

    pub fn from_vec(grid: &Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.n,
                found: [data.len(), 1, 1],
            });
        }
        Ok(ScalarField { dims: grid.n, data })
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        if self.dims != grid.n {
            return Err(Error::ShapeMismatch {
                expected: grid.n,
                found: self.dims,
            });
        }
        Ok(())
    }

    /// Error if any entry is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite field entry at flat index {pos}"
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let mut out = self.clone();
        let plane = self.dims[0] * self.dims[1];
        parallel::for_each_plane_mut(&mut out.data, plane, |_, p| {
            for v in p.iter_mut() {
                *v = f(*v);
            }
        });
        out
    }

    /// Nodewise power, forwarding to `f64::powf`.
    pub fn powf(&self, e: f64) -> Self {
        self.map(|v| v.powf(e))
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.dims, other.dims);
        for (v, o) in self.data.iter_mut().zip(&other.data) {
            *v += a * o;
        }
    }

    /// Nodewise product.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dims, other.dims);
        let mut out = self.clone();
        for (v, o) in out.data.iter_mut().zip(&other.data) {
            *v *= o;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Plain dot product in storage order (deterministic).
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc + a * b)
    }

    /// Dot product weighted by a third field, in storage order.
    pub fn dot_weighted(&self, other: &Self, weight: &Self) -> f64 {
        debug_assert_eq!(self.dims, other.dims);
        debug_assert_eq!(self.dims, weight.dims);
        let mut acc = 0.0;
        for i in 0..self.data.len() {
            acc += weight.data[i] * self.data[i] * other.data[i];
        }
        acc
    }

    /// Midpoint-rule integral over the slab.
    pub fn integral(&self, grid: &Grid) -> f64 {
        debug_assert_eq!(self.dims, grid.n);
        let sum: f64 = self.data.iter().fold(0.0, |acc, v| acc + v);
        sum * grid.cell_volume()
    }

    #[inline]
    pub fn at(&self, grid: &Grid, i1: usize, i2: usize, i3: usize) -> f64 {
        self.data[grid.idx(i1, i2, i3)]
    }
}

/// Three reals per node, stored as separate component planes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub comps: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            comps: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    /// Evaluate a vector-valued closure at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64, f64) -> [f64; 3] + Sync) -> Self {
        // One pass per component keeps the field layout planar.
        let c0 = ScalarField::from_fn(grid, |a, b, c| f(a, b, c)[0]);
        let c1 = ScalarField::from_fn(grid, |a, b, c| f(a, b, c)[1]);
        let c2 = ScalarField::from_fn(grid, |a, b, c| f(a, b, c)[2]);
        VectorField { comps: [c0, c1, c2] }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.comps[0].dims()
    }

    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        for c in &self.comps {
            c.check_shape(grid)?;
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        for c in &self.comps {
            c.check_finite()?;
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.comps {
            c.scale(a);
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            c.axpy(a, o);
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn dot_weighted(&self, other: &Self, weight: &ScalarField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.dot_weighted(b, weight))
            .sum()
    }

    /// Max over nodes of the max-abs component.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0f64, |m, c| m.max(c.max_abs()))
    }

    /// Nodewise squared Euclidean norm as a scalar field.
    pub fn norm_sq_field(&self) -> ScalarField {
        let mut out = self.comps[0].mul(&self.comps[0]);
        for c in &self.comps[1..] {
            out.axpy(1.0, &c.mul(c));
        }
        out
    }

    #[inline]
    pub fn at(&self, grid: &Grid, i1: usize, i2: usize, i3: usize) -> [f64; 3] {
        let idx = grid.idx(i1, i2, i3);
        [
            self.comps[0].as_slice()[idx],
            self.comps[1].as_slice()[idx],
            self.comps[2].as_slice()[idx],
        ]
    }
}

/// A 3x3 matrix per node; entry `[i][j]` is row i, column j.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub comps: [[ScalarField; 3]; 3],
}

impl TensorField {
    pub fn zeros(grid: &Grid) -> Self {
        TensorField {
            comps: std::array::from_fn(|_| std::array::from_fn(|_| ScalarField::zeros(grid))),
        }
    }

    /// Constant matrix at every node.
    pub fn constant(grid: &Grid, m: [[f64; 3]; 3]) -> Self {
        TensorField {
            comps: std::array::from_fn(|i| {
                std::array::from_fn(|j| ScalarField::constant(grid, m[i][j]))
            }),
        }
    }

    pub fn identity(grid: &Grid) -> Self {
        Self::constant(
            grid,
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        )
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.comps[0][0].dims()
    }

    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        for row in &self.comps {
            for c in row {
                c.check_shape(grid)?;
            }
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        for row in &self.comps {
            for c in row {
                c.check_finite()?;
            }
        }
        Ok(())
    }

    /// Gather the matrix at one flat index.
    #[inline]
    pub fn mat_at(&self, idx: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.comps[i][j].as_slice()[idx]))
    }

    /// Scatter a matrix into one flat index.
    #[inline]
    pub fn set_mat(&mut self, idx: usize, m: [[f64; 3]; 3]) {
        for i in 0..3 {
            for j in 0..3 {
                self.comps[i][j].as_mut_slice()[idx] = m[i][j];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0f64, |m, c| m.max(c.max_abs()))
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (row, orow) in self.comps.iter_mut().zip(&other.comps) {
            for (c, o) in row.iter_mut().zip(orow) {
                c.axpy(a, o);
            }
        }
    }
}

/// 3x3 helpers used by the per-node kernels.
pub mod mat3 {
    /// Determinant by first-row cofactor expansion.
    #[inline]
    pub fn det(m: &[[f64; 3]; 3]) -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Adjugate (transpose of the cofactor matrix), so `m * adj(m) = det(m) * I`.
    #[inline]
    pub fn adjugate(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ]
    }

    #[inline]
    pub fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        out
    }

    #[inline]
    pub fn scale(m: &[[f64; 3]; 3], s: f64) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] * s))
    }

    /// Determinant through LU with partial pivoting; an independent route
    /// kept for oracle checks against the cofactor expansion.
    pub fn det_lu(m: &[[f64; 3]; 3]) -> f64 {
        let mut a = *m;
        let mut det = 1.0;
        for col in 0..3 {
            let mut piv = col;
            for row in col + 1..3 {
                if a[row][col].abs() > a[piv][col].abs() {
                    piv = row;
                }
            }
            if a[piv][col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                a.swap(piv, col);
                det = -det;
            }
            det *= a[col][col];
            for row in col + 1..3 {
                let factor = a[row][col] / a[col][col];
                for k in col..3 {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
        det
    }
}
