//! Frozen-coefficient weighted second-order operators.
//!
//! For frozen kinematics `(A, J)` and `q = w^(1+alpha) J^(-1/alpha)`:
//!
//! - elastic:    `[Le G]^i = -(q A[k][r] A[s][r] G^i,_s),_k`
//! - divergence: `[Ld G]^i = -(1/alpha) (q A[k][i] A[s][r] G^r,_s),_k`
//! - curl:       `[Lc H]^i = -(q A[k][r] H[r][i]),_k` for antisymmetric `H`
//!
//! The outer divergence is realized as the exact matrix transpose of the
//! inner derivative, so the discrete integration by parts holds with no
//! boundary remainder (the boundary fluxes carry the vanishing `w^(1+alpha)`
//! factor): the elastic and divergence operators are symmetric positive
//! semidefinite against the plain pairing by construction. The pure normal
//! block of the elastic operator uses the same half-node flux form as the
//! degenerate elliptic operator and coincides with it for identity
//! kinematics.

use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::geometry::Kinematics;
use crate::grid::Grid;
use crate::stencil;
use crate::weights::WeightField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearOperatorKind {
    Elastic,
    Divergence,
    Curl,
}

/// Precomputed coefficient fields for one frozen kinematics.
#[derive(Debug, Clone)]
pub struct FrozenLinearOps {
    grid: Grid,
    alpha: f64,
    /// `c[k][s] = q (A A^T)[k][s]` with `q = w^(1+alpha) J^(-1/alpha)`;
    /// symmetric positive definite per node.
    c: TensorField,
    /// Half-node samples of `c[2][2]` for the normal flux block.
    c33_half: Vec<f64>,
    /// `q A[k][i]`.
    q_inv: TensorField,
    /// Frozen inverse deformation gradient.
    inv: TensorField,
}

impl FrozenLinearOps {
    pub fn new(kin: &Kinematics, wf: &WeightField, grid: &Grid) -> Self {
        let q = wf.pow(1.0 + wf.alpha).mul(&kin.det_pow(-1.0 / wf.alpha));
        let mut c = TensorField::zeros(grid);
        let mut q_inv = TensorField::zeros(grid);
        for idx in 0..grid.len() {
            let a = kin.inv.mat_at(idx);
            let qv = q.as_slice()[idx];
            for k in 0..3 {
                for s in 0..3 {
                    let mut acc = 0.0;
                    for r in 0..3 {
                        acc += a[k][r] * a[s][r];
                    }
                    c.comps[k][s].as_mut_slice()[idx] = qv * acc;
                }
                for i in 0..3 {
                    q_inv.comps[k][i].as_mut_slice()[idx] = qv * a[k][i];
                }
            }
        }
        let c33_half = stencil::half_node_weights(&c.comps[2][2], grid, 1.0 + wf.alpha);
        FrozenLinearOps {
            grid: *grid,
            alpha: wf.alpha,
            c,
            c33_half,
            q_inv,
            inv: kin.inv.clone(),
        }
    }

    /// `[Le G]^i = sum_(k,s) Dk^T (c[k][s] Ds G^i)` with the (3,3) block in
    /// half-node flux form.
    pub fn elastic(&self, g: &VectorField) -> VectorField {
        let mut out = VectorField::zeros(&self.grid);
        for i in 0..3 {
            let d: [ScalarField; 3] =
                std::array::from_fn(|s| stencil::deriv(&g.comps[i], &self.grid, s));
            for k in 0..3 {
                for s in 0..3 {
                    if k == 2 && s == 2 {
                        continue;
                    }
                    let flux = self.c.comps[k][s].mul(&d[s]);
                    out.comps[i].axpy(1.0, &stencil::deriv_transpose(&flux, &self.grid, k));
                }
            }
            out.comps[i].axpy(
                -1.0,
                &stencil::normal_flux_div(&g.comps[i], &self.c33_half, &self.grid),
            );
        }
        out
    }

    /// The pulled-back divergence `A[s][r] Ds G^r` against the frozen inverse.
    pub fn frozen_divergence(&self, g: &VectorField) -> ScalarField {
        let mut div = ScalarField::zeros(&self.grid);
        for r in 0..3 {
            for s in 0..3 {
                let ds = stencil::deriv(&g.comps[r], &self.grid, s);
                div.axpy(1.0, &self.inv.comps[s][r].mul(&ds));
            }
        }
        div
    }

    /// `[Ld G]^i = (1/alpha) sum_k Dk^T (q A[k][i] div_frozen G)`.
    pub fn divergence(&self, g: &VectorField) -> VectorField {
        let div = self.frozen_divergence(g);
        let mut out = VectorField::zeros(&self.grid);
        for i in 0..3 {
            for k in 0..3 {
                let flux = self.q_inv.comps[k][i].mul(&div);
                out.comps[i].axpy(
                    1.0 / self.alpha,
                    &stencil::deriv_transpose(&flux, &self.grid, k),
                );
            }
        }
        out
    }

    /// `[Lc H]^i = sum_k Dk^T (q A[k][r] H[r][i])` for antisymmetric `H`.
    pub fn curl(&self, h: &TensorField) -> Result<VectorField> {
        let scale = h.max_abs();
        for i in 0..3 {
            for j in 0..3 {
                let mut asym = 0.0f64;
                for (a, b) in h.comps[i][j]
                    .as_slice()
                    .iter()
                    .zip(h.comps[j][i].as_slice())
                {
                    asym = asym.max((a + b).abs());
                }
                if asym > 1e-12 * (1.0 + scale) {
                    return Err(Error::Contract(format!(
                        "curl operator needs an antisymmetric matrix field; \
                         asymmetry {asym:.3e} at entries ({i}, {j})"
                    )));
                }
            }
        }
        let mut out = VectorField::zeros(&self.grid);
        for i in 0..3 {
            for k in 0..3 {
                let mut flux = ScalarField::zeros(&self.grid);
                for r in 0..3 {
                    flux.axpy(1.0, &self.q_inv.comps[k][r].mul(&h.comps[r][i]));
                }
                out.comps[i].axpy(1.0, &stencil::deriv_transpose(&flux, &self.grid, k));
            }
        }
        Ok(out)
    }

    /// Sum of the elastic and divergence operators, the principal part of
    /// the fixed-point scheme.
    pub fn elastic_plus_divergence(&self, g: &VectorField) -> VectorField {
        let mut out = self.elastic(g);
        out.axpy(1.0, &self.divergence(g));
        out
    }

    /// Rough Jacobi diagonal of the elastic block, component-independent;
    /// only used to precondition the implicit solves.
    pub fn jacobi_diag(&self) -> ScalarField {
        let g = &self.grid;
        let plane = g.n[0] * g.n[1];
        let n3 = g.n[2];
        // Sum of squared 4th-order first-derivative coefficients.
        let tang = 130.0 / 144.0;
        let (s1, s2) = (tang / (g.h[0] * g.h[0]), tang / (g.h[1] * g.h[1]));
        let inv_h3sq = 1.0 / (g.h[2] * g.h[2]);
        let mut d = ScalarField::zeros(g);
        for j in 0..n3 {
            for i in 0..plane {
                let idx = j * plane + i;
                let up = if j + 1 < n3 { self.c33_half[j * plane + i] } else { 0.0 };
                let down = if j > 0 { self.c33_half[(j - 1) * plane + i] } else { 0.0 };
                d.as_mut_slice()[idx] = self.c.comps[0][0].as_slice()[idx] * s1
                    + self.c.comps[1][1].as_slice()[idx] * s2
                    + (up + down) * inv_h3sq;
            }
        }
        d
    }
}

/// Dispatch on the operator family. `field` carries the vector argument for
/// the elastic/divergence variants; `matrix` the antisymmetric argument for
/// the curl variant.
pub fn linear_operator_apply(
    kind: LinearOperatorKind,
    field: Option<&VectorField>,
    matrix: Option<&TensorField>,
    kin: &Kinematics,
    wf: &WeightField,
    grid: &Grid,
) -> Result<VectorField> {
    let ops = FrozenLinearOps::new(kin, wf, grid);
    match kind {
        LinearOperatorKind::Elastic => {
            let g = field.ok_or_else(|| Error::Contract("elastic operator needs a vector".into()))?;
            Ok(ops.elastic(g))
        }
        LinearOperatorKind::Divergence => {
            let g = field
                .ok_or_else(|| Error::Contract("divergence operator needs a vector".into()))?;
            Ok(ops.divergence(g))
        }
        LinearOperatorKind::Curl => {
            let h = matrix
                .ok_or_else(|| Error::Contract("curl operator needs a matrix field".into()))?;
            ops.curl(h)
        }
    }
}
