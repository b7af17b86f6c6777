//! Flow-map kinematics: deformation gradient, its inverse, the jacobian
//! determinant, the cofactor transpose, and the pulled-back differential
//! operators.
//!
//! Matrix convention: `T[i][j]` is row i, column j. The deformation gradient
//! has entries `grad[i][j] = d_j eta^i`, its inverse satisfies
//! `inv * grad = I`, and the cofactor transpose is `cof = det * inv`, which
//! is divergence-free in its first index (the Piola identity).

use crate::error::{Error, Result};
use crate::field::{mat3, ScalarField, TensorField, VectorField};
use crate::grid::Grid;
use crate::stencil;

/// Derived per-node geometry of a flow map.
#[derive(Debug, Clone)]
pub struct Kinematics {
    /// Deformation gradient.
    pub grad: TensorField,
    /// Inverse deformation gradient.
    pub inv: TensorField,
    /// Jacobian determinant, positive at every node.
    pub det: ScalarField,
    /// Cofactor transpose `det * inv`, built from the adjugate directly.
    pub cof: TensorField,
}

/// Range statistics used by the admissibility guardrails.
#[derive(Debug, Clone, Copy)]
pub struct KinStats {
    pub det_min: f64,
    pub det_max: f64,
    /// Max over nodes of the max-abs entry of `inv - I`.
    pub inv_dev: f64,
    /// Flat index of the node attaining `inv_dev`.
    pub worst: usize,
}

impl Kinematics {
    /// Build from a deformation-gradient field. The inverse is the
    /// closed-form 3x3 adjugate divided by the determinant; the cofactor
    /// transpose reuses the adjugate exactly. A nonpositive determinant
    /// anywhere is a hard error carrying the worst node.
    pub fn from_grad(grad: TensorField, grid: &Grid) -> Result<Self> {
        grad.check_shape(grid)?;
        let mut inv = TensorField::zeros(grid);
        let mut det = ScalarField::zeros(grid);
        let mut cof = TensorField::zeros(grid);
        let mut worst: Option<(usize, f64)> = None;
        for idx in 0..grid.len() {
            let m = grad.mat_at(idx);
            let d = mat3::det(&m);
            if d <= 0.0 {
                let cur = worst.map(|(_, v)| v).unwrap_or(f64::INFINITY);
                if d < cur {
                    worst = Some((idx, d));
                }
                continue;
            }
            let adj = mat3::adjugate(&m);
            det.as_mut_slice()[idx] = d;
            cof.set_mat(idx, adj);
            inv.set_mat(idx, mat3::scale(&adj, 1.0 / d));
        }
        if let Some((idx, d)) = worst {
            let (i1, i2, i3) = grid.coords_of(idx);
            return Err(Error::DegenerateMap { i1, i2, i3, det: d });
        }
        Ok(Kinematics { grad, inv, det, cof })
    }

    /// Kinematics of a flow map stored as a displacement from the identity.
    pub fn from_displacement(disp: &VectorField, grid: &Grid) -> Result<Self> {
        disp.check_shape(grid)?;
        let mut grad = stencil::vector_gradient(disp, grid);
        for i in 0..3 {
            let ones = ScalarField::constant(grid, 1.0);
            grad.comps[i][i].axpy(1.0, &ones);
        }
        Self::from_grad(grad, grid)
    }

    pub fn identity(grid: &Grid) -> Self {
        Kinematics {
            grad: TensorField::identity(grid),
            inv: TensorField::identity(grid),
            det: ScalarField::constant(grid, 1.0),
            cof: TensorField::identity(grid),
        }
    }

    /// Uniform (constant-matrix) kinematics, handy for closed-form oracles.
    pub fn uniform(grid: &Grid, m: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_grad(TensorField::constant(grid, m), grid)
    }

    pub fn stats(&self) -> KinStats {
        let mut det_min = f64::INFINITY;
        let mut det_max = f64::NEG_INFINITY;
        let mut inv_dev = 0.0f64;
        let mut worst = 0usize;
        let n = self.det.len();
        for idx in 0..n {
            let d = self.det.as_slice()[idx];
            det_min = det_min.min(d);
            det_max = det_max.max(d);
            let a = self.inv.mat_at(idx);
            for i in 0..3 {
                for j in 0..3 {
                    let dev = (a[i][j] - if i == j { 1.0 } else { 0.0 }).abs();
                    if dev > inv_dev {
                        inv_dev = dev;
                        worst = idx;
                    }
                }
            }
        }
        KinStats {
            det_min,
            det_max,
            inv_dev,
            worst,
        }
    }

    /// `det^e` as a field.
    pub fn det_pow(&self, e: f64) -> ScalarField {
        self.det.powf(e)
    }
}

/// Divergence of the cofactor transpose in its first index:
/// `out^i = sum_k d_k cof[k][i]`. Vanishes identically in the continuum and
/// up to discretization error here; exactly zero when `cof` is constant.
pub fn piola_divergence(kin: &Kinematics, grid: &Grid) -> VectorField {
    let mut out = VectorField::zeros(grid);
    for i in 0..3 {
        for k in 0..3 {
            let dk = stencil::deriv(&kin.cof.comps[k][i], grid, k);
            out.comps[i].axpy(1.0, &dk);
        }
    }
    out
}

/// The pulled-back gradient, divergence, curl, and curl matrix of a vector
/// field along a flow map. With identity kinematics these reduce to the
/// plain discrete operators.
#[derive(Debug, Clone)]
pub struct LieDerivs {
    /// `[i][r] = inv[s][r] d_s F^i` (full gradient).
    pub grad: TensorField,
    /// `inv[s][r] d_s F^r`.
    pub div: ScalarField,
    /// `[i] = eps_ijk inv[s][j] d_s F^k`.
    pub curl: VectorField,
    /// Antisymmetric matrix `[i][j] = inv[s][j] d_s F^i - inv[s][i] d_s F^j`.
    pub curl_mat: TensorField,
}

pub fn lie_derivatives(f: &VectorField, kin: &Kinematics, grid: &Grid) -> LieDerivs {
    let df = stencil::vector_gradient(f, grid);
    LieDerivs {
        grad: pullback_gradient(&df, kin, grid),
        div: pullback_divergence(&df, kin, grid),
        curl: pullback_curl(&df, kin, grid),
        curl_mat: pullback_curl_matrix(&df, kin, grid),
    }
}

/// `[i][r] = inv[s][r] df[i][s]` from a precomputed plain gradient.
pub fn pullback_gradient(df: &TensorField, kin: &Kinematics, grid: &Grid) -> TensorField {
    let mut out = TensorField::zeros(grid);
    for idx in 0..grid.len() {
        let d = df.mat_at(idx);
        let a = kin.inv.mat_at(idx);
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for r in 0..3 {
                m[i][r] = a[0][r] * d[i][0] + a[1][r] * d[i][1] + a[2][r] * d[i][2];
            }
        }
        out.set_mat(idx, m);
    }
    out
}

pub fn pullback_divergence(df: &TensorField, kin: &Kinematics, grid: &Grid) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for idx in 0..grid.len() {
        let d = df.mat_at(idx);
        let a = kin.inv.mat_at(idx);
        let mut acc = 0.0;
        for r in 0..3 {
            for s in 0..3 {
                acc += a[s][r] * d[r][s];
            }
        }
        out.as_mut_slice()[idx] = acc;
    }
    out
}

pub fn pullback_curl(df: &TensorField, kin: &Kinematics, grid: &Grid) -> VectorField {
    curl_against(df, &kin.inv, grid)
}

/// `out^i = eps_ijk m[s][j] df[k][s]` for an arbitrary matrix field `m`;
/// with `m = inv` this is the pulled-back curl, with `m = d/dt inv` the
/// right side of the curl transport identity.
pub fn curl_against(df: &TensorField, m: &TensorField, grid: &Grid) -> VectorField {
    let mut out = VectorField::zeros(grid);
    for idx in 0..grid.len() {
        let d = df.mat_at(idx);
        let a = m.mat_at(idx);
        let entry = |j: usize, k: usize| -> f64 {
            a[0][j] * d[k][0] + a[1][j] * d[k][1] + a[2][j] * d[k][2]
        };
        let c = [
            entry(1, 2) - entry(2, 1),
            entry(2, 0) - entry(0, 2),
            entry(0, 1) - entry(1, 0),
        ];
        for i in 0..3 {
            out.comps[i].as_mut_slice()[idx] = c[i];
        }
    }
    out
}

/// Antisymmetric by construction: the diagonal is exactly zero and
/// `[j][i] = -[i][j]` bit-for-bit.
pub fn pullback_curl_matrix(df: &TensorField, kin: &Kinematics, grid: &Grid) -> TensorField {
    let mut out = TensorField::zeros(grid);
    for idx in 0..grid.len() {
        let d = df.mat_at(idx);
        let a = kin.inv.mat_at(idx);
        let entry = |j: usize, i: usize| -> f64 {
            a[0][j] * d[i][0] + a[1][j] * d[i][1] + a[2][j] * d[i][2]
        };
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in (i + 1)..3 {
                let v = entry(j, i) - entry(i, j);
                m[i][j] = v;
                m[j][i] = -v;
            }
        }
        out.set_mat(idx, m);
    }
    out
}

/// Time derivatives of the inverse deformation gradient and the jacobian
/// under a velocity gradient `dv`:
/// `d/dt inv = -inv dv inv` and `d/dt det = det * tr(dv inv)`.
pub fn kinematic_rates(kin: &Kinematics, dv: &TensorField, grid: &Grid) -> (TensorField, ScalarField) {
    let mut d_inv = TensorField::zeros(grid);
    let mut d_det = ScalarField::zeros(grid);
    for idx in 0..grid.len() {
        let a = kin.inv.mat_at(idx);
        let g = dv.mat_at(idx);
        let ag = mat3::matmul(&a, &g);
        let aga = mat3::matmul(&ag, &a);
        d_inv.set_mat(idx, mat3::scale(&aga, -1.0));
        let mut tr = 0.0;
        for r in 0..3 {
            for s in 0..3 {
                tr += a[s][r] * g[r][s];
            }
        }
        d_det.as_mut_slice()[idx] = kin.det.as_slice()[idx] * tr;
    }
    (d_inv, d_det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{perturbed_map, smooth_random_fields, smooth_scalar, SplitMix64};

    fn grid(n: usize) -> Grid {
        Grid::new(n, n, 2 * n).unwrap()
    }

    #[test]
    fn identity_map_kinematics() {
        let g = grid(8);
        let disp = VectorField::zeros(&g);
        let kin = Kinematics::from_displacement(&disp, &g).unwrap();
        assert_eq!(kin.det.max_abs(), 1.0);
        let mut dev = kin.inv.clone();
        dev.axpy(-1.0, &TensorField::identity(&g));
        assert_eq!(dev.max_abs(), 0.0);
    }

    #[test]
    fn uniform_dilation() {
        let g = grid(6);
        let m = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        let kin = Kinematics::uniform(&g, m).unwrap();
        assert!((kin.det.as_slice()[0] - 8.0).abs() < 1e-14);
        assert!((kin.inv.comps[0][0].as_slice()[0] - 0.5).abs() < 1e-14);
        assert!((kin.cof.comps[1][1].as_slice()[0] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_map_is_an_error() {
        let g = grid(6);
        let m = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let err = Kinematics::uniform(&g, m).unwrap_err();
        assert!(matches!(err, Error::DegenerateMap { .. }));
    }

    #[test]
    fn random_smooth_grad_inverse_and_det_oracle() {
        let g = grid(8);
        let mut rng = SplitMix64::new(7);
        // Entries within I +- 0.1.
        let noise = smooth_random_fields(&g, &mut rng, 9, 0.1);
        let mut grad = TensorField::identity(&g);
        for i in 0..3 {
            for j in 0..3 {
                grad.comps[i][j].axpy(1.0, &noise[3 * i + j]);
            }
        }
        let kin = Kinematics::from_grad(grad.clone(), &g).unwrap();
        let mut worst_prod = 0.0f64;
        let mut worst_det = 0.0f64;
        for idx in 0..g.len() {
            let a = kin.inv.mat_at(idx);
            let m = grad.mat_at(idx);
            let prod = mat3::matmul(&a, &m);
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst_prod = worst_prod.max((prod[i][j] - expect).abs());
                }
            }
            worst_det =
                worst_det.max((kin.det.as_slice()[idx] - mat3::det_lu(&m)).abs());
        }
        assert!(worst_prod <= 1e-12, "inv*grad deviation {worst_prod}");
        assert!(worst_det <= 1e-13, "det oracle deviation {worst_det}");
    }

    #[test]
    fn piola_exact_for_identity_and_normal_affine() {
        let g = grid(8);
        let kin = Kinematics::identity(&g);
        assert_eq!(piola_divergence(&kin, &g).max_abs(), 0.0);

        // eta = x + (x3-linear displacement): constant cofactor, exact zero.
        let disp = VectorField::from_fn(&g, |_, _, x3| [0.02 * x3, -0.01 * x3, 0.05 * x3]);
        let kin = Kinematics::from_displacement(&disp, &g).unwrap();
        assert!(piola_divergence(&kin, &g).max_abs() < 1e-13);
    }

    #[test]
    fn piola_refines_at_second_order() {
        let mut errs = Vec::new();
        for n in [8usize, 16, 32] {
            let g = grid(n);
            let disp = perturbed_map(&g, 0.05);
            let kin = Kinematics::from_displacement(&disp, &g).unwrap();
            errs.push(piola_divergence(&kin, &g).max_abs());
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order >= 1.8, "piola order {order}, errors {errs:?}");
    }

    #[test]
    fn lie_derivatives_reduce_to_plain_operators_at_identity() {
        let g = grid(8);
        let f = VectorField::from_fn(&g, |x1, x2, x3| {
            [
                (2.0 * std::f64::consts::PI * x1).sin() + x3,
                x2 * x2 * 0.0 + (2.0 * std::f64::consts::PI * x2).cos(),
                x3 * (1.0 - x3),
            ]
        });
        let kin = Kinematics::identity(&g);
        let lie = lie_derivatives(&f, &kin, &g);
        let df = stencil::vector_gradient(&f, &g);
        let mut dev = lie.grad.clone();
        dev.axpy(-1.0, &df);
        assert!(dev.max_abs() < 1e-13);

        let mut plain_div = ScalarField::zeros(&g);
        for r in 0..3 {
            plain_div.axpy(1.0, &df.comps[r][r]);
        }
        let mut div_dev = lie.div.clone();
        div_dev.axpy(-1.0, &plain_div);
        assert!(div_dev.max_abs() < 1e-13);
    }

    #[test]
    fn curl_matrix_is_antisymmetric_and_doubles_curl_norm() {
        let g = grid(8);
        let mut rng = SplitMix64::new(3);
        let f = VectorField {
            comps: smooth_random_fields(&g, &mut rng, 3, 1.0).try_into().unwrap(),
        };
        let disp = perturbed_map(&g, 0.03);
        let kin = Kinematics::from_displacement(&disp, &g).unwrap();
        let lie = lie_derivatives(&f, &kin, &g);
        for i in 0..3 {
            assert_eq!(lie.curl_mat.comps[i][i].max_abs(), 0.0);
        }
        // Frobenius^2 of the curl matrix equals 2 |curl|^2 pointwise.
        let mut worst = 0.0f64;
        for idx in 0..g.len() {
            let m = lie.curl_mat.mat_at(idx);
            let frob: f64 = m.iter().flatten().map(|v| v * v).sum();
            let c: f64 = (0..3)
                .map(|i| {
                    let v = lie.curl.comps[i].as_slice()[idx];
                    v * v
                })
                .sum();
            worst = worst.max((frob - 2.0 * c).abs() / (1.0 + frob.abs()));
        }
        assert!(worst <= 1e-12, "frobenius identity deviation {worst}");
    }

    #[test]
    fn curl_of_pulled_back_gradient_refines_to_zero() {
        let mut errs = Vec::new();
        for n in [8usize, 16, 32] {
            let g = grid(n);
            let disp = perturbed_map(&g, 0.05);
            let kin = Kinematics::from_displacement(&disp, &g).unwrap();
            let h = smooth_scalar(&g);
            let dh = stencil::gradient(&h, &g);
            // F^k = inv[r][k] d_r h.
            let f = {
                let mut f = VectorField::zeros(&g);
                for idx in 0..g.len() {
                    let a = kin.inv.mat_at(idx);
                    for k in 0..3 {
                        let mut acc = 0.0;
                        for r in 0..3 {
                            acc += a[r][k] * dh.comps[r].as_slice()[idx];
                        }
                        f.comps[k].as_mut_slice()[idx] = acc;
                    }
                }
                f
            };
            let lie = lie_derivatives(&f, &kin, &g);
            errs.push(lie.curl.max_abs());
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order >= 1.8, "curl-of-gradient order {order}, errors {errs:?}");
    }

    #[test]
    fn rates_vanish_at_rest_and_match_direct_substitution() {
        let g = grid(6);
        let kin = Kinematics::identity(&g);
        let (da, dj) = kinematic_rates(&kin, &TensorField::zeros(&g), &g);
        assert_eq!(da.max_abs(), 0.0);
        assert_eq!(dj.max_abs(), 0.0);

        // dv = I at the identity: d(inv) = -I, d(det) = 3.
        let (da, dj) = kinematic_rates(&kin, &TensorField::identity(&g), &g);
        assert!((da.comps[0][0].as_slice()[0] + 1.0).abs() < 1e-14);
        assert_eq!(da.comps[0][1].max_abs(), 0.0);
        assert!((dj.as_slice()[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rates_match_finite_differences() {
        let g = grid(8);
        let disp = perturbed_map(&g, 0.04);
        let vel = VectorField::from_fn(&g, |x1, x2, x3| {
            let t = 2.0 * std::f64::consts::PI;
            [(t * x2).sin() * 0.3, (t * x1).cos() * 0.2, x3 * (1.0 - x3)]
        });
        let kin = Kinematics::from_displacement(&disp, &g).unwrap();
        let dv = stencil::vector_gradient(&vel, &g);
        let (da, dj) = kinematic_rates(&kin, &dv, &g);

        let eps = 1e-6;
        let mut disp_eps = disp.clone();
        disp_eps.axpy(eps, &vel);
        let kin_eps = Kinematics::from_displacement(&disp_eps, &g).unwrap();

        let mut worst_a = 0.0f64;
        let mut worst_j = 0.0f64;
        for idx in 0..g.len() {
            let a0 = kin.inv.mat_at(idx);
            let a1 = kin_eps.inv.mat_at(idx);
            let d = da.mat_at(idx);
            for i in 0..3 {
                for j in 0..3 {
                    worst_a = worst_a.max(((a1[i][j] - a0[i][j]) / eps - d[i][j]).abs());
                }
            }
            let fd = (kin_eps.det.as_slice()[idx] - kin.det.as_slice()[idx]) / eps;
            worst_j = worst_j.max((fd - dj.as_slice()[idx]).abs());
        }
        assert!(worst_a <= 1e-5, "inverse rate fd deviation {worst_a}");
        assert!(worst_j <= 1e-5, "det rate fd deviation {worst_j}");
    }
}
