//! The flow-map acceleration of the degenerate acoustic equation.
//!
//! The equation is `w^alpha eta_tt^i + (w^(1+alpha) A[k][i] det^(-1/alpha)),_k = 0`
//! with `A` the inverse deformation gradient. The acceleration is evaluated
//! in the expanded form
//!
//! `accel^i = -(1+alpha) (d_k w) A[k][i] det^(-1/alpha)
//!            - w * d_k (A[k][i] det^(-1/alpha))`
//!
//! so no node divides by `w`; the derivative of the coefficient tensor is
//! assembled from the product rules for the inverse and the determinant
//! applied to discrete second derivatives of the map.

use crate::error::Result;
use crate::field::{ScalarField, TensorField, VectorField};
use crate::geometry::{self, Kinematics};
use crate::grid::Grid;
use crate::stencil;
use crate::weights::WeightField;

use super::state::FlowState;

/// Acceleration of a state; derives the kinematics from the displacement.
pub fn acceleration(state: &FlowState, wf: &WeightField, grid: &Grid) -> Result<VectorField> {
    let kin = state.kinematics(grid)?;
    Ok(accel_from_kin(&kin, wf, grid))
}

/// Acceleration from prebuilt kinematics. Exposed separately so closed-form
/// oracles can feed constant deformation tensors directly.
pub fn accel_from_kin(kin: &Kinematics, wf: &WeightField, grid: &Grid) -> VectorField {
    let alpha = wf.alpha;
    let jpow = kin.det_pow(-1.0 / alpha);

    // Second derivatives of the map: dd[l] holds d_l applied to every entry
    // of the deformation gradient.
    let dd: [TensorField; 3] = std::array::from_fn(|l| TensorField {
        comps: std::array::from_fn(|r| {
            std::array::from_fn(|s| stencil::deriv(&kin.grad.comps[r][s], grid, l))
        }),
    });

    let mut out = VectorField::zeros(grid);
    let n = grid.len();
    for idx in 0..n {
        let a = kin.inv.mat_at(idx);
        let det = kin.det.as_slice()[idx];
        let jp = jpow.as_slice()[idx];
        let w = wf.w.as_slice()[idx];
        let dw = [
            wf.grad.comps[0].as_slice()[idx],
            wf.grad.comps[1].as_slice()[idx],
            wf.grad.comps[2].as_slice()[idx],
        ];

        // div_p[i] = sum_k d_k (A[k][i] det^(-1/alpha)), via
        // d_l A = -A (d_l grad) A and d_l det = det tr(A d_l grad).
        let mut div_p = [0.0f64; 3];
        for l in 0..3 {
            let dg = dd[l].mat_at(idx);
            // ag = A * dg, aga = ag * A.
            let mut ag = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    ag[i][j] = a[i][0] * dg[0][j] + a[i][1] * dg[1][j] + a[i][2] * dg[2][j];
                }
            }
            let mut trace = 0.0;
            for r in 0..3 {
                for s in 0..3 {
                    trace += a[s][r] * dg[r][s];
                }
            }
            // Only row k = l of d_l(A det^jpow) enters the divergence.
            for i in 0..3 {
                let da_li =
                    -(ag[l][0] * a[0][i] + ag[l][1] * a[1][i] + ag[l][2] * a[2][i]);
                div_p[i] += jp * (da_li - trace / alpha * a[l][i]);
            }
        }

        for i in 0..3 {
            let grad_term = dw[0] * a[0][i] + dw[1] * a[1][i] + dw[2] * a[2][i];
            out.comps[i].as_mut_slice()[idx] =
                -(1.0 + alpha) * grad_term * jp - w * div_p[i];
        }
        let _ = det;
    }
    out
}

/// `max |curl_eta(accel)|`: the acceleration is a pulled-back gradient, so
/// this vanishes at discretization order.
pub fn curl_acceleration_residual(
    state: &FlowState,
    wf: &WeightField,
    grid: &Grid,
) -> Result<f64> {
    let kin = state.kinematics(grid)?;
    let accel = accel_from_kin(&kin, wf, grid);
    let curl =
        geometry::pullback_curl(&stencil::vector_gradient(&accel, grid), &kin, grid);
    Ok(curl.max_abs())
}

/// Weighted norm `(int w^alpha |f|^2)^(1/2)` used for the fixed-point defect.
pub fn weighted_norm(f: &VectorField, w_alpha: &ScalarField, grid: &Grid) -> f64 {
    (f.dot_weighted(f, w_alpha) * grid.cell_volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::perturbed_map;
    use crate::weights::WeightSpec;

    fn setup(n1: usize, n3: usize) -> (Grid, WeightField) {
        let g = Grid::new(n1, n1, n3).unwrap();
        let wf = WeightField::build(&WeightSpec::Parabolic, 2.0, 1.0, &g).unwrap();
        (g, wf)
    }

    #[test]
    fn identity_map_acceleration_is_weight_gradient() {
        let (g, wf) = setup(8, 16);
        let state = FlowState::rest(&g);
        let a = acceleration(&state, &wf, &g).unwrap();
        // accel = -(1+alpha) grad w = (0, 0, -2 (1 - 2 x3)) for alpha = 1.
        assert_eq!(a.comps[0].max_abs(), 0.0);
        assert_eq!(a.comps[1].max_abs(), 0.0);
        let expect = ScalarField::from_fn(&g, |_, _, x3| -2.0 * (1.0 - 2.0 * x3));
        let mut dev = a.comps[2].clone();
        dev.axpy(-1.0, &expect);
        assert!(dev.max_abs() < 1e-14, "deviation {}", dev.max_abs());
    }

    #[test]
    fn uniform_dilation_closed_form() {
        let (g, wf) = setup(8, 16);
        let beta = 2.0f64;
        let m = [[beta, 0.0, 0.0], [0.0, beta, 0.0], [0.0, 0.0, beta]];
        let kin = Kinematics::uniform(&g, m).unwrap();
        let a = accel_from_kin(&kin, &wf, &g);
        // accel^i = -(1+alpha) beta^(-1-3/alpha) d_i w.
        let scale = -(2.0) * beta.powf(-4.0);
        let expect = ScalarField::from_fn(&g, move |_, _, x3| scale * (1.0 - 2.0 * x3));
        let mut dev = a.comps[2].clone();
        dev.axpy(-1.0, &expect);
        assert!(dev.max_abs() < 1e-14, "deviation {}", dev.max_abs());
    }

    #[test]
    fn acceleration_ignores_velocity() {
        let (g, wf) = setup(8, 16);
        let disp = perturbed_map(&g, 0.02);
        let s1 = FlowState::new(disp.clone(), VectorField::zeros(&g), 0.0);
        let s2 = FlowState::new(
            disp,
            VectorField::from_fn(&g, |x1, _, _| [x1, 2.0, -1.0]),
            0.0,
        );
        let a1 = acceleration(&s1, &wf, &g).unwrap();
        let a2 = acceleration(&s2, &wf, &g).unwrap();
        for i in 0..3 {
            assert_eq!(a1.comps[i].as_slice(), a2.comps[i].as_slice());
        }
    }

    #[test]
    fn identity_curl_residual_vanishes_for_slab_weight() {
        let (g, wf) = setup(8, 16);
        let state = FlowState::rest(&g);
        let r = curl_acceleration_residual(&state, &wf, &g).unwrap();
        assert!(r < 1e-13, "identity curl residual {r}");
    }

    #[test]
    fn curl_residual_refines_to_zero() {
        let mut errs = Vec::new();
        for n in [8usize, 16, 32] {
            let (g, wf) = setup(n, 2 * n);
            let state = FlowState::new(perturbed_map(&g, 0.05), VectorField::zeros(&g), 0.0);
            errs.push(curl_acceleration_residual(&state, &wf, &g).unwrap());
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order >= 1.8, "curl(accel) order {order}, errors {errs:?}");
    }
}
