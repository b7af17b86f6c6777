//! Distance between two runs and the curl transport diagnostic.

use crate::derivs;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry;
use crate::grid::Grid;
use crate::stencil;
use crate::weights::WeightField;

use super::state::FlowState;

/// Weighted distance between two trajectories sampled at matching times:
///
/// `Z = 1/2 int w^alpha |v - v_b|^2
///    + alpha int w^(1+alpha) J^(-1/alpha-2) (J - J_b)^2
///    + sum_(1<=|m|+n<=order-1) 1/2 int w^(alpha+n) |D^(m,n)(v - v_b)|^2
///    + 1/2 int w^(1+alpha+n) J^(-1/alpha) |grad_eta D^(m,n)(eta - eta_b)|^2`
///
/// with the kinematic weights taken from the first run. Its growth exponent
/// bounds how fast nearby solutions can separate.
pub fn perturbation_distance(
    run_a: &[FlowState],
    run_b: &[FlowState],
    wf: &WeightField,
    grid: &Grid,
    order: usize,
    max_order: usize,
) -> Result<Vec<(f64, f64)>> {
    if run_a.len() != run_b.len() || run_a.is_empty() {
        return Err(Error::Contract(format!(
            "mismatched runs: {} vs {} snapshots",
            run_a.len(),
            run_b.len()
        )));
    }
    if order == 0 {
        return Err(Error::Contract("distance order must be >= 1".into()));
    }
    derivs::check_order(order.saturating_sub(1), grid, max_order)?;
    let vol = grid.cell_volume();
    let w_alpha = wf.pow(wf.alpha);
    let w_1alpha = wf.pow(1.0 + wf.alpha);
    let mut out = Vec::with_capacity(run_a.len());
    for (a, b) in run_a.iter().zip(run_b) {
        if (a.t - b.t).abs() > 1e-12 * (1.0 + a.t.abs()) {
            return Err(Error::Contract(format!(
                "snapshot times differ: {} vs {}",
                a.t, b.t
            )));
        }
        a.check(grid)?;
        b.check(grid)?;
        let kin_a = a.kinematics(grid)?;
        let kin_b = b.kinematics(grid)?;
        let jpow = kin_a.det_pow(-1.0 / wf.alpha);

        let mut dv = a.vel.clone();
        dv.axpy(-1.0, &b.vel);
        let mut z = 0.5 * dv.dot_weighted(&dv, &w_alpha) * vol;

        // Jacobian separation with weight w^(1+alpha) J^(-1/alpha - 2).
        {
            let mut acc = 0.0;
            for idx in 0..grid.len() {
                let j_a = kin_a.det.as_slice()[idx];
                let dj = j_a - kin_b.det.as_slice()[idx];
                acc += w_1alpha.as_slice()[idx] * j_a.powf(-1.0 / wf.alpha - 2.0) * dj * dj;
            }
            z += wf.alpha * acc * vol;
        }

        let mut dd = a.disp.clone();
        dd.axpy(-1.0, &b.disp);
        for idx in derivs::indices(1, order - 1) {
            let w_v = wf.pow(wf.alpha + idx.n as f64);
            let dvi = derivs::apply_vector(&dv, idx, grid);
            z += 0.5 * dvi.dot_weighted(&dvi, &w_v) * vol;

            let w_eta = wf.pow(1.0 + wf.alpha + idx.n as f64).mul(&jpow);
            let ddi = derivs::apply_vector(&dd, idx, grid);
            let pulled =
                geometry::pullback_gradient(&stencil::vector_gradient(&ddi, grid), &kin_a, grid);
            for row in &pulled.comps {
                for c in row {
                    z += 0.5 * c.dot_weighted(c, &w_eta) * vol;
                }
            }
        }
        out.push((a.t, z));
    }
    Ok(out)
}

/// Log-linear regression of `ln(Z(t)/Z(0))` against `t` through the origin:
/// the fitted exponent `C` of the growth bound `Z(t) <= Z(0) e^(C t)`.
pub fn fit_growth_exponent(series: &[(f64, f64)]) -> Option<f64> {
    let z0 = series.first()?.1;
    if z0 <= 0.0 {
        return None;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut points = 0;
    for &(t, z) in &series[1..] {
        if t > 0.0 && z > 0.0 {
            num += t * (z / z0).ln();
            den += t * t;
            points += 1;
        }
    }
    if points == 0 || den == 0.0 {
        return None;
    }
    Some(num / den)
}

/// Residual of the curl transport identity
/// `d/dt [curl_eta v] = eps (d/dt A)[s][j] v^k,_s`
/// measured with a centered time difference over consecutive snapshots.
/// Vanishes at `O(dt^2 + h^2)` under joint refinement.
pub fn curl_transport_residual(
    history: &[FlowState],
    wf: &WeightField,
    grid: &Grid,
) -> Result<f64> {
    if history.len() < 3 {
        return Err(Error::Contract(
            "curl transport needs at least 3 consecutive states".into(),
        ));
    }
    let dt = history[1].t - history[0].t;
    for pair in history.windows(2) {
        if ((pair[1].t - pair[0].t) - dt).abs() > 1e-10 * dt.abs().max(1e-300) {
            return Err(Error::Contract("history cadence is not uniform".into()));
        }
    }
    let _ = wf;
    let curl_of = |s: &FlowState| -> Result<VectorField> {
        let kin = s.kinematics(grid)?;
        Ok(geometry::pullback_curl(
            &stencil::vector_gradient(&s.vel, grid),
            &kin,
            grid,
        ))
    };
    let mut worst = 0.0f64;
    for k in 1..history.len() - 1 {
        let lo = curl_of(&history[k - 1])?;
        let hi = curl_of(&history[k + 1])?;
        let mut lhs = hi;
        lhs.axpy(-1.0, &lo);
        lhs.scale(1.0 / (2.0 * dt));

        let mid = &history[k];
        let kin = mid.kinematics(grid)?;
        let dv = stencil::vector_gradient(&mid.vel, grid);
        let (d_inv, _) = geometry::kinematic_rates(&kin, &dv, grid);
        let rhs = geometry::curl_against(&dv, &d_inv, grid);
        lhs.axpy(-1.0, &rhs);
        worst = worst.max(lhs.max_abs());
    }
    Ok(worst)
}
