//! Fixed-point construction of the flow map with frozen coefficients.
//!
//! Each iterate carries a full trajectory over `[0, t_end]`. The next
//! iterate adds the correction `e` solving the linear wave equation
//!
//! `w^alpha e_tt + (Le + Ld)_frozen e = -w^alpha defect(eta_nu)`
//!
//! with homogeneous initial data, where the defect is the acceleration-form
//! residual of the nonlinear equation along the frozen trajectory and the
//! operators are frozen at the iterate's kinematics step by step. The
//! correction is integrated with a centered second difference, implicit
//! (Crank-Nicolson placement) in the linear part, so each step is one
//! symmetric-positive-definite solve by the same conjugate-gradient
//! machinery as the elliptic module. At the fixed point the defect vanishes
//! and the trajectory satisfies the explicit centered recurrence exactly,
//! i.e. the scheme converges to the leapfrog trajectory of the nonlinear
//! equation.

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::geometry::Kinematics;
use crate::grid::Grid;
use crate::linalg;
use crate::weights::WeightField;

use super::accel::{accel_from_kin, weighted_norm};
use super::leapfrog::{Guardrails, Termination};
use super::linear_ops::FrozenLinearOps;
use super::state::FlowState;

/// Per-iteration record: fixed-point defect and the guardrail mirror of the
/// frozen trajectory.
#[derive(Debug, Clone, Copy)]
pub struct PicardIter {
    pub iter: usize,
    /// `max_n |second-difference(eta) - accel(eta)|_(w^alpha)` over the
    /// interior time steps.
    pub defect: f64,
    pub inv_dev: f64,
    pub det_min: f64,
    pub det_max: f64,
}

#[derive(Debug, Clone)]
pub struct PicardTrace {
    pub iters: Vec<PicardIter>,
    pub termination: Termination,
    pub dt: f64,
    pub steps: usize,
    /// End state of the last measured trajectory.
    pub final_state: FlowState,
}

struct Measurement {
    defect: f64,
    inv_dev: f64,
    det_min: f64,
    det_max: f64,
    worst: usize,
}

fn measure(
    traj: &[VectorField],
    u0: &VectorField,
    w_alpha: &ScalarField,
    wf: &WeightField,
    grid: &Grid,
    dt: f64,
) -> Result<Measurement> {
    let m = traj.len() - 1;
    let mut defect = 0.0f64;
    let mut inv_dev = 0.0f64;
    let mut det_min = f64::INFINITY;
    let mut det_max = f64::NEG_INFINITY;
    let mut worst = 0usize;
    for n in 0..=m {
        let kin = Kinematics::from_displacement(&traj[n], grid)?;
        let stats = kin.stats();
        if stats.inv_dev > inv_dev {
            inv_dev = stats.inv_dev;
            worst = stats.worst;
        }
        det_min = det_min.min(stats.det_min);
        det_max = det_max.max(stats.det_max);
        if n >= 1 && n < m {
            let accel = accel_from_kin(&kin, wf, grid);
            let mut d = traj[n + 1].clone();
            d.axpy(-2.0, &traj[n]);
            d.axpy(1.0, &traj[n - 1]);
            d.scale(1.0 / (dt * dt));
            d.axpy(-1.0, &accel);
            defect = defect.max(weighted_norm(&d, w_alpha, grid));
        }
    }
    let _ = u0;
    Ok(Measurement {
        defect,
        inv_dev,
        det_min,
        det_max,
        worst,
    })
}

/// Run `iterations` sweeps from the freely streaming start
/// `eta_0 = x + t u0`, recording the defect of every iterate (so the trace
/// has `iterations + 1` rows). A frozen iterate leaving the admissible
/// region aborts the iteration with the partial trace; a failed implicit
/// solve is likewise recorded in the termination.
pub fn picard_run(cfg: &SimConfig, iterations: usize) -> Result<PicardTrace> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let wf = cfg.build_weight(&grid)?;
    let rails = Guardrails::from_config(cfg);
    let dt = cfg.resolved_dt(&wf, &grid);
    let steps = (cfg.t_end / dt).round().max(2.0) as usize;
    let u0 = cfg.initial_velocity(&grid);
    let w_alpha = wf.pow(wf.alpha);

    // Free-streaming base iterate.
    let mut traj: Vec<VectorField> = (0..=steps)
        .map(|n| u0.scaled(n as f64 * dt))
        .collect();

    let mut iters = Vec::new();
    let mut termination = Termination::Completed;

    for nu in 0..=iterations {
        let meas = measure(&traj, &u0, &w_alpha, &wf, &grid, dt)?;
        iters.push(PicardIter {
            iter: nu,
            defect: meas.defect,
            inv_dev: meas.inv_dev,
            det_min: meas.det_min,
            det_max: meas.det_max,
        });
        if meas.inv_dev > rails.a_dev_max
            || meas.det_min < rails.j_lo
            || meas.det_max > rails.j_hi
        {
            termination = Termination::GuardrailBreach {
                t: f64::NAN,
                node: grid.coords_of(meas.worst),
                a_dev: meas.inv_dev,
                j_min: meas.det_min,
                j_max: meas.det_max,
            };
            break;
        }
        if nu == iterations {
            break;
        }
        match sweep(&traj, &u0, &w_alpha, &wf, &grid, dt, cfg) {
            Ok(next) => traj = next,
            Err(Error::SolverFailure { residual, iters: it, .. }) => {
                termination = Termination::SolverFailure {
                    residual,
                    iters: it,
                };
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let m = traj.len() - 1;
    // Second-order one-sided velocity at the final time.
    let mut vel = traj[m].scaled(3.0);
    vel.axpy(-4.0, &traj[m - 1]);
    vel.axpy(1.0, &traj[m - 2]);
    vel.scale(1.0 / (2.0 * dt));
    let final_state = FlowState {
        disp: traj[m].clone(),
        vel,
        t: m as f64 * dt,
    };
    Ok(PicardTrace {
        iters,
        termination,
        dt,
        steps,
        final_state,
    })
}

/// One defect-correction sweep: integrate the linear correction equation
/// with the trajectory's frozen operators and add it to the trajectory.
fn sweep(
    traj: &[VectorField],
    u0: &VectorField,
    w_alpha: &ScalarField,
    wf: &WeightField,
    grid: &Grid,
    dt: f64,
    cfg: &SimConfig,
) -> Result<Vec<VectorField>> {
    let m = traj.len() - 1;
    let dt2 = dt * dt;
    let mut next: Vec<VectorField> = Vec::with_capacity(m + 1);
    next.push(traj[0].clone());

    let mul_mass = |f: &VectorField| -> VectorField {
        VectorField {
            comps: std::array::from_fn(|i| f.comps[i].mul(w_alpha)),
        }
    };

    // Startup: kinematics and defect at t = 0.
    let kin0 = Kinematics::from_displacement(&traj[0], grid)?;
    let accel0 = accel_from_kin(&kin0, wf, grid);
    let ops0 = FrozenLinearOps::new(&kin0, wf, grid);
    let mut d_start = traj[1].clone();
    d_start.axpy(-1.0, &traj[0]);
    d_start.axpy(-dt, u0);
    d_start.scale(2.0 / dt2);
    d_start.axpy(-1.0, &accel0);

    let solve = |ops: &FrozenLinearOps, rhs: &VectorField| -> Result<VectorField> {
        let diag = {
            let mut d = w_alpha.clone();
            d.axpy(0.5 * dt2, &ops.jacobi_diag());
            d
        };
        let apply = |x: &VectorField| -> VectorField {
            let mut out = mul_mass(x);
            out.axpy(0.5 * dt2, &ops.elastic_plus_divergence(x));
            out
        };
        let precond = |r: &VectorField| -> VectorField {
            VectorField {
                comps: std::array::from_fn(|i| {
                    let mut z = r.comps[i].clone();
                    for (z, d) in z.as_mut_slice().iter_mut().zip(diag.as_slice()) {
                        *z /= d;
                    }
                    z
                }),
            }
        };
        let (x, rep) = linalg::pcg(
            apply,
            precond,
            |a: &VectorField, b: &VectorField| a.dot(b),
            rhs,
            VectorField::zeros(grid),
            cfg.solver_tol,
            cfg.solver_max_iter,
        );
        if !rep.converged {
            return Err(Error::SolverFailure {
                residual: rep.rel_residual,
                iters: rep.iters,
                tol: cfg.solver_tol,
            });
        }
        Ok(x)
    };

    // e_1 from the homogeneous initial data.
    let mut rhs = mul_mass(&d_start);
    rhs.scale(-0.5 * dt2);
    let mut e_prev = VectorField::zeros(grid);
    let mut e_cur = solve(&ops0, &rhs)?;
    let mut t1 = traj[1].clone();
    t1.axpy(1.0, &e_cur);
    next.push(t1);

    for n in 1..m {
        let kin = Kinematics::from_displacement(&traj[n], grid)?;
        let accel = accel_from_kin(&kin, wf, grid);
        let ops = FrozenLinearOps::new(&kin, wf, grid);
        // Interior defect at step n.
        let mut d = traj[n + 1].clone();
        d.axpy(-2.0, &traj[n]);
        d.axpy(1.0, &traj[n - 1]);
        d.scale(1.0 / dt2);
        d.axpy(-1.0, &accel);

        // (w^a + dt^2/2 L) e_{n+1}
        //   = w^a (2 e_n - e_{n-1}) - dt^2/2 L e_{n-1} - dt^2 w^a d_n.
        let mut combo = e_cur.scaled(2.0);
        combo.axpy(-1.0, &e_prev);
        let mut rhs = mul_mass(&combo);
        rhs.axpy(-0.5 * dt2, &ops.elastic_plus_divergence(&e_prev));
        rhs.axpy(-dt2, &mul_mass(&d));
        let e_next = solve(&ops, &rhs)?;
        let mut tn = traj[n + 1].clone();
        tn.axpy(1.0, &e_next);
        next.push(tn);
        e_prev = e_cur;
        e_cur = e_next;
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::VelocityPreset;

    fn base_cfg() -> SimConfig {
        let mut cfg = SimConfig::bare([8, 8, 16], 2.0);
        cfg.t_end = 0.05;
        cfg.dt = Some(2.5e-3);
        cfg
    }

    #[test]
    fn zero_iterations_reports_free_streaming_defect() {
        let cfg = base_cfg();
        let trace = picard_run(&cfg, 0).unwrap();
        assert_eq!(trace.iters.len(), 1);
        // From rest the free-streaming defect is |(1+alpha) grad w|_(w^alpha)
        // = 2 (int w (1-2x3)^2)^(1/2) = 2 / sqrt(30).
        let expect = 2.0 / 30.0f64.sqrt();
        let got = trace.iters[0].defect;
        assert!(
            (got - expect).abs() / expect < 2e-2,
            "free-streaming defect {got} vs {expect}"
        );
    }

    #[test]
    fn first_sweep_shrinks_the_defect() {
        let cfg = base_cfg();
        let trace = picard_run(&cfg, 1).unwrap();
        assert_eq!(trace.iters.len(), 2);
        assert!(
            trace.iters[1].defect < 0.5 * trace.iters[0].defect,
            "defects {:?}",
            trace.iters
        );
    }

    #[test]
    fn defect_contracts_and_matches_direct_simulation() {
        let mut cfg = base_cfg();
        cfg.velocity = VelocityPreset::IrrotationalPulse;
        cfg.amplitude = 1e-3;
        cfg.output_every = 1;
        let trace = picard_run(&cfg, 5).unwrap();
        assert!(trace.termination.is_completed());
        for k in 1..=3 {
            assert!(
                trace.iters[k].defect <= 0.5 * trace.iters[k - 1].defect,
                "iteration {k} reduction too weak: {:?}",
                trace.iters
            );
        }
        // The fixed point is the explicit leapfrog trajectory.
        let run = super::super::leapfrog::simulate(&cfg).unwrap();
        let mut dev = trace.final_state.disp.clone();
        dev.axpy(-1.0, &run.final_state.disp);
        let scale = run.final_state.disp.max_abs().max(1e-9);
        assert!(
            dev.max_abs() <= 1e-6 * scale.max(1.0),
            "converged map deviates from direct integration by {}",
            dev.max_abs()
        );
    }
}
