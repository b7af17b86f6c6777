//! Refinement-order studies: manufactured elliptic solutions, energy-drift
//! step-size scaling, curl residuals, and the cofactor divergence.

use crate::config::{SimConfig, VelocityPreset};
use crate::degelliptic::EllipticProblem;
use crate::dynamics;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{self, Kinematics};
use crate::grid::Grid;
use crate::linalg;
use crate::synth;
use crate::weights::{WeightField, WeightSpec};
use std::f64::consts::PI;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Elliptic,
    EnergyDrift,
    CurlResidual,
    Piola,
}

impl FromStr for StudyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elliptic" => Ok(StudyKind::Elliptic),
            "energy-drift" => Ok(StudyKind::EnergyDrift),
            "curl-residual" => Ok(StudyKind::CurlResidual),
            "piola" => Ok(StudyKind::Piola),
            other => Err(Error::Config(format!(
                "unknown study {other:?}; expected elliptic | energy-drift | curl-residual | piola"
            ))),
        }
    }
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Elliptic => "elliptic",
            StudyKind::EnergyDrift => "energy-drift",
            StudyKind::CurlResidual => "curl-residual",
            StudyKind::Piola => "piola",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StudyLevel {
    /// Refinement parameter: the normal spacing h3, or dt for the drift study.
    pub param: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub param_name: &'static str,
    pub levels: Vec<StudyLevel>,
    /// Least-squares slope of ln(error) against ln(param).
    pub order: f64,
    pub monotone: bool,
}

impl StudyReport {
    fn from_levels(kind: StudyKind, param_name: &'static str, levels: Vec<StudyLevel>) -> Self {
        let params: Vec<f64> = levels.iter().map(|l| l.param).collect();
        let errors: Vec<f64> = levels.iter().map(|l| l.error).collect();
        let order = linalg::fit_order(&params, &errors);
        let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
        StudyReport {
            kind,
            param_name,
            levels,
            order,
            monotone,
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("study {}:\n", self.kind.name());
        for l in &self.levels {
            s.push_str(&format!(
                "  {} = {:<12.6e} error = {:.6e}\n",
                self.param_name, l.param, l.error
            ));
        }
        s.push_str(&format!("  measured order = {:.3}\n", self.order));
        if !self.monotone {
            s.push_str("  warning: error sequence is not monotone\n");
        }
        s
    }
}

/// Manufactured solution for the elliptic ladder:
/// `u = sin(2 pi x1) x3 (1 - x3)` with the parabolic weight and `alpha = 1`,
/// whose operator image has the closed form
/// `(4 pi^2 + lambda) u + sin(2 pi x1) (2 w - 2 (1 - 2 x3)^2)`.
pub fn manufactured_solution(grid: &Grid) -> (ScalarField, ScalarField) {
    let lambda = 10.0;
    let u = ScalarField::from_fn(grid, |x1, _, x3| (2.0 * PI * x1).sin() * x3 * (1.0 - x3));
    let rhs = ScalarField::from_fn(grid, move |x1, _, x3| {
        let s = (2.0 * PI * x1).sin();
        let w = x3 * (1.0 - x3);
        let dq = 1.0 - 2.0 * x3;
        (4.0 * PI * PI + lambda) * s * w + s * (2.0 * w - 2.0 * dq * dq)
    });
    (u, rhs)
}

pub fn elliptic_level(n: [usize; 3]) -> Result<StudyLevel> {
    let grid = Grid::new(n[0], n[1], n[2])?;
    let wf = WeightField::build(&WeightSpec::Parabolic, 2.0, 1.0, &grid)?;
    let prob = EllipticProblem::new(&wf, 10.0, &grid, 1e-11, 50_000)?;
    let (u_star, rhs) = manufactured_solution(&grid);
    let u = prob.solve(&rhs)?;
    let mut dev = u;
    dev.axpy(-1.0, &u_star);
    let rel = (prob.inner(&dev, &dev) / prob.inner(&u_star, &u_star)).sqrt();
    Ok(StudyLevel {
        param: grid.h[2],
        error: rel,
    })
}

fn map_level(n: [usize; 3], f: impl Fn(&Grid, &WeightField, &Kinematics) -> f64) -> Result<StudyLevel> {
    let grid = Grid::new(n[0], n[1], n[2])?;
    let wf = WeightField::build(&WeightSpec::Parabolic, 2.0, 1.0, &grid)?;
    let disp = synth::perturbed_map(&grid, 0.05);
    let kin = Kinematics::from_displacement(&disp, &grid)?;
    Ok(StudyLevel {
        param: grid.h[2],
        error: f(&grid, &wf, &kin),
    })
}

pub fn piola_level(n: [usize; 3]) -> Result<StudyLevel> {
    map_level(n, |grid, _, kin| geometry::piola_divergence(kin, grid).max_abs())
}

pub fn curl_residual_level(n: [usize; 3]) -> Result<StudyLevel> {
    map_level(n, |grid, wf, kin| {
        let accel = dynamics::accel_from_kin(kin, wf, grid);
        let curl = geometry::pullback_curl(
            &crate::stencil::vector_gradient(&accel, grid),
            kin,
            grid,
        );
        curl.max_abs()
    })
}

pub fn energy_drift_level(grid: [usize; 3], dt: f64, t_end: f64) -> Result<StudyLevel> {
    let mut cfg = SimConfig::bare(grid, 2.0);
    cfg.velocity = VelocityPreset::TangentialShear;
    cfg.amplitude = 1e-3;
    cfg.dt = Some(dt);
    cfg.t_end = t_end;
    cfg.output_every = 10;
    let run = dynamics::simulate(&cfg)?;
    Ok(StudyLevel {
        param: dt,
        error: dynamics::relative_energy_drift(&run.reports),
    })
}

/// Run a study on its default desk-scale ladder.
pub fn run_study(kind: StudyKind) -> Result<StudyReport> {
    match kind {
        StudyKind::Elliptic => {
            let levels = [[12, 12, 24], [24, 24, 48], [48, 48, 96]]
                .iter()
                .map(|&n| elliptic_level(n))
                .collect::<Result<Vec<_>>>()?;
            Ok(StudyReport::from_levels(kind, "h3", levels))
        }
        StudyKind::Piola => {
            let levels = [[8, 8, 16], [16, 16, 32], [32, 32, 64]]
                .iter()
                .map(|&n| piola_level(n))
                .collect::<Result<Vec<_>>>()?;
            Ok(StudyReport::from_levels(kind, "h3", levels))
        }
        StudyKind::CurlResidual => {
            let levels = [[8, 8, 16], [16, 16, 32], [32, 32, 64]]
                .iter()
                .map(|&n| curl_residual_level(n))
                .collect::<Result<Vec<_>>>()?;
            Ok(StudyReport::from_levels(kind, "h3", levels))
        }
        StudyKind::EnergyDrift => {
            // Step sizes chosen so the integrator term sits well above the
            // O(h^4) quadrature floor of the energy functionals.
            let levels = [8e-3, 4e-3, 2e-3]
                .iter()
                .map(|&dt| energy_drift_level([8, 8, 32], dt, 0.2))
                .collect::<Result<Vec<_>>>()?;
            Ok(StudyReport::from_levels(kind, "dt", levels))
        }
    }
}

/// The exact affine expansion factor of the rest-started parabolic slab:
/// `s'' = 2 (1 + alpha) s^(-1 - 1/alpha)`, `s(0) = 1`, `s'(0) = 0`,
/// integrated with a fine fixed step. An independent oracle for the
/// explicit integrator.
pub fn affine_expansion_factor(alpha: f64, t_end: f64) -> f64 {
    let h = 1e-6;
    let mut s = 1.0f64;
    let mut sdot = 0.0f64;
    let accel = |s: f64| 2.0 * (1.0 + alpha) * s.powf(-1.0 - 1.0 / alpha);
    let mut t = 0.0;
    while t < t_end - 0.5 * h {
        let half = sdot + 0.5 * h * accel(s);
        s += h * half;
        sdot = half + 0.5 * h * accel(s);
        t += h;
    }
    s
}

/// First time the affine expansion leaves the region `max|A - I| <= bound`,
/// i.e. when `1 - 1/s(t)` reaches the bound.
pub fn affine_breach_time(alpha: f64, bound: f64) -> f64 {
    let h = 1e-6;
    let mut s = 1.0f64;
    let mut sdot = 0.0f64;
    let accel = |s: f64| 2.0 * (1.0 + alpha) * s.powf(-1.0 - 1.0 / alpha);
    let mut t = 0.0;
    while 1.0 - 1.0 / s <= bound && t < 10.0 {
        let half = sdot + 0.5 * h * accel(s);
        s += h * half;
        sdot = half + 0.5 * h * accel(s);
        t += h;
    }
    t
}

/// Helper for dt-order checks: consecutive-pair orders of a ladder.
pub fn pairwise_orders(levels: &[StudyLevel]) -> Vec<f64> {
    levels
        .windows(2)
        .map(|w| (w[0].error / w[1].error).ln() / (w[0].param / w[1].param).ln())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piola_study_order() {
        let report = run_study(StudyKind::Piola).unwrap();
        assert!(report.monotone, "{:?}", report.levels);
        assert!(report.order >= 1.8, "order {}", report.order);
    }

    #[test]
    fn affine_oracle_matches_small_time_expansion() {
        // s(t) = 1 + 2 t^2 + O(t^4) for alpha = 1.
        let s = affine_expansion_factor(1.0, 0.01);
        assert!((s - (1.0 + 2.0 * 1e-4)).abs() < 1e-7, "s = {s}");
        // The admissibility bound 1/8 is reached near t = 0.27.
        let t = affine_breach_time(1.0, 0.125);
        assert!(t > 0.25 && t < 0.29, "breach time {t}");
    }
}
