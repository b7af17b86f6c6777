//! Run configuration: grid, physics, presets, integrator, guardrails, and
//! solver parameters. Parsed from JSON with unknown keys rejected.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::weights::{WeightField, WeightSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightPreset {
    #[default]
    Parabolic,
    Sine,
    FromDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityPreset {
    /// `rho0 = (x3 (1 - x3))^(1/(gamma-1))`, giving `w = K x3 (1 - x3)`.
    ParabolicPow,
    /// `rho0 = 1`; a non-degenerate weight that fails the vacuum check.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityPreset {
    #[default]
    Rest,
    /// `v = amplitude (0, sin 2 pi x1, 0)`; feeds the curl energies.
    TangentialShear,
    /// Gradient of a smooth bump; curl-free initial data.
    IrrotationalPulse,
    /// Inward flow toward the slab center (periodic tangential realization
    /// of `-amplitude (x - center)`); feeds the divergence energy.
    Compression,
}

fn default_k() -> f64 {
    1.0
}
fn default_t_end() -> f64 {
    1.0
}
fn default_n_monitor() -> usize {
    2
}
fn default_cfl() -> f64 {
    0.5
}
fn default_a_dev() -> f64 {
    0.125
}
fn default_j_lo() -> f64 {
    2.0 / 3.0
}
fn default_j_hi() -> f64 {
    2.0
}
fn default_output_every() -> usize {
    10
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    20_000
}
fn default_lambda() -> f64 {
    10.0
}
fn default_max_deriv() -> usize {
    4
}
fn default_vacuum_bound() -> f64 {
    10.0
}

/// Full simulation configuration. `dt` defaults to the acoustic CFL bound
/// `cfl_safety * h3 / sqrt(gamma * max w)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: [usize; 3],
    pub gamma: f64,
    #[serde(rename = "K", default = "default_k")]
    pub entropy_k: f64,
    #[serde(default)]
    pub weight: WeightPreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityPreset>,
    #[serde(default)]
    pub velocity: VelocityPreset,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_n_monitor")]
    pub n_monitor: usize,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_a_dev")]
    pub a_dev_max: f64,
    #[serde(default = "default_j_lo")]
    pub j_lo: f64,
    #[serde(default = "default_j_hi")]
    pub j_hi: f64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub solver_max_iter: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_max_deriv")]
    pub max_deriv_order: usize,
    #[serde(default = "default_vacuum_bound")]
    pub vacuum_bound: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    /// Minimal config for programmatic use; callers override fields and then
    /// validate through the accessors.
    pub fn bare(grid: [usize; 3], gamma: f64) -> Self {
        SimConfig {
            grid,
            gamma,
            entropy_k: default_k(),
            weight: WeightPreset::default(),
            density: None,
            velocity: VelocityPreset::default(),
            amplitude: 0.0,
            dt: None,
            t_end: default_t_end(),
            n_monitor: default_n_monitor(),
            cfl_safety: default_cfl(),
            a_dev_max: default_a_dev(),
            j_lo: default_j_lo(),
            j_hi: default_j_hi(),
            output_every: default_output_every(),
            solver_tol: default_tol(),
            solver_max_iter: default_max_iter(),
            lambda: default_lambda(),
            max_deriv_order: default_max_deriv(),
            vacuum_bound: default_vacuum_bound(),
            seed: 0,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(s)
            .map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(self.grid[0], self.grid[1], self.grid[2])
    }

    pub fn build_weight(&self, grid: &Grid) -> Result<WeightField> {
        let spec = match self.weight {
            WeightPreset::Parabolic => WeightSpec::Parabolic,
            WeightPreset::Sine => WeightSpec::Sine,
            WeightPreset::FromDensity => {
                let preset = self.density.ok_or_else(|| {
                    Error::Config(
                        "weight \"from-density\" requires the \"density\" key".into(),
                    )
                })?;
                WeightSpec::FromDensity(self.density_field(preset, grid))
            }
        };
        WeightField::build(&spec, self.gamma, self.entropy_k, grid)
    }

    fn density_field(&self, preset: DensityPreset, grid: &Grid) -> ScalarField {
        match preset {
            DensityPreset::ParabolicPow => {
                let e = 1.0 / (self.gamma - 1.0);
                ScalarField::from_fn(grid, move |_, _, x3| (x3 * (1.0 - x3)).powf(e))
            }
            DensityPreset::Uniform => ScalarField::constant(grid, 1.0),
        }
    }

    pub fn initial_velocity(&self, grid: &Grid) -> VectorField {
        let a = self.amplitude;
        match self.velocity {
            VelocityPreset::Rest => VectorField::zeros(grid),
            VelocityPreset::TangentialShear => VectorField::from_fn(grid, move |x1, _, _| {
                [0.0, a * (2.0 * PI * x1).sin(), 0.0]
            }),
            VelocityPreset::IrrotationalPulse => VectorField::from_fn(grid, move |x1, _, x3| {
                let q = x3 * x3 * (1.0 - x3) * (1.0 - x3);
                let dq = 2.0 * x3 * (1.0 - x3) * (1.0 - 2.0 * x3);
                [
                    -a * 2.0 * PI * (2.0 * PI * x1).sin() * q,
                    0.0,
                    a * (2.0 * PI * x1).cos() * dq,
                ]
            }),
            VelocityPreset::Compression => VectorField::from_fn(grid, move |x1, x2, x3| {
                [
                    -a * (2.0 * PI * (x1 - 0.5)).sin() / (2.0 * PI),
                    -a * (2.0 * PI * (x2 - 0.5)).sin() / (2.0 * PI),
                    -a * (x3 - 0.5),
                ]
            }),
        }
    }

    /// Maximum stable step for the explicit integrator.
    pub fn cfl_bound(&self, wf: &WeightField, grid: &Grid) -> f64 {
        let c_max = (self.gamma * wf.w.max_abs()).sqrt();
        self.cfl_safety * grid.h[2] / c_max
    }

    /// The configured step, or the CFL bound when unset.
    pub fn resolved_dt(&self, wf: &WeightField, grid: &Grid) -> f64 {
        self.dt.unwrap_or_else(|| self.cfl_bound(wf, grid))
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.build_grid()?;
        if !(self.gamma > 1.0) {
            return Err(Error::InvalidExponent { gamma: self.gamma });
        }
        if self.density.is_some() && self.weight != WeightPreset::FromDensity {
            return Err(Error::Config(
                "key \"density\" is only meaningful with weight \"from-density\"".into(),
            ));
        }
        let wf = self.build_weight(&grid)?;
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("key \"dt\": {dt} must be positive")));
            }
            let bound = self.cfl_bound(&wf, &grid);
            if dt > bound {
                return Err(Error::Config(format!(
                    "key \"dt\": {dt} violates the acoustic stability bound {bound:.6e} \
                     (= cfl_safety * h3 / sqrt(gamma * max w))"
                )));
            }
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config(format!(
                "key \"t_end\": {} must be positive",
                self.t_end
            )));
        }
        if self.n_monitor == 0 || self.n_monitor > self.max_deriv_order {
            return Err(Error::Config(format!(
                "key \"n_monitor\": {} outside 1..={}",
                self.n_monitor, self.max_deriv_order
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "key \"cfl_safety\": {} outside (0, 1]",
                self.cfl_safety
            )));
        }
        if self.output_every == 0 {
            return Err(Error::Config("key \"output_every\": must be >= 1".into()));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol <= 1e-4) {
            return Err(Error::Config(format!(
                "key \"solver_tol\": {} outside (0, 1e-4]",
                self.solver_tol
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "key \"lambda\": {} must be positive",
                self.lambda
            )));
        }
        if !(self.a_dev_max > 0.0) {
            return Err(Error::Config(format!(
                "key \"a_dev_max\": {} must be positive",
                self.a_dev_max
            )));
        }
        if !(self.j_lo > 0.0 && self.j_lo < 1.0 && self.j_hi > 1.0) {
            return Err(Error::Config(format!(
                "keys \"j_lo\"/\"j_hi\": ({}, {}) must bracket 1",
                self.j_lo, self.j_hi
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Config("key \"amplitude\": must be finite".into()));
        }
        Ok(())
    }
}
