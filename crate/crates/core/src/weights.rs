//! The enthalpy weight and the weighted function-space machinery.
//!
//! The weight `w` scales like the distance to the vacuum faces and carries
//! the degeneracy of the whole problem: every normal derivative costs one
//! extra power of `w` in the norms below. Nodes are cell-centered in x3, so
//! `w > 0` pointwise even though it extends continuously to zero at the
//! faces.

use crate::derivs::{self, DerivIndex};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::geometry::{self, Kinematics};
use crate::grid::Grid;
use crate::stencil;
use std::f64::consts::PI;

/// How to construct the weight.
#[derive(Debug, Clone)]
pub enum WeightSpec {
    /// `w = x3 (1 - x3)`.
    Parabolic,
    /// `w = sin(pi x3) / pi`.
    Sine,
    /// `w = K rho0^(gamma - 1)` from an initial density field.
    FromDensity(ScalarField),
}

/// Enthalpy weight, its gradient, and the degeneracy exponents.
#[derive(Debug, Clone)]
pub struct WeightField {
    pub w: ScalarField,
    pub grad: VectorField,
    /// `1 / (gamma - 1)`, the degeneracy strength.
    pub alpha: f64,
    pub gamma: f64,
    pub entropy_k: f64,
}

impl WeightField {
    pub fn build(spec: &WeightSpec, gamma: f64, entropy_k: f64, grid: &Grid) -> Result<Self> {
        if gamma <= 1.0 {
            return Err(Error::InvalidExponent { gamma });
        }
        if entropy_k <= 0.0 {
            return Err(Error::Config(format!(
                "entropy constant K = {entropy_k} must be positive"
            )));
        }
        let alpha = 1.0 / (gamma - 1.0);
        let (w, grad) = match spec {
            WeightSpec::Parabolic => (
                ScalarField::from_fn(grid, |_, _, x3| x3 * (1.0 - x3)),
                VectorField::from_fn(grid, |_, _, x3| [0.0, 0.0, 1.0 - 2.0 * x3]),
            ),
            WeightSpec::Sine => (
                ScalarField::from_fn(grid, |_, _, x3| (PI * x3).sin() / PI),
                VectorField::from_fn(grid, |_, _, x3| [0.0, 0.0, (PI * x3).cos()]),
            ),
            WeightSpec::FromDensity(rho0) => {
                rho0.check_shape(grid)?;
                for idx in 0..grid.len() {
                    let v = rho0.as_slice()[idx];
                    if v <= 0.0 {
                        let (i1, i2, i3) = grid.coords_of(idx);
                        return Err(Error::InvalidDensity { i1, i2, i3, value: v });
                    }
                }
                let w = rho0.powf(gamma - 1.0).scaled(entropy_k);
                let grad = stencil::gradient(&w, grid);
                (w, grad)
            }
        };
        Ok(WeightField {
            w,
            grad,
            alpha,
            gamma,
            entropy_k,
        })
    }

    /// `w^sigma` as a field.
    pub fn pow(&self, sigma: f64) -> ScalarField {
        self.w.powf(sigma)
    }
}

/// Result of the boundary-comparability test.
#[derive(Debug, Clone, Copy)]
pub struct VacuumCheck {
    /// `max_nodes max(w/d, d/w)` where `d` is the face distance.
    pub comparability: f64,
    pub ok: bool,
}

/// Tests whether the weight is comparable to the distance to the vacuum
/// faces. Physical-vacuum presets pass; weights bounded away from zero fail
/// with a constant growing like `1/h3`.
pub fn check_physical_vacuum(wf: &WeightField, grid: &Grid, bound: f64) -> VacuumCheck {
    let mut c = 0.0f64;
    for i3 in 0..grid.n[2] {
        let d = grid.boundary_distance(i3);
        for i2 in 0..grid.n[1] {
            for i1 in 0..grid.n[0] {
                let w = wf.w.at(grid, i1, i2, i3);
                let ratio = if w > 0.0 {
                    (w / d).max(d / w)
                } else {
                    f64::INFINITY
                };
                c = c.max(ratio);
            }
        }
    }
    VacuumCheck {
        comparability: c,
        ok: c < bound,
    }
}

/// Sum over components of `sum_{|m|+n<=b} int w^(alpha+n) |D^(m,n) F|^2`.
fn x_norm_sq(comps: &[&ScalarField], wf: &WeightField, b: usize, grid: &Grid) -> f64 {
    let mut w_pow: Vec<ScalarField> = Vec::with_capacity(b + 1);
    for n in 0..=b {
        w_pow.push(wf.pow(wf.alpha + n as f64));
    }
    let vol = grid.cell_volume();
    let mut acc = 0.0;
    for idx in derivs::indices(0, b) {
        for f in comps {
            let df = derivs::apply(f, idx, grid);
            acc += df.dot_weighted(&df, &w_pow[idx.n]) * vol;
        }
    }
    acc
}

/// The flat weighted norm: every derivative of order `(m, n)` is measured
/// against `w^(alpha+n)`.
pub fn norm_x(f: &ScalarField, wf: &WeightField, b: usize, grid: &Grid, max_order: usize) -> Result<f64> {
    derivs::check_order(b, grid, max_order)?;
    f.check_shape(grid)?;
    Ok(x_norm_sq(&[f], wf, b, grid).sqrt())
}

pub fn norm_x_vector(
    f: &VectorField,
    wf: &WeightField,
    b: usize,
    grid: &Grid,
    max_order: usize,
) -> Result<f64> {
    derivs::check_order(b, grid, max_order)?;
    f.check_shape(grid)?;
    let comps: Vec<&ScalarField> = f.comps.iter().collect();
    Ok(x_norm_sq(&comps, wf, b, grid).sqrt())
}

/// Flow-map-adapted norm: measures the pulled-back gradient of each
/// derivative against `w^(1+alpha+n) det^(-1/alpha)`.
pub fn norm_y(
    f: &VectorField,
    wf: &WeightField,
    kin: &Kinematics,
    b: usize,
    grid: &Grid,
    max_order: usize,
) -> Result<f64> {
    derivs::check_order(b, grid, max_order)?;
    f.check_shape(grid)?;
    let jpow = kin.det_pow(-1.0 / wf.alpha);
    let vol = grid.cell_volume();
    let mut acc = 0.0;
    for idx in derivs::indices(0, b) {
        let weight = wf.pow(1.0 + wf.alpha + idx.n as f64).mul(&jpow);
        let df = derivs::apply_vector(f, idx, grid);
        let pulled = geometry::pullback_gradient(&stencil::vector_gradient(&df, grid), kin, grid);
        for row in &pulled.comps {
            for c in row {
                acc += c.dot_weighted(c, &weight) * vol;
            }
        }
    }
    Ok(acc.sqrt())
}

/// Like [`norm_y`] but without the gradient: measures the derivatives
/// themselves against `w^(1+alpha+n) det^(-1/alpha)`.
pub fn norm_z(
    f: &VectorField,
    wf: &WeightField,
    kin: &Kinematics,
    b: usize,
    grid: &Grid,
    max_order: usize,
) -> Result<f64> {
    derivs::check_order(b, grid, max_order)?;
    f.check_shape(grid)?;
    let jpow = kin.det_pow(-1.0 / wf.alpha);
    let vol = grid.cell_volume();
    let mut acc = 0.0;
    for idx in derivs::indices(0, b) {
        let weight = wf.pow(1.0 + wf.alpha + idx.n as f64).mul(&jpow);
        let df = derivs::apply_vector(f, idx, grid);
        for c in &df.comps {
            acc += c.dot_weighted(c, &weight) * vol;
        }
    }
    Ok(acc.sqrt())
}

/// Ratio `int w^(alpha-1) v^2 / int w^(alpha+1) (d3 v)^2`, the quantity the
/// Hardy inequality bounds. Scale-invariant in `v`.
pub fn hardy_ratio(v: &ScalarField, wf: &WeightField, grid: &Grid) -> Result<f64> {
    v.check_shape(grid)?;
    let num_w = wf.pow(wf.alpha - 1.0);
    let den_w = wf.pow(wf.alpha + 1.0);
    let dv = stencil::deriv(v, grid, stencil::AXIS_X3);
    let num = v.dot_weighted(v, &num_w) * grid.cell_volume();
    let den = dv.dot_weighted(&dv, &den_w) * grid.cell_volume();
    if den <= 0.0 {
        return Err(Error::DegenerateTestFunction);
    }
    Ok(num / den)
}

/// Sup-norm against weighted-norm report for the embedding spot check.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingReport {
    pub sup: f64,
    pub xnorm: f64,
    /// `sup / xnorm`; `None` when the norm vanishes.
    pub ratio: Option<f64>,
}

/// In regime for the sup-norm bound when `b >= floor(alpha) + 4`.
pub fn embedding_report(
    f: &ScalarField,
    wf: &WeightField,
    b: usize,
    grid: &Grid,
    max_order: usize,
) -> Result<EmbeddingReport> {
    if b < wf.alpha.floor() as usize + 4 {
        return Err(Error::Contract(format!(
            "embedding spot check needs b >= floor(alpha) + 4 = {}, got {b}",
            wf.alpha.floor() as usize + 4
        )));
    }
    let sup = f.max_abs();
    let xnorm = norm_x(f, wf, b, grid, max_order)?;
    let ratio = if xnorm > 0.0 { Some(sup / xnorm) } else { None };
    Ok(EmbeddingReport { sup, xnorm, ratio })
}

/// Per-index contribution of the X-style sum; exposed for the energy module
/// cross-checks.
pub fn x_term(f: &ScalarField, wf: &WeightField, idx: DerivIndex, grid: &Grid) -> f64 {
    let df = derivs::apply(f, idx, grid);
    let weight = wf.pow(wf.alpha + idx.n as f64);
    df.dot_weighted(&df, &weight) * grid.cell_volume()
}
