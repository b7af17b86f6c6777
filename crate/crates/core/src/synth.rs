//! Deterministic synthesis of smooth test fields.
//!
//! The property-verification suite and the convergence studies need
//! reproducible "random smooth" data. Randomness comes from a SplitMix64
//! stream seeded from the CLI, so reruns are bit-identical across platforms
//! and thread counts.

use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use std::f64::consts::PI;

/// SplitMix64 pseudo-random stream. Deterministic and dependency-free.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn next_signed(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }

    /// Uniform in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// A smooth scalar field built from a handful of low-frequency tangential
/// modes with polynomial normal profiles, amplitude-normalized to
/// `max |f| <= amplitude`.
pub fn smooth_random_scalar(grid: &Grid, rng: &mut SplitMix64, amplitude: f64) -> ScalarField {
    const MODES: usize = 4;
    let mut coef = Vec::with_capacity(MODES);
    for _ in 0..MODES {
        let k1 = (rng.next_u64() % 3) as f64;
        let k2 = (rng.next_u64() % 3) as f64;
        let phase1 = rng.next_unit() * 2.0 * PI;
        let phase2 = rng.next_unit() * 2.0 * PI;
        let p = 1.0 + rng.next_unit() * 2.0;
        let amp = rng.next_signed();
        coef.push((k1, k2, phase1, phase2, p, amp));
    }
    let raw = ScalarField::from_fn(grid, move |x1, x2, x3| {
        coef.iter()
            .map(|&(k1, k2, ph1, ph2, p, a)| {
                a * (2.0 * PI * k1 * x1 + ph1).cos()
                    * (2.0 * PI * k2 * x2 + ph2).cos()
                    * (0.5 + x3.powf(p) * (1.0 - x3))
            })
            .sum()
    });
    let m = raw.max_abs();
    if m == 0.0 {
        raw
    } else {
        raw.scaled(amplitude / m)
    }
}

/// A batch of independent smooth random fields.
pub fn smooth_random_fields(
    grid: &Grid,
    rng: &mut SplitMix64,
    count: usize,
    amplitude: f64,
) -> Vec<ScalarField> {
    (0..count)
        .map(|_| smooth_random_scalar(grid, rng, amplitude))
        .collect()
}

/// A smooth random vector field.
pub fn smooth_random_vector(grid: &Grid, rng: &mut SplitMix64, amplitude: f64) -> VectorField {
    let mut comps = smooth_random_fields(grid, rng, 3, amplitude);
    VectorField {
        comps: [
            comps.remove(0),
            comps.remove(0),
            comps.remove(0),
        ],
    }
}

/// The reference smooth perturbation of the identity map, returned as a
/// displacement. The components couple all three coordinates so that the
/// derived kinematics has no accidental separable structure (separable maps
/// make the Piola and curl residuals vanish identically on the tensorized
/// stencils, which says nothing about consistency). Tangentially periodic
/// and non-degenerate for small `a`.
pub fn perturbed_map(grid: &Grid, a: f64) -> VectorField {
    VectorField::from_fn(grid, move |x1, x2, x3| {
        let s1 = (2.0 * PI * x1).sin();
        let c1 = (2.0 * PI * x1).cos();
        let s2 = (2.0 * PI * x2).sin();
        let c2 = (2.0 * PI * x2).cos();
        [
            a * s1 * c2 * (1.0 + 0.5 * x3),
            a * c1 * s2 * (1.0 - 0.3 * x3),
            a * x3 * (1.0 - x3) * (1.0 + 0.4 * s1 * c2),
        ]
    })
}

/// A fixed smooth scalar with nonvanishing gradients in every direction.
pub fn smooth_scalar(grid: &Grid) -> ScalarField {
    ScalarField::from_fn(grid, |x1, x2, x3| {
        (2.0 * PI * x1).sin() * (2.0 * PI * x2).cos() * (1.0 + x3 * (1.0 - x3))
            + 0.5 * x3 * x3 * (3.0 - 2.0 * x3)
    })
}

/// The exact gradient of [`smooth_scalar`], for oracles that must not reuse
/// the discrete stencils.
pub fn smooth_scalar_gradient(grid: &Grid) -> VectorField {
    VectorField::from_fn(grid, |x1, x2, x3| {
        let q = 1.0 + x3 * (1.0 - x3);
        [
            2.0 * PI * (2.0 * PI * x1).cos() * (2.0 * PI * x2).cos() * q,
            -2.0 * PI * (2.0 * PI * x1).sin() * (2.0 * PI * x2).sin() * q,
            (2.0 * PI * x1).sin() * (2.0 * PI * x2).cos() * (1.0 - 2.0 * x3)
                + 3.0 * x3 * (1.0 - x3),
        ]
    })
}
