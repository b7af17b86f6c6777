//! Recovering the flow map from its image under the degenerate elliptic
//! operator.
//!
//! The iteration scheme approximates `G = [-d1^2 - d2^2 -
//! w^(-alpha) d3 w^(1+alpha) d3 + lambda] eta` rather than `eta` itself; the
//! map is recovered by a componentwise elliptic solve. Splitting
//! `eta = x + disp` keeps every solved field tangentially periodic: the
//! identity part has the closed-form image
//! `lambda x^i - (1+alpha) d3 w delta^(i3)`.

use crate::degelliptic::EllipticProblem;
use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::weights::WeightField;

/// Closed-form image of the identity map under the operator.
pub fn identity_map_image(wf: &WeightField, lambda: f64, grid: &Grid) -> VectorField {
    let mut out = VectorField {
        comps: [
            ScalarField::from_fn(grid, |x1, _, _| x1).scaled(lambda),
            ScalarField::from_fn(grid, |_, x2, _| x2).scaled(lambda),
            ScalarField::from_fn(grid, |_, _, x3| x3).scaled(lambda),
        ],
    };
    out.comps[2].axpy(-(1.0 + wf.alpha), &wf.grad.comps[2]);
    out
}

/// Image of the flow map `x + disp` under the operator: the closed-form
/// identity part plus the discrete operator applied to the displacement.
pub fn apply_to_flow_map(
    disp: &VectorField,
    prob: &EllipticProblem,
    wf: &WeightField,
    grid: &Grid,
) -> VectorField {
    let mut out = identity_map_image(wf, prob.lambda, grid);
    out.axpy(1.0, &prob.apply_vector(disp));
    out
}

/// Invert [`apply_to_flow_map`]: returns the displacement of the
/// reconstructed map.
pub fn reconstruct_flow_map(
    image: &VectorField,
    prob: &EllipticProblem,
    wf: &WeightField,
    grid: &Grid,
) -> Result<VectorField> {
    let mut rhs = image.clone();
    rhs.axpy(-1.0, &identity_map_image(wf, prob.lambda, grid));
    prob.solve_vector(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{perturbed_map, SplitMix64};
    use crate::weights::WeightSpec;

    fn setup(n1: usize, n3: usize) -> (Grid, WeightField, EllipticProblem) {
        let g = Grid::new(n1, n1, n3).unwrap();
        let wf = WeightField::build(&WeightSpec::Parabolic, 2.0, 1.0, &g).unwrap();
        let p = EllipticProblem::new(&wf, 10.0, &g, 1e-10, 20_000).unwrap();
        (g, wf, p)
    }

    #[test]
    fn identity_image_recovers_identity() {
        let (g, wf, p) = setup(8, 16);
        let image = identity_map_image(&wf, p.lambda, &g);
        let disp = reconstruct_flow_map(&image, &p, &wf, &g).unwrap();
        assert!(disp.max_abs() <= 10.0 * p.tol);
    }

    #[test]
    fn constant_translation_round_trip() {
        let (g, wf, p) = setup(8, 16);
        let shift = VectorField::from_fn(&g, |_, _, _| [0.02, -0.01, 0.03]);
        let mut image = identity_map_image(&wf, p.lambda, &g);
        // G(x + c) = G(x) + lambda c.
        image.axpy(p.lambda, &shift);
        let disp = reconstruct_flow_map(&image, &p, &wf, &g).unwrap();
        let mut dev = disp;
        dev.axpy(-1.0, &shift);
        assert!(dev.max_abs() <= 10.0 * p.tol, "deviation {}", dev.max_abs());
    }

    #[test]
    fn smooth_map_round_trip() {
        let (g, wf, p) = setup(10, 20);
        let mut rng = SplitMix64::new(2);
        let _ = &mut rng;
        let disp_star = perturbed_map(&g, 0.03);
        let image = apply_to_flow_map(&disp_star, &p, &wf, &g);
        let disp = reconstruct_flow_map(&image, &p, &wf, &g).unwrap();
        let mut dev = disp;
        dev.axpy(-1.0, &disp_star);
        // Relative error in the solver's weighted norm.
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..3 {
            num += p.inner(&dev.comps[i], &dev.comps[i]);
            den += p.inner(&disp_star.comps[i], &disp_star.comps[i]);
        }
        let rel = (num / den).sqrt();
        assert!(rel <= 10.0 * p.tol, "round-trip relative error {rel}");
    }
}
