//! Seeded property-verification suite behind the `verify` subcommand: every
//! exactly checkable identity of the solver at desk scale, each reported as
//! one pass/fail line.

use crate::config::{SimConfig, VelocityPreset};
use crate::degelliptic::EllipticProblem;
use crate::dynamics::{self, FlowState, FrozenLinearOps, Guardrails};
use crate::energies;
use crate::field::{mat3, ScalarField, TensorField, VectorField};
use crate::geometry::{self, Kinematics};
use crate::grid::Grid;
use crate::io;
use crate::stencil;
use crate::synth::{self, SplitMix64};
use crate::weights::{self, WeightField, WeightSpec};

#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl PropertyCheck {
    fn bound(name: &'static str, value: f64, limit: f64) -> Self {
        PropertyCheck {
            name,
            pass: value <= limit,
            detail: format!("{value:.3e} (limit {limit:.1e})"),
        }
    }

    fn flag(name: &'static str, pass: bool, detail: String) -> Self {
        PropertyCheck { name, pass, detail }
    }
}

fn setup() -> (Grid, WeightField) {
    let grid = Grid::new(10, 10, 20).unwrap();
    let wf = WeightField::build(&WeightSpec::Parabolic, 2.0, 1.0, &grid).unwrap();
    (grid, wf)
}

/// Run the whole suite with one seed; deterministic for a fixed seed.
pub fn run_all(seed: u64) -> Vec<PropertyCheck> {
    let mut rng = SplitMix64::new(seed);
    let (grid, wf) = setup();
    let mut checks = Vec::new();

    // Kinematics inverse and determinant identities on random smooth maps.
    {
        let mut worst_inv = 0.0f64;
        let mut worst_det = 0.0f64;
        for _ in 0..3 {
            let noise = synth::smooth_random_fields(&grid, &mut rng, 9, 0.1);
            let mut grad = TensorField::identity(&grid);
            for i in 0..3 {
                for j in 0..3 {
                    grad.comps[i][j].axpy(1.0, &noise[3 * i + j]);
                }
            }
            let kin = Kinematics::from_grad(grad.clone(), &grid).unwrap();
            for idx in 0..grid.len() {
                let prod = mat3::matmul(&kin.inv.mat_at(idx), &grad.mat_at(idx));
                for i in 0..3 {
                    for j in 0..3 {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        worst_inv = worst_inv.max((prod[i][j] - expect).abs());
                    }
                }
                worst_det = worst_det
                    .max((kin.det.as_slice()[idx] - mat3::det_lu(&grad.mat_at(idx))).abs());
            }
        }
        checks.push(PropertyCheck::bound("kinematics-inverse-identity", worst_inv, 1e-12));
        checks.push(PropertyCheck::bound("kinematics-determinant-oracle", worst_det, 1e-13));
    }

    // Piola identity is exact for affine-in-x3 maps.
    {
        let disp = VectorField::from_fn(&grid, |_, _, x3| [0.02 * x3, -0.01 * x3, 0.04 * x3]);
        let kin = Kinematics::from_displacement(&disp, &grid).unwrap();
        let res = geometry::piola_divergence(&kin, &grid).max_abs();
        checks.push(PropertyCheck::bound("piola-affine-exact", res, 1e-13));
    }

    // Curl matrix: antisymmetric with zero diagonal, Frobenius norm doubles
    // the curl vector norm.
    {
        let f = synth::smooth_random_vector(&grid, &mut rng, 1.0);
        let disp = synth::perturbed_map(&grid, 0.03);
        let kin = Kinematics::from_displacement(&disp, &grid).unwrap();
        let lie = geometry::lie_derivatives(&f, &kin, &grid);
        let diag = (0..3)
            .map(|i| lie.curl_mat.comps[i][i].max_abs())
            .fold(0.0f64, f64::max);
        let mut frob_dev = 0.0f64;
        for idx in 0..grid.len() {
            let m = lie.curl_mat.mat_at(idx);
            let frob: f64 = m.iter().flatten().map(|v| v * v).sum();
            let c: f64 = (0..3)
                .map(|i| lie.curl.comps[i].as_slice()[idx].powi(2))
                .sum();
            frob_dev = frob_dev.max((frob - 2.0 * c).abs() / (1.0 + frob));
        }
        checks.push(PropertyCheck::bound("curl-matrix-antisymmetry", diag, 0.0));
        checks.push(PropertyCheck::bound("curl-matrix-frobenius-identity", frob_dev, 1e-12));
    }

    // Pulled-back operators reduce to the plain ones at the identity.
    {
        let f = synth::smooth_random_vector(&grid, &mut rng, 1.0);
        let kin = Kinematics::identity(&grid);
        let lie = geometry::lie_derivatives(&f, &kin, &grid);
        let df = stencil::vector_gradient(&f, &grid);
        let mut dev = lie.grad.clone();
        dev.axpy(-1.0, &df);
        checks.push(PropertyCheck::bound("lie-identity-reduction", dev.max_abs(), 1e-13));
    }

    // Kinematic rates against forward differences.
    {
        let disp = synth::perturbed_map(&grid, 0.04);
        let vel = synth::smooth_random_vector(&grid, &mut rng, 0.1);
        let kin = Kinematics::from_displacement(&disp, &grid).unwrap();
        let dv = stencil::vector_gradient(&vel, &grid);
        let (da, dj) = geometry::kinematic_rates(&kin, &dv, &grid);
        let eps = 1e-6;
        let mut disp_eps = disp.clone();
        disp_eps.axpy(eps, &vel);
        let kin_eps = Kinematics::from_displacement(&disp_eps, &grid).unwrap();
        let mut worst = 0.0f64;
        for idx in 0..grid.len() {
            let a0 = kin.inv.mat_at(idx);
            let a1 = kin_eps.inv.mat_at(idx);
            let d = da.mat_at(idx);
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max(((a1[i][j] - a0[i][j]) / eps - d[i][j]).abs());
                }
            }
            let fd = (kin_eps.det.as_slice()[idx] - kin.det.as_slice()[idx]) / eps;
            worst = worst.max((fd - dj.as_slice()[idx]).abs());
        }
        checks.push(PropertyCheck::bound("kinematic-rates-forward-difference", worst, 1e-5));
    }

    // Norm homogeneity and monotonicity in the derivative order.
    {
        let f = synth::smooth_random_scalar(&grid, &mut rng, 2.0);
        let c = 3.7;
        let n1 = weights::norm_x(&f, &wf, 2, &grid, 4).unwrap();
        let n2 = weights::norm_x(&f.scaled(c), &wf, 2, &grid, 4).unwrap();
        let dev = (n2 - c * n1).abs() / (c * n1);
        checks.push(PropertyCheck::bound("norm-homogeneity", dev, 1e-12));
        let seq: Vec<f64> = (0..=3)
            .map(|b| weights::norm_x(&f, &wf, b, &grid, 4).unwrap())
            .collect();
        let monotone = seq.windows(2).all(|w| w[1] >= w[0]);
        checks.push(PropertyCheck::flag(
            "norm-monotone-in-order",
            monotone,
            format!("{seq:?}"),
        ));
    }

    // Vacuum comparability accepts the degenerate presets, rejects flat.
    {
        let par = weights::check_physical_vacuum(&wf, &grid, 10.0);
        let sine = WeightField::build(&WeightSpec::Sine, 2.0, 1.0, &grid).unwrap();
        let sine_chk = weights::check_physical_vacuum(&sine, &grid, 10.0);
        let flat = WeightField::build(
            &WeightSpec::FromDensity(ScalarField::constant(&grid, 1.0)),
            2.0,
            1.0,
            &grid,
        )
        .unwrap();
        let flat_chk = weights::check_physical_vacuum(&flat, &grid, 10.0);
        checks.push(PropertyCheck::flag(
            "vacuum-comparability",
            par.ok && sine_chk.ok && !flat_chk.ok,
            format!(
                "parabolic C = {:.2}, sine C = {:.2}, flat C = {:.1}",
                par.comparability, sine_chk.comparability, flat_chk.comparability
            ),
        ));
    }

    // Hardy ratio: closed form and scale invariance.
    {
        let g64 = Grid::new(8, 8, 64).unwrap();
        let wf64 = WeightField::build(&WeightSpec::Parabolic, 2.0, 1.0, &g64).unwrap();
        let v = ScalarField::from_fn(&g64, |_, _, x3| x3 - 0.5);
        let r = weights::hardy_ratio(&v, &wf64, &g64).unwrap();
        checks.push(PropertyCheck::bound(
            "hardy-closed-form",
            (r - 2.5).abs() / 2.5,
            0.01,
        ));
        let r2 = weights::hardy_ratio(&v.scaled(41.0), &wf64, &g64).unwrap();
        checks.push(PropertyCheck::bound(
            "hardy-scale-invariance",
            (r - r2).abs() / r,
            1e-13,
        ));
    }

    // Energy report identities and the initial-data cross-check on the
    // presets.
    {
        let disp = synth::perturbed_map(&grid, 0.02);
        let vel = synth::smooth_random_vector(&grid, &mut rng, 0.3);
        let kin = Kinematics::from_displacement(&disp, &grid).unwrap();
        let rep = energies::total_energy(&disp, &vel, 0.0, &kin, &wf, 2, &grid, 4).unwrap();
        let sum_e: f64 = rep.table_e.iter().map(|(_, v)| v).sum();
        let id1 = (rep.instant - (rep.zeroth + sum_e)).abs() / rep.instant;
        let id2 = (rep.total - (rep.instant + rep.curl_velocity)).abs() / rep.total;
        checks.push(PropertyCheck::bound("energy-report-identities", id1.max(id2), 1e-12));

        let mut worst = 0.0f64;
        for preset in [WeightSpec::Parabolic, WeightSpec::Sine] {
            let wfp = WeightField::build(&preset, 2.0, 1.0, &grid).unwrap();
            for velocity in [
                VelocityPreset::Rest,
                VelocityPreset::TangentialShear,
                VelocityPreset::IrrotationalPulse,
                VelocityPreset::Compression,
            ] {
                let mut cfg = SimConfig::bare(grid.n, 2.0);
                cfg.velocity = velocity;
                cfg.amplitude = 0.1;
                let u0 = cfg.initial_velocity(&grid);
                let zero = VectorField::zeros(&grid);
                let kin0 = Kinematics::from_displacement(&zero, &grid).unwrap();
                let rep = energies::total_energy(&zero, &u0, 0.0, &kin0, &wfp, 2, &grid, 4)
                    .unwrap();
                let special = energies::initial_total_energy(&u0, &wfp, 2, &grid, 4).unwrap();
                worst = worst.max((rep.total - special).abs() / special);
            }
        }
        checks.push(PropertyCheck::bound("initial-data-energy-crosscheck", worst, 1e-12));
    }

    // Elliptic operator: linearity, self-adjointness, coercivity, solve
    // round trip, uniqueness.
    {
        let prob = EllipticProblem::new(&wf, 10.0, &grid, 1e-10, 20_000).unwrap();
        let u = synth::smooth_random_scalar(&grid, &mut rng, 1.0);
        let v = synth::smooth_random_scalar(&grid, &mut rng, 1.0);
        let mut combo = u.scaled(2.0);
        combo.axpy(-3.0, &v);
        let mut lin_dev = prob.apply(&combo);
        lin_dev.axpy(-2.0, &prob.apply(&u));
        lin_dev.axpy(3.0, &prob.apply(&v));
        checks.push(PropertyCheck::bound(
            "elliptic-linearity",
            lin_dev.max_abs() / prob.apply(&combo).max_abs().max(1.0),
            1e-12,
        ));
        let a = prob.inner(&prob.apply(&u), &v);
        let b = prob.inner(&u, &prob.apply(&v));
        checks.push(PropertyCheck::bound(
            "elliptic-selfadjointness",
            (a - b).abs() / a.abs().max(1.0),
            1e-10,
        ));
        match prob.coercivity_check(100, rng.next_u64()) {
            Ok(c) => checks.push(PropertyCheck::flag(
                "elliptic-coercivity-samples",
                c > 0.0,
                format!("min B[v,v]/|v|_V^2 = {c:.3e} over 100 samples"),
            )),
            Err(e) => checks.push(PropertyCheck::flag(
                "elliptic-coercivity-samples",
                false,
                e.to_string(),
            )),
        }
        let rhs = prob.apply(&u);
        let sol = prob.solve(&rhs).unwrap();
        let mut dev = sol.clone();
        dev.axpy(-1.0, &u);
        let rel = (prob.inner(&dev, &dev) / prob.inner(&u, &u)).sqrt();
        checks.push(PropertyCheck::bound("elliptic-solve-roundtrip", rel, 10.0 * prob.tol));
        let guess = synth::smooth_random_scalar(&grid, &mut rng, 4.0);
        let (sol2, _) = prob.solve_from(&rhs, guess).unwrap();
        let mut dev = sol2;
        dev.axpy(-1.0, &sol);
        let rel = (prob.inner(&dev, &dev) / prob.inner(&u, &u)).sqrt();
        checks.push(PropertyCheck::bound("elliptic-solve-uniqueness", rel, 10.0 * prob.tol));
    }

    // Acceleration ignores the velocity bit-for-bit.
    {
        let disp = synth::perturbed_map(&grid, 0.02);
        let s1 = FlowState::new(disp.clone(), VectorField::zeros(&grid), 0.0);
        let s2 = FlowState::new(disp, synth::smooth_random_vector(&grid, &mut rng, 2.0), 0.0);
        let a1 = dynamics::acceleration(&s1, &wf, &grid).unwrap();
        let a2 = dynamics::acceleration(&s2, &wf, &grid).unwrap();
        let same = (0..3).all(|i| a1.comps[i].as_slice() == a2.comps[i].as_slice());
        checks.push(PropertyCheck::flag(
            "acceleration-velocity-independence",
            same,
            "bit-for-bit".into(),
        ));
    }

    // Leapfrog reversibility.
    {
        let rails = Guardrails::default();
        let mut cfg = SimConfig::bare(grid.n, 2.0);
        cfg.velocity = VelocityPreset::TangentialShear;
        cfg.amplitude = 1e-2;
        let s0 = FlowState::initial(&grid, cfg.initial_velocity(&grid));
        let dt = 1e-3;
        let mut fwd = s0.clone();
        for _ in 0..10 {
            fwd = dynamics::step_leapfrog(&fwd, &wf, &grid, dt, &rails).unwrap();
        }
        let mut back = FlowState::new(fwd.disp.clone(), fwd.vel.scaled(-1.0), 0.0);
        for _ in 0..10 {
            back = dynamics::step_leapfrog(&back, &wf, &grid, dt, &rails).unwrap();
        }
        let mut dev = back.disp.clone();
        dev.axpy(-1.0, &s0.disp);
        checks.push(PropertyCheck::bound("leapfrog-reversibility", dev.max_abs(), 1e-12));
    }

    // Frozen linear operators: symmetry and positive semidefiniteness.
    {
        let disp = synth::perturbed_map(&grid, 0.04);
        let kin = Kinematics::from_displacement(&disp, &grid).unwrap();
        let ops = FrozenLinearOps::new(&kin, &wf, &grid);
        let f = synth::smooth_random_vector(&grid, &mut rng, 1.0);
        let g = synth::smooth_random_vector(&grid, &mut rng, 1.0);
        let lhs = ops.elastic(&f).dot(&g);
        let rhs = f.dot(&ops.elastic(&g));
        checks.push(PropertyCheck::bound(
            "elastic-operator-symmetry",
            (lhs - rhs).abs() / lhs.abs().max(1.0),
            1e-10,
        ));
        let quad = ops.elastic(&f).dot(&f).min(ops.divergence(&f).dot(&f));
        checks.push(PropertyCheck::flag(
            "linear-operators-positive-semidefinite",
            quad >= -1e-10,
            format!("min quadratic form {quad:.3e}"),
        ));
    }

    // Curl of the acceleration vanishes for the identity map.
    {
        let s = FlowState::rest(&grid);
        let r = dynamics::curl_acceleration_residual(&s, &wf, &grid).unwrap();
        checks.push(PropertyCheck::bound("curl-of-acceleration-identity", r, 1e-13));
    }

    // Field dump round trip.
    {
        let f = synth::smooth_random_scalar(&grid, &mut rng, 1.0);
        let dir = std::env::temp_dir().join(format!("vacflow-verify-{}", std::process::id()));
        std::fs::create_dir_all(&dir).ok();
        let stem = dir.join("roundtrip");
        let ok = io::write_fields(&stem, &grid, &[("f", &f)])
            .and_then(|_| io::read_fields(&stem))
            .map(|(_, fields)| fields[0].1.as_slice() == f.as_slice())
            .unwrap_or(false);
        std::fs::remove_dir_all(&dir).ok();
        checks.push(PropertyCheck::flag(
            "field-serialization-roundtrip",
            ok,
            "bit-for-bit".into(),
        ));
    }

    checks
}
