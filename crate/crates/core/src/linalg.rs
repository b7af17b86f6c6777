//! Matrix-free preconditioned conjugate gradients.
//!
//! Generic over the vector type and the inner product so the same iteration
//! serves the degenerate elliptic solver (weighted inner product on scalar
//! fields) and the implicit steps of the fixed-point scheme (plain inner
//! product on vector fields). Dot products reduce sequentially in storage
//! order, so residual histories are reproducible.

use crate::field::{ScalarField, VectorField};

/// Minimal vector-space surface the iteration needs.
pub trait LinVec: Clone {
    fn axpy_vec(&mut self, a: f64, other: &Self);
    fn scale_vec(&mut self, a: f64);
}

impl LinVec for ScalarField {
    fn axpy_vec(&mut self, a: f64, other: &Self) {
        self.axpy(a, other);
    }
    fn scale_vec(&mut self, a: f64) {
        self.scale(a);
    }
}

impl LinVec for VectorField {
    fn axpy_vec(&mut self, a: f64, other: &Self) {
        self.axpy(a, other);
    }
    fn scale_vec(&mut self, a: f64) {
        self.scale(a);
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iters: usize,
    /// Residual norm relative to the right-hand side, in the iteration's
    /// inner product.
    pub rel_residual: f64,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
}

/// Preconditioned conjugate gradients on `apply(x) = b`.
///
/// `apply` must be self-adjoint positive definite and `precond` self-adjoint
/// positive in the inner product induced by `dot`.
pub fn pcg<T: LinVec>(
    apply: impl Fn(&T) -> T,
    precond: impl Fn(&T) -> T,
    dot: impl Fn(&T, &T) -> f64,
    b: &T,
    x0: T,
    tol: f64,
    max_iter: usize,
) -> (T, SolveReport) {
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        let mut x = x0;
        x.scale_vec(0.0);
        return (
            x,
            SolveReport {
                converged: true,
                iters: 0,
                rel_residual: 0.0,
                history: vec![],
            },
        );
    }
    let mut x = x0;
    let mut r = b.clone();
    r.axpy_vec(-1.0, &apply(&x));
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = dot(&r, &r).sqrt() / b_norm;
    let mut history = Vec::new();
    let mut iters = 0;
    while rel > tol && iters < max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Loss of positive definiteness; stop with the current iterate.
            break;
        }
        let alpha = rz / pap;
        x.axpy_vec(alpha, &p);
        r.axpy_vec(-alpha, &ap);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        let mut p_new = z.clone();
        p_new.axpy_vec(beta, &p);
        p = p_new;
        rel = dot(&r, &r).sqrt() / b_norm;
        history.push(rel);
        iters += 1;
    }
    (
        x,
        SolveReport {
            converged: rel <= tol,
            iters,
            rel_residual: rel,
            history,
        },
    )
}

/// Least-squares slope of `ln(err)` against `ln(h)`; the classical measured
/// convergence order of a refinement ladder.
pub fn fit_order(h: &[f64], err: &[f64]) -> f64 {
    assert_eq!(h.len(), err.len());
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(err)
        .filter(|(_, e)| **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
