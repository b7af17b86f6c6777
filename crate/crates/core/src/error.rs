//! Error type shared by all solver modules.

use thiserror::Error;

/// Errors produced by grid operations, field algebra, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field shape {found:?} does not match grid shape {expected:?}")]
    ShapeMismatch {
        expected: [usize; 3],
        found: [usize; 3],
    },

    #[error("grid too small: each axis needs at least {min} nodes, got {dims:?}")]
    GridTooSmall { dims: [usize; 3], min: usize },

    #[error(
        "degenerate flow map: jacobian determinant {det:.6e} <= 0 at node ({i1}, {i2}, {i3})"
    )]
    DegenerateMap {
        i1: usize,
        i2: usize,
        i3: usize,
        det: f64,
    },

    #[error("invalid adiabatic exponent gamma = {gamma}: must be > 1 (the degeneracy exponent 1/(gamma-1) is undefined otherwise)")]
    InvalidExponent { gamma: f64 },

    #[error("invalid density: rho0 = {value:.6e} at node ({i1}, {i2}, {i3}) (must be >= 0, > 0 in the interior)")]
    InvalidDensity {
        i1: usize,
        i2: usize,
        i3: usize,
        value: f64,
    },

    #[error("derivative order {order} exceeds the configured maximum {max}")]
    DerivOrder { order: usize, max: usize },

    #[error("derivative order {order} unresolvable on {n3} normal cells (stencil support needs n3 >= {needed})")]
    Resolution {
        order: usize,
        n3: usize,
        needed: usize,
    },

    #[error("degenerate test function: weighted denominator vanishes")]
    DegenerateTestFunction,

    #[error("solver failed to converge: relative residual {residual:.3e} after {iters} iterations (target {tol:.3e})")]
    SolverFailure {
        residual: f64,
        iters: usize,
        tol: f64,
    },

    #[error("guardrail breach at t = {t:.6}: max |A - I| = {a_dev:.4} (bound {a_dev_max}), J in [{j_min:.4}, {j_max:.4}] (bounds [{j_lo}, {j_hi}]), worst node ({i1}, {i2}, {i3})")]
    GuardrailBreach {
        t: f64,
        i1: usize,
        i2: usize,
        i3: usize,
        a_dev: f64,
        a_dev_max: f64,
        j_min: f64,
        j_max: f64,
        j_lo: f64,
        j_hi: f64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("file schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
