//! Numerical laboratory for Lagrangian free-boundary gas dynamics on the
//! slab `T^2 x (0, 1)` with a degenerate (vacuum) interface.
//!
//! The crate integrates the flow-map form of the compressible Euler
//! equations, where the enthalpy weight vanishes at the two slab faces and
//! the boundary moves with finite normal acceleration. It provides
//!
//! - structured-grid discrete calculus and flow-map kinematics ([`geometry`]),
//! - the enthalpy weight, weighted Sobolev norms, and Hardy-ratio
//!   diagnostics ([`weights`]),
//! - the full family of weighted energy functionals ([`energies`]),
//! - a degenerate elliptic operator and its matrix-free conjugate-gradient
//!   solver ([`degelliptic`]),
//! - explicit and fixed-point time integration with admissibility
//!   guardrails ([`dynamics`]),
//! - configuration, serialization, convergence studies, and the property
//!   verification suite ([`config`], [`io`], [`convergence`], [`verify`]).

pub mod config;
pub mod convergence;
pub mod degelliptic;
pub mod derivs;
pub mod dynamics;
pub mod energies;
pub mod error;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod parallel;
pub mod stencil;
pub mod synth;
pub mod verify;
pub mod weights;

pub use config::SimConfig;
pub use energies::EnergyReport;
pub use error::{Error, Result};
pub use field::{ScalarField, TensorField, VectorField};
pub use geometry::Kinematics;
pub use grid::Grid;
pub use weights::WeightField;
