//! The evolving unknown: flow map (as a displacement), velocity, and clock.

use crate::error::Result;
use crate::field::VectorField;
use crate::geometry::Kinematics;
use crate::grid::Grid;

/// Flow-map state. The map itself is `eta = x + disp`; storing the
/// displacement keeps the field periodic in the tangential directions.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub disp: VectorField,
    pub vel: VectorField,
    pub t: f64,
}

impl FlowState {
    pub fn new(disp: VectorField, vel: VectorField, t: f64) -> Self {
        FlowState { disp, vel, t }
    }

    /// Identity map at rest.
    pub fn rest(grid: &Grid) -> Self {
        FlowState {
            disp: VectorField::zeros(grid),
            vel: VectorField::zeros(grid),
            t: 0.0,
        }
    }

    /// Identity map with initial velocity `u0`.
    pub fn initial(grid: &Grid, u0: VectorField) -> Self {
        FlowState {
            disp: VectorField::zeros(grid),
            vel: u0,
            t: 0.0,
        }
    }

    pub fn kinematics(&self, grid: &Grid) -> Result<Kinematics> {
        Kinematics::from_displacement(&self.disp, grid)
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        self.disp.check_shape(grid)?;
        self.vel.check_shape(grid)?;
        self.disp.check_finite()?;
        self.vel.check_finite()
    }
}
