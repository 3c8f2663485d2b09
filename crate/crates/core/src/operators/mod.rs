//! Radial operators of the linearized Euler-Poisson system, degree by degree.

mod coefficients;
mod gravity;
mod local;
mod nl;
mod potential;
mod vector;

pub use coefficients::*;
pub use gravity::*;
pub use local::*;
pub use nl::*;
pub use potential::*;
pub use vector::*;

use serde::{Deserialize, Serialize};

use crate::discretization::RadialGrid;

/// Nodal samples of a scalar radial function on a grid (P1 interpolation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: &RadialGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_nodes(), "field length must match the grid");
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        Self::new(grid, vec![0.0; grid.n_nodes()])
    }

    /// Interpolate a function at the nodes.
    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::new(grid, grid.nodes.iter().map(|&r| f(r)).collect())
    }

    pub fn at(&self, r: f64) -> f64 {
        self.grid.interpolate(&self.values, r)
    }

    pub fn slope(&self, r: f64) -> f64 {
        self.grid.interpolate_slope(&self.values, r)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(&self.grid, self.values.iter().map(|v| v * s).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}
