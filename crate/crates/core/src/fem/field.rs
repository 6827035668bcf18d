use serde::{Deserialize, Serialize};

use super::mesh::Grid;
use crate::error::{Error, Result};
use crate::problem_model::Point;

/// Scalar field given by its values at the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidParameter(format!(
                "{} values for {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.num_nodes()] }
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(grid: Grid, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.num_nodes()).map(|i| f(&grid.node_point(i))).collect();
        Self { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_same_grid(&self, other: &NodalField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &NodalField) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn sub(&self, other: &NodalField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &NodalField) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self { grid: self.grid, values })
    }

    /// Restriction of a field on a padded grid to the aligned sub-grid.
    pub fn restrict_to(&self, target: &Grid) -> Result<Self> {
        let dim = target.dim();
        let mut offset = [0usize; 3];
        for (k, o) in offset.iter_mut().enumerate().take(dim) {
            let shift = (target.domain.lower[k] - self.grid.domain.lower[k]) / self.grid.h;
            let m = shift.round();
            if m < 0.0 || (shift - m).abs() > 1e-9 || (target.h - self.grid.h).abs() > 1e-12 * target.h {
                return Err(Error::MeshMismatch);
            }
            *o = m as usize;
            if *o + target.cells[k] > self.grid.cells[k] {
                return Err(Error::MeshMismatch);
            }
        }
        let values = (0..target.num_nodes())
            .map(|i| {
                let ijk = target.node_ijk(i);
                self.values[self.grid.node_index([ijk[0] + offset[0], ijk[1] + offset[1], ijk[2] + offset[2]])]
            })
            .collect();
        Ok(Self { grid: *target, values })
    }
}
