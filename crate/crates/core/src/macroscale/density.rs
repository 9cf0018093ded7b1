//! Cell-averaged density state of the macroscopic model.

use crate::error::{Error, Result};
use crate::geometry::{Grid, GridLayout};
use crate::real::Real;
use crate::vec2::Vec2;

/// Density on the grid, saturation value 1. Wall and exit cells hold zero;
/// whatever reaches an exit cell is booked into the `absorbed` tally
/// instead (also in density units, multiply by the cell area for mass).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<S = f64> {
    pub layout: GridLayout<S>,
    pub rho: Vec<S>,
    pub absorbed: Vec<S>,
}

impl<S: Real> DensityGrid<S> {
    pub fn zeros(grid: &Grid<S>) -> Self {
        DensityGrid {
            layout: grid.layout,
            rho: vec![S::zero(); grid.layout.ncells()],
            absorbed: vec![S::zero(); grid.layout.ncells()],
        }
    }

    /// Wraps explicit per-cell values, enforcing the state invariants:
    /// densities in [0, 1] on interior cells, zero elsewhere.
    pub fn new(grid: &Grid<S>, rho: Vec<S>) -> Result<Self> {
        if rho.len() != grid.layout.ncells() {
            return Err(Error::InfeasibleInitial(format!(
                "density vector has {} cells, grid has {}",
                rho.len(),
                grid.layout.ncells()
            )));
        }
        let density = DensityGrid {
            layout: grid.layout,
            rho,
            absorbed: vec![S::zero(); grid.layout.ncells()],
        };
        density.validate(grid)?;
        Ok(density)
    }

    pub fn validate(&self, grid: &Grid<S>) -> Result<()> {
        for j in 0..self.layout.ny {
            for i in 0..self.layout.nx {
                let v = self.rho[self.layout.index(i, j)];
                if grid.is_wall(i, j) || grid.is_exit(i, j) {
                    if v != S::zero() {
                        return Err(Error::InfeasibleInitial(format!(
                            "nonzero density {} on non-interior cell ({i},{j})",
                            v.to_f64_lossy()
                        )));
                    }
                } else if v < S::zero() || v > S::one() || !v.is_finite() {
                    return Err(Error::InfeasibleInitial(format!(
                        "density {} at cell ({i},{j}) outside [0,1]",
                        v.to_f64_lossy()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, i: usize, j: usize) -> S {
        self.rho[self.layout.index(i, j)]
    }

    /// Sets every interior cell whose center falls in the rectangle.
    pub fn fill_rect(&mut self, grid: &Grid<S>, min: Vec2<S>, max: Vec2<S>, value: S) {
        for j in 0..self.layout.ny {
            for i in 0..self.layout.nx {
                if grid.is_wall(i, j) || grid.is_exit(i, j) {
                    continue;
                }
                let c = self.layout.cell_center(i, j);
                if c.x >= min.x && c.x <= max.x && c.y >= min.y && c.y <= max.y {
                    self.rho[self.layout.index(i, j)] = value;
                }
            }
        }
    }

    /// Mass remaining on the grid, in mass units (density times cell area),
    /// summed in index order so repeated evaluations are bit-identical.
    pub fn interior_mass(&self) -> S {
        let mut sum = S::zero();
        for &v in &self.rho {
            sum += v;
        }
        sum * self.layout.cell_area()
    }

    /// Mass absorbed through exits so far, in mass units.
    pub fn absorbed_mass(&self) -> S {
        let mut sum = S::zero();
        for &v in &self.absorbed {
            sum += v;
        }
        sum * self.layout.cell_area()
    }
}
