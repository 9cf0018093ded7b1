//! Desired-velocity field driving both models: steepest descent of the
//! distance-to-exit field, stored per cell and sampled bilinearly.

use crate::real::Real;
use crate::vec2::Vec2;

use super::{DistanceField, Grid, GridLayout};

/// Per-cell velocity vectors on the same layout as the grid.
#[derive(Debug, Clone)]
pub struct VelocityField<S = f64> {
    pub layout: GridLayout<S>,
    pub values: Vec<Vec2<S>>,
}

impl<S: Real> VelocityField<S> {
    pub fn value(&self, i: usize, j: usize) -> Vec2<S> {
        self.values[self.layout.index(i, j)]
    }
}

/// Builds the desired velocity as the negative gradient of the distance field.
/// With `normalize` the field has magnitude `speed` wherever a direction
/// exists (the usual choice: everyone walks at their comfort speed); without
/// it the raw gradient is scaled by `speed`. Walls, unreachable cells and
/// cells with no usable neighbors get a zero vector.
pub fn desired_velocity_from_distance<S: Real>(
    grid: &Grid<S>,
    field: &DistanceField<S>,
    speed: S,
    normalize: bool,
) -> VelocityField<S> {
    let layout = grid.layout;
    let mut values = vec![Vec2::zero(); layout.ncells()];

    let usable = |i: isize, j: isize| -> Option<S> {
        if i < 0 || j < 0 || i >= layout.nx as isize || j >= layout.ny as isize {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if grid.is_wall(i, j) {
            return None;
        }
        let v = field.value(i, j);
        v.is_finite().then_some(v)
    };

    for j in 0..layout.ny {
        for i in 0..layout.nx {
            if grid.is_wall(i, j) || !field.is_reachable(i, j) {
                continue;
            }
            let here = field.value(i, j);
            let (ii, jj) = (i as isize, j as isize);

            let two = S::of(2.0);
            let gx = match (usable(ii - 1, jj), usable(ii + 1, jj)) {
                (Some(l), Some(r)) => (r - l) / (two * layout.dx),
                (Some(l), None) => (here - l) / layout.dx,
                (None, Some(r)) => (r - here) / layout.dx,
                (None, None) => S::zero(),
            };
            let gy = match (usable(ii, jj - 1), usable(ii, jj + 1)) {
                (Some(b), Some(t)) => (t - b) / (two * layout.dy),
                (Some(b), None) => (here - b) / layout.dy,
                (None, Some(t)) => (t - here) / layout.dy,
                (None, None) => S::zero(),
            };

            let g = Vec2::new(gx, gy);
            values[layout.index(i, j)] = if normalize {
                match (-g).normalized() {
                    Some(dir) => dir * speed,
                    None => Vec2::zero(),
                }
            } else {
                -g * speed
            };
        }
    }

    VelocityField { layout, values }
}

/// Bilinear interpolation between cell centers, clamped to the boundary
/// (queries outside the grid snap to the nearest edge value).
pub fn sample_velocity<S: Real>(field: &VelocityField<S>, p: Vec2<S>) -> Vec2<S> {
    let layout = field.layout;
    let half = S::of(0.5);

    // Continuous cell coordinates with cell centers at integers.
    let fx = (p.x - layout.origin.x) / layout.dx - half;
    let fy = (p.y - layout.origin.y) / layout.dy - half;

    let max_x = S::from_usize(layout.nx - 1).unwrap();
    let max_y = S::from_usize(layout.ny - 1).unwrap();
    let fx = fx.max(S::zero()).min(max_x);
    let fy = fy.max(S::zero()).min(max_y);

    let i0 = fx.floor().to_usize().unwrap().min(layout.nx - 1);
    let j0 = fy.floor().to_usize().unwrap().min(layout.ny - 1);
    let i1 = (i0 + 1).min(layout.nx - 1);
    let j1 = (j0 + 1).min(layout.ny - 1);

    let tx = fx - S::from_usize(i0).unwrap();
    let ty = fy - S::from_usize(j0).unwrap();
    let one = S::one();

    let v00 = field.values[layout.index(i0, j0)];
    let v10 = field.values[layout.index(i1, j0)];
    let v01 = field.values[layout.index(i0, j1)];
    let v11 = field.values[layout.index(i1, j1)];

    v00 * ((one - tx) * (one - ty))
        + v10 * (tx * (one - ty))
        + v01 * ((one - tx) * ty)
        + v11 * (tx * ty)
}
