//! Feasibility of a velocity field against a saturated density: a packed
//! region can only move in ways that do not compress it further, which on
//! the grid means non-negative divergence wherever the density is at the
//! ceiling.

use crate::geometry::VelocityField;
use crate::macroscale::DensityGrid;
use crate::real::Real;

/// Largest compression (negative divergence) of `velocity` over cells
/// whose density is within `tol` of 1. Zero when every saturated cell is
/// expanded or translated; zero as well when nothing is saturated.
/// Divergence uses central differences, one sided at the grid edge.
pub fn macro_feasibility_check<S: Real>(
    velocity: &VelocityField<S>,
    density: &DensityGrid<S>,
    tol: S,
) -> S {
    let layout = velocity.layout;
    assert!(layout.same_shape(&density.layout));
    let mut worst = S::zero();
    for j in 0..layout.ny {
        for i in 0..layout.nx {
            if density.rho[layout.index(i, j)] < S::one() - tol {
                continue;
            }
            let div = divergence(velocity, i, j);
            worst = worst.max(-div);
        }
    }
    worst
}

fn divergence<S: Real>(field: &VelocityField<S>, i: usize, j: usize) -> S {
    let layout = field.layout;
    let u = |i: usize, j: usize| field.values[layout.index(i, j)];

    let (xl, xr) = (i.saturating_sub(1), (i + 1).min(layout.nx - 1));
    let dudx = (u(xr, j).x - u(xl, j).x) / (layout.dx * S::of((xr - xl) as f64));
    let (yl, yr) = (j.saturating_sub(1), (j + 1).min(layout.ny - 1));
    let dvdy = (u(i, yr).y - u(i, yl).y) / (layout.dy * S::of((yr - yl) as f64));
    dudx + dvdy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, rectangle, Grid, Room};
    use crate::vec2::Vec2;

    fn setup(fill: f64) -> (Grid<f64>, DensityGrid<f64>) {
        let room = Room::new(rectangle(0.0, 0.0, 6.0, 6.0), vec![], vec![]).unwrap();
        let g = build_grid(&room, 0.5).unwrap();
        let mut d = DensityGrid::zeros(&g);
        for v in d.rho.iter_mut() {
            *v = fill;
        }
        (g, d)
    }

    fn field_of(g: &Grid<f64>, f: impl Fn(Vec2<f64>) -> Vec2<f64>) -> VelocityField<f64> {
        let layout = g.layout;
        let mut values = Vec::with_capacity(layout.ncells());
        for j in 0..layout.ny {
            for i in 0..layout.nx {
                values.push(f(layout.cell_center(i, j)));
            }
        }
        VelocityField { layout, values }
    }

    #[test]
    fn expansion_is_feasible() {
        let (g, d) = setup(1.0);
        let sqrt3 = 3.0f64.sqrt();
        let u = field_of(&g, |p| Vec2::new(sqrt3 * p.x, -p.y));
        assert_eq!(macro_feasibility_check(&u, &d, 1e-9), 0.0);
    }

    #[test]
    fn rigid_translation_is_feasible() {
        let (g, d) = setup(1.0);
        let u = field_of(&g, |_| Vec2::new(0.7, -0.3));
        assert_eq!(macro_feasibility_check(&u, &d, 1e-9), 0.0);
    }

    #[test]
    fn contraction_scores_its_divergence() {
        let (g, d) = setup(1.0);
        let u = field_of(&g, |p| Vec2::new(-p.x, -p.y));
        let v = macro_feasibility_check(&u, &d, 1e-9);
        assert!((v - 2.0).abs() < 1e-12, "violation {v}");
    }

    #[test]
    fn unsaturated_cells_are_ignored() {
        let (g, d) = setup(0.5);
        let u = field_of(&g, |p| Vec2::new(-p.x, -p.y));
        assert_eq!(macro_feasibility_check(&u, &d, 1e-9), 0.0);
    }
}
