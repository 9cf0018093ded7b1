//! Lagrangian prediction step: every cell's mass rides rigidly along the
//! desired velocity sampled at its center and is redistributed over the
//! cells its translated square overlaps.

use crate::error::{Error, Result};
use crate::geometry::{CellKind, Grid, VelocityField};
use crate::real::Real;

use super::density::DensityGrid;

/// Translates each loaded cell by tau times the cell velocity and deposits
/// its mass on the up to four overlapped cells, proportionally to the
/// axis-aligned overlap areas. Deposits landing on wall cells or outside
/// the grid stay in the source cell; deposits on exit cells are absorbed.
/// The result may exceed density 1, that is the correction step's job.
///
/// Shifts are limited to one cell per axis per step. Parts sharing a final
/// destination are merged first, then the heaviest destination receives
/// the remainder of the source mass instead of its own product, so each
/// source conserves its mass exactly and a full bounce off a wall returns
/// the mass bit for bit.
pub fn transport_density<S: Real>(
    density: &DensityGrid<S>,
    grid: &Grid<S>,
    velocity: &VelocityField<S>,
    tau: S,
) -> Result<DensityGrid<S>> {
    let layout = density.layout;
    assert!(
        layout.same_shape(&velocity.layout) && layout.same_shape(&grid.layout),
        "density, grid and velocity must share one layout"
    );

    let mut out = DensityGrid {
        layout,
        rho: vec![S::zero(); layout.ncells()],
        absorbed: density.absorbed.clone(),
    };

    for j in 0..layout.ny {
        for i in 0..layout.nx {
            let idx = layout.index(i, j);
            let mass = density.rho[idx];
            if mass <= S::zero() {
                continue;
            }
            let u = velocity.values[idx];
            let fx = u.x * tau / layout.dx;
            let fy = u.y * tau / layout.dy;
            if fx.abs() > S::one() || fy.abs() > S::one() {
                return Err(Error::CflViolation {
                    displacement: (u.norm() * tau).to_f64_lossy(),
                    cell: layout.dx.min(layout.dy).to_f64_lossy(),
                });
            }

            let ox = fx.abs();
            let oy = fy.abs();
            let di: isize = if fx > S::zero() {
                1
            } else if fx < S::zero() {
                -1
            } else {
                0
            };
            let dj: isize = if fy > S::zero() {
                1
            } else if fy < S::zero() {
                -1
            } else {
                0
            };

            let one = S::one();
            // Targets and overlap weights of the shifted unit square.
            let parts: [(isize, isize, S); 4] = [
                (0, 0, (one - ox) * (one - oy)),
                (di, 0, ox * (one - oy)),
                (0, dj, (one - ox) * oy),
                (di, dj, ox * oy),
            ];

            // Merge parts by where they actually land.
            let mut slots: [(Slot, S); 4] = [(Slot::Keep(idx), S::zero()); 4];
            let mut nslots = 0;
            for &(ddi, ddj, w) in parts.iter() {
                let slot = resolve(grid, i, j, ddi, ddj);
                match slots[..nslots].iter_mut().find(|(s, _)| *s == slot) {
                    Some((_, acc)) => *acc += w,
                    None => {
                        slots[nslots] = (slot, w);
                        nslots += 1;
                    }
                }
            }
            let slots = &slots[..nslots];
            let mut largest = 0;
            for (k, s) in slots.iter().enumerate() {
                if s.1 > slots[largest].1 {
                    largest = k;
                }
            }

            let mut remainder = mass;
            for (k, &(slot, w)) in slots.iter().enumerate() {
                if k == largest {
                    continue;
                }
                let amount = mass * w;
                remainder -= amount;
                deposit(&mut out, slot, amount);
            }
            deposit(&mut out, slots[largest].0, remainder);
        }
    }

    Ok(out)
}

/// Final destination of one overlap part.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Keep(usize),
    Absorb(usize),
}

fn resolve<S: Real>(grid: &Grid<S>, i: usize, j: usize, di: isize, dj: isize) -> Slot {
    let layout = grid.layout;
    let ti = i as isize + di;
    let tj = j as isize + dj;
    let target = if ti < 0 || tj < 0 || ti >= layout.nx as isize || tj >= layout.ny as isize {
        (i, j)
    } else {
        let (ti, tj) = (ti as usize, tj as usize);
        if grid.kind(ti, tj) == CellKind::Wall {
            (i, j)
        } else {
            (ti, tj)
        }
    };
    let idx = layout.index(target.0, target.1);
    if grid.kind(target.0, target.1) == CellKind::Exit {
        Slot::Absorb(idx)
    } else {
        Slot::Keep(idx)
    }
}

fn deposit<S: Real>(out: &mut DensityGrid<S>, slot: Slot, amount: S) {
    if amount == S::zero() {
        return;
    }
    match slot {
        Slot::Keep(idx) => out.rho[idx] += amount,
        Slot::Absorb(idx) => out.absorbed[idx] += amount,
    }
}
