//! Correction step: random walks carry the excess of supersaturated cells
//! across the grid until it fits under the density ceiling or leaves
//! through an exit. The per-cell mass emitted on the way is the odometer,
//! the discrete stand-in for the pressure.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{CellKind, Grid, GridLayout};
use crate::real::Real;

use super::density::DensityGrid;

/// Mass emitted per cell during one correction, in density units. Zero
/// everywhere exactly when the prediction was already feasible.
#[derive(Debug, Clone)]
pub struct Odometer<S = f64> {
    pub layout: GridLayout<S>,
    pub values: Vec<S>,
}

impl<S: Real> Odometer<S> {
    pub fn accumulate(&mut self, other: &Odometer<S>) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += *b;
        }
    }
}

/// The odometer read as a pressure field: the identification is direct,
/// accumulation over a time window happens at the caller.
pub fn pressure_from_odometer<S: Real>(od: &Odometer<S>) -> Vec<S> {
    od.values.clone()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProjectionParams {
    /// Walk steps allowed per overloaded source before giving up; `None`
    /// picks 100 times the cell count.
    pub max_walk_steps: Option<usize>,
}

/// Projects a predicted single-population density back under the ceiling.
pub fn stochastic_project<S: Real, R: Rng>(
    predicted: &DensityGrid<S>,
    grid: &Grid<S>,
    rng: &mut R,
    params: &ProjectionParams,
) -> Result<(DensityGrid<S>, Odometer<S>)> {
    let mut comps = [predicted.rho.clone()];
    let mut absorbed = [predicted.absorbed.clone()];
    let odometer = project_components(grid, &mut comps, &mut absorbed, rng, params)?;
    let [rho] = comps;
    let [absorbed] = absorbed;
    Ok((
        DensityGrid {
            layout: predicted.layout,
            rho,
            absorbed,
        },
        Odometer {
            layout: predicted.layout,
            values: odometer,
        },
    ))
}

/// Shared projection kernel over K population components whose joint
/// density obeys the ceiling. Sources are cells whose component total
/// exceeds 1; each launches one walker carrying all components of the
/// excess, split proportionally to their local shares.
///
/// Walk rules: uniform 4-neighbor steps; stepping into a wall or off the
/// grid stays put for that step; an exit swallows the whole carry into the
/// per-component absorbed tallies; the first unsaturated interior cell on
/// the way is filled up to joint density exactly 1, and the remaining
/// carry starts a fresh walk from the source. Restarting is what makes
/// the seed average converge to the flat saturated profile; a walker that
/// kept going from the deposit site would hug one side of the saturated
/// zone. The odometer logs the carried total each time the walker leaves
/// a cell.
///
/// With one component the arithmetic keeps interior densities at or below
/// 1 exactly; a second all-zero component changes nothing, bit for bit.
pub fn project_components<S: Real, R: Rng>(
    grid: &Grid<S>,
    comps: &mut [Vec<S>],
    absorbed: &mut [Vec<S>],
    rng: &mut R,
    params: &ProjectionParams,
) -> Result<Vec<S>> {
    let layout = grid.layout;
    let ncells = layout.ncells();
    let ncomp = comps.len();
    assert!(ncomp >= 1 && absorbed.len() == ncomp);
    let step_cap = params.max_walk_steps.unwrap_or(100 * ncells);

    let mut odometer = vec![S::zero(); ncells];
    let mut carry = vec![S::zero(); ncomp];
    let one = S::one();

    let total = |comps: &[Vec<S>], idx: usize| -> S {
        let mut t = S::zero();
        for c in comps {
            t += c[idx];
        }
        t
    };

    for src in 0..ncells {
        let t = total(comps, src);
        if t <= one {
            continue;
        }

        // Scale the source down to joint density exactly 1, keeping the
        // component shares. The largest component absorbs the rounding
        // slack so the stored total hits 1 on the nose.
        let pivot = argmax(comps, src);
        let inv = one / t;
        for (k, c) in comps.iter_mut().enumerate() {
            if k == pivot {
                continue;
            }
            let keep = c[src] * inv;
            carry[k] = c[src] - keep;
            c[src] = keep;
        }
        let mut others = S::zero();
        for (k, c) in comps.iter().enumerate() {
            if k != pivot {
                others += c[src];
            }
        }
        let keep_pivot = one - others;
        carry[pivot] = (comps[pivot][src] - keep_pivot).max(S::zero());
        comps[pivot][src] = keep_pivot;

        let mut ctotal = S::zero();
        for &c in carry.iter() {
            ctotal += c;
        }

        let mut cell = src;
        let mut steps = 0usize;
        while ctotal > S::zero() {
            steps += 1;
            if steps > step_cap {
                return Err(Error::ProjectionStalled(step_cap));
            }
            let (ci, cj) = (cell % layout.nx, cell / layout.nx);
            let (di, dj): (isize, isize) = match rng.gen_range(0..4u8) {
                0 => (1, 0),
                1 => (-1, 0),
                2 => (0, 1),
                _ => (0, -1),
            };
            let ni = ci as isize + di;
            let nj = cj as isize + dj;
            if ni < 0 || nj < 0 || ni >= layout.nx as isize || nj >= layout.ny as isize {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            match grid.kind(ni, nj) {
                CellKind::Wall => continue,
                CellKind::Exit => {
                    odometer[cell] += ctotal;
                    let exit_idx = layout.index(ni, nj);
                    for (k, a) in absorbed.iter_mut().enumerate() {
                        a[exit_idx] += carry[k];
                        carry[k] = S::zero();
                    }
                    ctotal = S::zero();
                }
                CellKind::Interior => {
                    odometer[cell] += ctotal;
                    let here = layout.index(ni, nj);
                    cell = here;
                    let t = total(comps, here);
                    let cap = one - t;
                    if cap <= S::zero() {
                        continue;
                    }
                    let pivot = argmax_slice(&carry);
                    if ctotal >= cap {
                        // Fill the cell to joint density exactly 1.
                        let scale = cap / ctotal;
                        for (k, c) in comps.iter_mut().enumerate() {
                            if k == pivot {
                                continue;
                            }
                            let add = carry[k] * scale;
                            c[here] += add;
                            carry[k] = (carry[k] - add).max(S::zero());
                        }
                        let mut others = S::zero();
                        for (k, c) in comps.iter().enumerate() {
                            if k != pivot {
                                others += c[here];
                            }
                        }
                        let new_pivot = one - others;
                        let gain = new_pivot - comps[pivot][here];
                        comps[pivot][here] = new_pivot;
                        carry[pivot] = (carry[pivot] - gain).max(S::zero());
                    } else {
                        for (k, c) in comps.iter_mut().enumerate() {
                            if k == pivot {
                                continue;
                            }
                            c[here] += carry[k];
                            carry[k] = S::zero();
                        }
                        comps[pivot][here] += carry[pivot];
                        carry[pivot] = S::zero();
                        if total(comps, here) > one {
                            let mut others = S::zero();
                            for (k, c) in comps.iter().enumerate() {
                                if k != pivot {
                                    others += c[here];
                                }
                            }
                            comps[pivot][here] = one - others;
                        }
                    }
                    ctotal = S::zero();
                    for &c in carry.iter() {
                        ctotal += c;
                    }
                    cell = src;
                }
            }
        }
    }

    Ok(odometer)
}

fn argmax<S: Real>(comps: &[Vec<S>], idx: usize) -> usize {
    let mut best = 0;
    for k in 1..comps.len() {
        if comps[k][idx] > comps[best][idx] {
            best = k;
        }
    }
    best
}

fn argmax_slice<S: Real>(values: &[S]) -> usize {
    let mut best = 0;
    for k in 1..values.len() {
        if values[k] > values[best] {
            best = k;
        }
    }
    best
}
