//! Regular cell grid over the room's bounding box.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::vec2::Vec2;

use super::Room;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Interior,
    Wall,
    Exit,
}

/// Geometry of a grid, shared by every per-cell field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLayout<S = f64> {
    pub nx: usize,
    pub ny: usize,
    pub dx: S,
    pub dy: S,
    pub origin: Vec2<S>,
}

impl<S: Real> GridLayout<S> {
    pub fn ncells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2<S> {
        Vec2::new(
            self.origin.x + (S::from_usize(i).unwrap() + S::of(0.5)) * self.dx,
            self.origin.y + (S::from_usize(j).unwrap() + S::of(0.5)) * self.dy,
        )
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn cell_at(&self, p: Vec2<S>) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.dx).floor();
        let fy = ((p.y - self.origin.y) / self.dy).floor();
        let i = fx.max(S::zero()).to_usize().unwrap_or(0).min(self.nx - 1);
        let j = fy.max(S::zero()).to_usize().unwrap_or(0).min(self.ny - 1);
        (i, j)
    }

    pub fn cell_area(&self) -> S {
        self.dx * self.dy
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }
}

/// Flagged grid covering the room's bounding box.
#[derive(Debug, Clone)]
pub struct Grid<S = f64> {
    pub layout: GridLayout<S>,
    pub flags: Vec<CellKind>,
}

impl<S: Real> Grid<S> {
    pub fn kind(&self, i: usize, j: usize) -> CellKind {
        self.flags[self.layout.index(i, j)]
    }

    pub fn is_wall(&self, i: usize, j: usize) -> bool {
        self.kind(i, j) == CellKind::Wall
    }

    pub fn is_exit(&self, i: usize, j: usize) -> bool {
        self.kind(i, j) == CellKind::Exit
    }

    pub fn exit_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.layout.ny {
            for i in 0..self.layout.nx {
                if self.is_exit(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.flags.iter().filter(|&&k| k == kind).count()
    }
}

/// Builds the flagged grid at the given cell size. Cell flags come from
/// cell-center point-in-polygon tests; a cell is an exit cell when its center
/// lies within half a cell of an exit segment.
pub fn build_grid<S: Real>(room: &Room<S>, resolution: S) -> Result<Grid<S>> {
    if resolution <= S::zero() {
        return Err(Error::BadResolution(resolution.to_f64_lossy()));
    }
    let (lo, hi) = room.outer.bounding_box();
    let w = hi.x - lo.x;
    let h = hi.y - lo.y;
    if w <= S::zero() || h <= S::zero() {
        return Err(Error::DegeneratePolygon("empty bounding box".into()));
    }
    let nx = (w / resolution).ceil().to_usize().unwrap_or(0).max(1);
    let ny = (h / resolution).ceil().to_usize().unwrap_or(0).max(1);
    let layout = GridLayout {
        nx,
        ny,
        dx: w / S::from_usize(nx).unwrap(),
        dy: h / S::from_usize(ny).unwrap(),
        origin: lo,
    };

    // Inclusive at exactly half a cell so boundary-row centers qualify.
    let exit_reach = S::of(0.5) * layout.dx.max(layout.dy) * S::of(1.0 + 1e-9);

    let mut flags = vec![CellKind::Interior; layout.ncells()];
    for j in 0..ny {
        for i in 0..nx {
            let c = layout.cell_center(i, j);
            let idx = layout.index(i, j);
            if !room.is_inside(c) {
                flags[idx] = CellKind::Wall;
            } else if room.exits.iter().any(|e| e.distance_to(c) <= exit_reach) {
                flags[idx] = CellKind::Exit;
            }
        }
    }
    Ok(Grid { layout, flags })
}
