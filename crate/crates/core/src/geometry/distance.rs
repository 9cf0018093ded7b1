//! Distance-to-exit field: Dijkstra over the 8-neighbor cell graph with
//! Euclidean edge lengths. Simpler than fast marching and deterministic; the
//! metric overestimates true distances by at most a factor 1/cos(pi/8).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::real::Real;

use super::{Grid, GridLayout};

/// Per-cell shortest-path distance to the exit set. Wall cells and interior
/// cells disconnected from every exit hold `+inf`.
#[derive(Debug, Clone)]
pub struct DistanceField<S = f64> {
    pub layout: GridLayout<S>,
    pub values: Vec<S>,
}

impl<S: Real> DistanceField<S> {
    pub fn value(&self, i: usize, j: usize) -> S {
        self.values[self.layout.index(i, j)]
    }

    pub fn is_reachable(&self, i: usize, j: usize) -> bool {
        self.value(i, j).is_finite()
    }
}

struct HeapEntry<S> {
    dist: S,
    cell: usize,
}

impl<S: Real> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.cell == other.cell
    }
}
impl<S: Real> Eq for HeapEntry<S> {}
impl<S: Real> Ord for HeapEntry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance; distances are never NaN.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| other.cell.cmp(&self.cell))
    }
}
impl<S: Real> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn compute_distance_field<S: Real>(grid: &Grid<S>) -> Result<DistanceField<S>> {
    let layout = grid.layout;
    let n = layout.ncells();
    let mut dist = vec![S::infinity(); n];
    let mut heap: BinaryHeap<HeapEntry<S>> = BinaryHeap::new();

    for j in 0..layout.ny {
        for i in 0..layout.nx {
            if grid.is_exit(i, j) {
                let idx = layout.index(i, j);
                dist[idx] = S::zero();
                heap.push(HeapEntry {
                    dist: S::zero(),
                    cell: idx,
                });
            }
        }
    }
    if heap.is_empty() {
        return Err(Error::NoExitCell);
    }

    let diag = (layout.dx * layout.dx + layout.dy * layout.dy).sqrt();
    let steps: [(isize, isize); 8] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ];

    while let Some(HeapEntry { dist: d, cell }) = heap.pop() {
        if d > dist[cell] {
            continue;
        }
        let i = (cell % layout.nx) as isize;
        let j = (cell / layout.nx) as isize;
        for (di, dj) in steps {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= layout.nx as isize || nj >= layout.ny as isize {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            if grid.is_wall(ni, nj) {
                continue;
            }
            // Diagonal moves may not cut wall corners.
            if di != 0 && dj != 0 {
                let ortho_a = grid.is_wall(ni, j as usize);
                let ortho_b = grid.is_wall(i as usize, nj);
                if ortho_a || ortho_b {
                    continue;
                }
            }
            let w = if di == 0 {
                layout.dy
            } else if dj == 0 {
                layout.dx
            } else {
                diag
            };
            let nd = d + w;
            let nidx = layout.index(ni, nj);
            if nd < dist[nidx] {
                dist[nidx] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    cell: nidx,
                });
            }
        }
    }

    Ok(DistanceField {
        layout,
        values: dist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, rectangle, Polygon, Room, Segment};
    use crate::vec2::Vec2;

    fn room_with_right_exit(x1: f64, y1: f64) -> Room<f64> {
        Room::new(
            rectangle(0.0, 0.0, x1, y1),
            vec![],
            vec![Segment::new(Vec2::new(x1, 0.0), Vec2::new(x1, y1))],
        )
        .unwrap()
    }

    #[test]
    fn straight_line_distance_to_right_wall() {
        let room = room_with_right_exit(1.0, 1.0);
        let grid = build_grid(&room, 0.1).unwrap();
        let field = compute_distance_field(&grid).unwrap();
        let dx = grid.layout.dx;
        for j in 0..10 {
            for i in 0..10 {
                let c = grid.layout.cell_center(i, j);
                let exact = 1.0 - c.x - dx / 2.0; // to the exit cell column
                let exact = exact.max(0.0);
                assert!(
                    (field.value(i, j) - exact).abs() <= dx + 1e-12,
                    "cell ({i},{j}): {} vs {}",
                    field.value(i, j),
                    exact
                );
            }
        }
    }

    #[test]
    fn exit_cells_are_zero() {
        let room = room_with_right_exit(1.0, 1.0);
        let grid = build_grid(&room, 0.1).unwrap();
        let field = compute_distance_field(&grid).unwrap();
        for (i, j) in grid.exit_cells() {
            assert_eq!(field.value(i, j), 0.0);
        }
        for v in &field.values {
            assert!(*v >= 0.0);
        }
    }

    #[test]
    fn no_exit_is_an_error() {
        let room = Room::new(rectangle(0.0, 0.0, 1.0, 1.0), vec![], vec![]).unwrap();
        let grid = build_grid(&room, 0.1).unwrap();
        assert!(matches!(
            compute_distance_field(&grid),
            Err(Error::NoExitCell)
        ));
    }

    #[test]
    fn routes_around_a_wall() {
        // Vertical wall from the bottom at x in [4.0, 4.4], leaving a gap on top.
        // A point on the left must detour over the wall's top corner.
        let room = Room::new(
            rectangle(0.0, 0.0, 8.0, 4.0),
            vec![rectangle(4.0, 0.0, 4.4, 3.0)],
            vec![Segment::new(Vec2::new(8.0, 0.0), Vec2::new(8.0, 4.0))],
        )
        .unwrap();
        let grid = build_grid(&room, 0.1).unwrap();
        let field = compute_distance_field(&grid).unwrap();

        let p = Vec2::new(1.05, 1.05);
        let (i, j) = grid.layout.cell_at(p);
        let d = field.value(i, j);
        let euclid = 8.0 - p.x;
        assert!(d > euclid + 0.5, "must detour: {d} vs straight {euclid}");

        // Unfolded geodesic: p -> left wall-top corner -> along the top edge
        // of the wall -> straight to the exit wall.
        let c1 = Vec2::new(4.0, 3.0);
        let geodesic: f64 = (c1 - p).norm() + 0.4 + (8.0 - 4.4);
        // 8-neighbor metric distortion is at most 1/cos(pi/8) - 1 ~ 8.25%,
        // plus one cell of discretization slack.
        let slack = 0.0825 * geodesic + 2.0 * grid.layout.dx;
        assert!(
            (d - geodesic).abs() <= slack,
            "geodesic {geodesic}, grid {d}, slack {slack}"
        );
        assert!(d >= geodesic - 2.0 * grid.layout.dx);
    }

    #[test]
    fn disconnected_cells_are_infinite() {
        // Square annulus sealing off the room center. A slit much thinner
        // than a cell keeps the polygon simple without opening a path.
        let e = 1e-3;
        let ring = Polygon::new(vec![
            Vec2::new(1.0, 1.0),
            Vec2::new(4.0, 1.0),
            Vec2::new(4.0, 4.0),
            Vec2::new(2.5 + e, 4.0),
            Vec2::new(2.5 + e, 3.5),
            Vec2::new(3.5, 3.5),
            Vec2::new(3.5, 1.5),
            Vec2::new(1.5, 1.5),
            Vec2::new(1.5, 3.5),
            Vec2::new(2.5 - e, 3.5),
            Vec2::new(2.5 - e, 4.0),
            Vec2::new(1.0, 4.0),
        ])
        .unwrap();
        let room = Room::new(
            rectangle(0.0, 0.0, 5.0, 5.0),
            vec![ring],
            vec![Segment::new(Vec2::new(5.0, 0.0), Vec2::new(5.0, 5.0))],
        )
        .unwrap();
        let grid = build_grid(&room, 0.25).unwrap();
        let field = compute_distance_field(&grid).unwrap();
        let (i, j) = grid.layout.cell_at(Vec2::new(2.5, 2.5));
        assert!(!grid.is_wall(i, j));
        assert!(!field.is_reachable(i, j));
        let (i, j) = grid.layout.cell_at(Vec2::new(0.2, 0.2));
        assert!(field.is_reachable(i, j));
    }
}
