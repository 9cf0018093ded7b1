//! Room geometry: polygonal walls, obstacles, exit segments, and the grids,
//! distance fields and desired-velocity fields derived from them.

mod distance;
mod grid;
mod velocity;

pub use distance::{compute_distance_field, DistanceField};
pub use grid::{build_grid, CellKind, Grid, GridLayout};
pub use velocity::{desired_velocity_from_distance, sample_velocity, VelocityField};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::vec2::Vec2;

/// Closed polygon given by its vertices in order (no repeated last vertex).
#[derive(Debug, Clone)]
pub struct Polygon<S = f64> {
    pub vertices: Vec<Vec2<S>>,
}

impl<S: Real> Polygon<S> {
    pub fn new(vertices: Vec<Vec2<S>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "{} vertices",
                vertices.len()
            )));
        }
        let poly = Polygon { vertices };
        if poly.signed_area().abs() <= S::epsilon() {
            return Err(Error::DegeneratePolygon("zero area".into()));
        }
        Ok(poly)
    }

    pub fn signed_area(&self) -> S {
        let n = self.vertices.len();
        let mut acc = S::zero();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.cross(b);
        }
        acc / S::of(2.0)
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment<S>> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment {
            a: self.vertices[i],
            b: self.vertices[(i + 1) % n],
        })
    }

    /// Even-odd point-in-polygon test. Points on the boundary may land on
    /// either side; callers that care use a tolerance band instead.
    pub fn contains(&self, p: Vec2<S>) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi.y > p.y) != (vj.y > p.y) {
                let t = (p.y - vi.y) / (vj.y - vi.y);
                let x_cross = vi.x + t * (vj.x - vi.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Checks that no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let edges: Vec<Segment<S>> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if edges[i].intersects(&edges[j]) {
                    return false;
                }
            }
        }
        true
    }

    pub fn bounding_box(&self) -> (Vec2<S>, Vec2<S>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }
}

/// Line segment between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<S = f64> {
    pub a: Vec2<S>,
    pub b: Vec2<S>,
}

impl<S: Real> Segment<S> {
    pub fn new(a: Vec2<S>, b: Vec2<S>) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> S {
        (self.b - self.a).norm()
    }

    /// Closest point of the segment to `p`.
    pub fn closest_point(&self, p: Vec2<S>) -> Vec2<S> {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq == S::zero() {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / len_sq).max(S::zero()).min(S::one());
        self.a + d * t
    }

    pub fn distance_to(&self, p: Vec2<S>) -> S {
        (p - self.closest_point(p)).norm()
    }

    /// Proper or touching intersection of two segments.
    pub fn intersects(&self, other: &Segment<S>) -> bool {
        let d1 = self.b - self.a;
        let d2 = other.b - other.a;
        let denom = d1.cross(d2);
        let diff = other.a - self.a;
        if denom == S::zero() {
            // Parallel: overlapping collinear segments count as intersecting.
            if diff.cross(d1) != S::zero() {
                return false;
            }
            let len_sq = d1.norm_sq();
            if len_sq == S::zero() {
                return (other.a - self.a).norm_sq() == S::zero();
            }
            let t0 = (other.a - self.a).dot(d1) / len_sq;
            let t1 = (other.b - self.a).dot(d1) / len_sq;
            let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
            return hi >= S::zero() && lo <= S::one();
        }
        let t = diff.cross(d2) / denom;
        let u = diff.cross(d1) / denom;
        t >= S::zero() && t <= S::one() && u >= S::zero() && u <= S::one()
    }
}

/// The room: outer boundary, obstacles, and exit segments on the boundary.
#[derive(Debug, Clone)]
pub struct Room<S = f64> {
    pub outer: Polygon<S>,
    pub obstacles: Vec<Polygon<S>>,
    pub exits: Vec<Segment<S>>,
}

impl<S: Real> Room<S> {
    pub fn new(
        outer: Polygon<S>,
        obstacles: Vec<Polygon<S>>,
        exits: Vec<Segment<S>>,
    ) -> Result<Self> {
        if !outer.is_simple() {
            return Err(Error::InvalidRoom("outer boundary self-intersects".into()));
        }
        for (k, obs) in obstacles.iter().enumerate() {
            if !obs.is_simple() {
                return Err(Error::InvalidRoom(format!("obstacle {k} self-intersects")));
            }
            for v in &obs.vertices {
                if !outer.contains(*v) && outer.edges().all(|e| e.distance_to(*v) > S::epsilon()) {
                    return Err(Error::InvalidRoom(format!(
                        "obstacle {k} leaves the outer boundary"
                    )));
                }
            }
            for other in obstacles.iter().take(k) {
                for e in obs.edges() {
                    for f in other.edges() {
                        if e.intersects(&f) {
                            return Err(Error::InvalidRoom(format!(
                                "obstacle {k} intersects another obstacle"
                            )));
                        }
                    }
                }
            }
        }
        let room = Room {
            outer,
            obstacles,
            exits,
        };
        for (k, exit) in room.exits.iter().enumerate() {
            if !room.on_outer_boundary(exit) {
                return Err(Error::InvalidRoom(format!(
                    "exit {k} does not lie on the outer boundary"
                )));
            }
        }
        Ok(room)
    }

    fn on_outer_boundary(&self, seg: &Segment<S>) -> bool {
        let tol = self.boundary_tol();
        let mid = (seg.a + seg.b) * S::of(0.5);
        for p in [seg.a, seg.b, mid] {
            if self.outer.edges().all(|e| e.distance_to(p) > tol) {
                return false;
            }
        }
        true
    }

    fn boundary_tol(&self) -> S {
        let (lo, hi) = self.outer.bounding_box();
        (hi - lo).norm() * S::of(1e-9)
    }

    /// Point strictly inside the walkable area: inside the outer boundary and
    /// outside every obstacle.
    pub fn is_inside(&self, p: Vec2<S>) -> bool {
        self.outer.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Wall segments seen by disks: the outer boundary with the exit spans
    /// removed, plus all obstacle edges.
    pub fn wall_segments(&self) -> Vec<Segment<S>> {
        let tol = self.boundary_tol();
        let mut walls = Vec::new();
        for edge in self.outer.edges() {
            subtract_exits(edge, &self.exits, tol, &mut walls);
        }
        for obs in &self.obstacles {
            walls.extend(obs.edges());
        }
        walls
    }
}

/// Removes the parts of `edge` covered by collinear exit segments and pushes
/// the remaining sub-segments.
fn subtract_exits<S: Real>(
    edge: Segment<S>,
    exits: &[Segment<S>],
    tol: S,
    out: &mut Vec<Segment<S>>,
) {
    let d = edge.b - edge.a;
    let len = d.norm();
    if len <= tol {
        return;
    }
    let dir = d / len;
    let mut holes: Vec<(S, S)> = Vec::new();
    for exit in exits {
        if exit.distance_to(edge.a).min(exit.distance_to(edge.b)) > len {
            continue;
        }
        // Collinear with the edge?
        let da = (exit.a - edge.a).cross(dir).abs();
        let db = (exit.b - edge.a).cross(dir).abs();
        if da > tol || db > tol {
            continue;
        }
        let ta = (exit.a - edge.a).dot(dir);
        let tb = (exit.b - edge.a).dot(dir);
        let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
        let lo = lo.max(S::zero());
        let hi = hi.min(len);
        if hi > lo {
            holes.push((lo, hi));
        }
    }
    holes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut cursor = S::zero();
    for (lo, hi) in holes {
        if lo > cursor + tol {
            out.push(Segment::new(edge.a + dir * cursor, edge.a + dir * lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor + tol < len {
        out.push(Segment::new(edge.a + dir * cursor, edge.b));
    }
}

/// Axis-aligned rectangular room helper, used all over the tests and
/// scenario setup.
pub fn rectangle<S: Real>(x0: S, y0: S, x1: S, y1: S) -> Polygon<S> {
    Polygon::new(vec![
        Vec2::new(x0, y0),
        Vec2::new(x1, y0),
        Vec2::new(x1, y1),
        Vec2::new(x0, y1),
    ])
    .expect("rectangle is a valid polygon")
}
