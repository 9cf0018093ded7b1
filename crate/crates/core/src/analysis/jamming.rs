//! Local jamming: can a single disk move at all while every other disk
//! and the walls stay put?

use crate::geometry::Segment;
use crate::micro::{gap_and_gradient, wall_gap_and_gradient};
use crate::real::Real;
use crate::vec2::Vec2;

#[derive(Debug, Clone)]
pub struct JammingReport {
    pub jammed: Vec<bool>,
    pub fraction: f64,
}

/// True when no direction of motion keeps every touching gap of disk `i`
/// from shrinking. A motion v is admissible when a.v >= 0 for each
/// contact normal a pointing away from the obstacle; the disk is jammed
/// exactly when that cone is {0}.
///
/// The cone of an intersection of half planes is nonempty iff some
/// boundary ray of one of the half planes lies in it, so checking the
/// normals and their two perpendiculars decides the question exactly.
pub fn is_locally_jammed<S: Real>(
    positions: &[Vec2<S>],
    radius: S,
    walls: &[Segment<S>],
    i: usize,
    eps_act: S,
) -> bool {
    let normals = contact_normals(positions, radius, walls, i, eps_act);
    if normals.is_empty() {
        return false;
    }
    let tol = -S::of(1e-12);
    let mut candidates = Vec::with_capacity(3 * normals.len());
    for &a in &normals {
        candidates.push(a);
        candidates.push(a.perp());
        candidates.push(-a.perp());
    }
    !candidates
        .iter()
        .any(|&c| normals.iter().all(|&a| a.dot(c) >= tol))
}

/// Outward normals of every constraint currently touching disk `i`.
fn contact_normals<S: Real>(
    positions: &[Vec2<S>],
    radius: S,
    walls: &[Segment<S>],
    i: usize,
    eps_act: S,
) -> Vec<Vec2<S>> {
    let mut normals = Vec::new();
    for j in 0..positions.len() {
        if j == i {
            continue;
        }
        if let Ok(c) = gap_and_gradient(positions, radius, i, j) {
            if c.gap <= eps_act {
                // The stored normal points from the lower index to the
                // higher one; flip it so it always pushes i away from j.
                let away = if i < j { -c.normal } else { c.normal };
                normals.push(away);
            }
        }
    }
    for (w, seg) in walls.iter().enumerate() {
        if let Ok(c) = wall_gap_and_gradient(positions, radius, i, w, seg) {
            if c.gap <= eps_act {
                normals.push(c.normal);
            }
        }
    }
    normals
}

/// Jamming flags for every disk plus the jammed fraction.
pub fn jamming_report<S: Real>(
    positions: &[Vec2<S>],
    radius: S,
    walls: &[Segment<S>],
    eps_act: S,
) -> JammingReport {
    let jammed: Vec<bool> = (0..positions.len())
        .map(|i| is_locally_jammed(positions, radius, walls, i, eps_act))
        .collect();
    let count = jammed.iter().filter(|&&b| b).count();
    let fraction = if jammed.is_empty() {
        0.0
    } else {
        count as f64 / jammed.len() as f64
    };
    JammingReport { jammed, fraction }
}
