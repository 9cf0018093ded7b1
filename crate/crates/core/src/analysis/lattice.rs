//! Jammed reference packings. All three kinds are locally jammed yet
//! differ in density, which is why density alone does not decide whether
//! a crowd can still move.

use crate::real::Real;
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    /// Hexagonal packing at spacing 2r, area fraction pi/(2 sqrt 3).
    Triangular,
    /// Square grid at spacing 2r, area fraction pi/4.
    Cartesian,
    /// Triangular lattice with every (even, even) site removed, area
    /// fraction pi sqrt(3)/8. Looser than the square grid, still jammed.
    LooseTriangular,
}

#[derive(Debug, Clone, Copy)]
pub struct LatticeSpec<S = f64> {
    pub kind: LatticeKind,
    pub count: usize,
    pub radius: S,
    pub origin: Vec2<S>,
}

/// Packing fraction the kind tends to on large patches.
pub fn lattice_density(kind: LatticeKind) -> f64 {
    use std::f64::consts::PI;
    match kind {
        LatticeKind::Triangular => PI / (2.0 * 3.0f64.sqrt()),
        LatticeKind::Cartesian => PI / 4.0,
        LatticeKind::LooseTriangular => PI * 3.0f64.sqrt() / 8.0,
    }
}

/// Lays out `count` disk centers row by row in a roughly square patch.
/// Neighboring centers sit exactly one diameter apart up to round-off,
/// so gaps are zero and nothing overlaps.
pub fn generate_lattice<S: Real>(spec: &LatticeSpec<S>) -> Vec<Vec2<S>> {
    let r = spec.radius;
    let two_r = r + r;
    let row_height = match spec.kind {
        LatticeKind::Cartesian => two_r,
        _ => S::of(3.0f64.sqrt()) * r,
    };
    let cols = (spec.count as f64).sqrt().ceil() as usize;
    let cols = cols.max(1);

    let mut out = Vec::with_capacity(spec.count);
    let mut n: usize = 0;
    while out.len() < spec.count {
        let y = spec.origin.y + row_height * S::of(n as f64);
        // Rows of the skewed basis are brought back over the origin so the
        // patch stays rectangular; the (m, n) indices stay absolute.
        let m0 = -((n / 2) as isize);
        for k in 0..cols {
            if out.len() == spec.count {
                break;
            }
            let m = m0 + k as isize;
            let (x, keep) = match spec.kind {
                LatticeKind::Cartesian => (two_r * S::of(k as f64), true),
                LatticeKind::Triangular => (two_r * S::of(m as f64) + r * S::of(n as f64), true),
                LatticeKind::LooseTriangular => (
                    two_r * S::of(m as f64) + r * S::of(n as f64),
                    !(m.rem_euclid(2) == 0 && n % 2 == 0),
                ),
            };
            if keep {
                out.push(Vec2::new(spec.origin.x + x, y));
            }
        }
        n += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::raster::rasterize_micro;
    use crate::geometry::{build_grid, rectangle, Room};

    fn min_gap(positions: &[Vec2<f64>], r: f64) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                best = best.min((positions[j] - positions[i]).norm() - 2.0 * r);
            }
        }
        best
    }

    fn interior_mean(kind: LatticeKind, count: usize) -> f64 {
        let r: f64 = 0.5;
        let spec = LatticeSpec {
            kind,
            count,
            radius: r,
            origin: Vec2::new(0.0, 0.0),
        };
        let pts = generate_lattice(&spec);
        assert_eq!(pts.len(), count);
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in &pts {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let margin = 4.0 * r;
        let room = Room::new(
            rectangle(
                lo.x - margin,
                lo.y - margin,
                hi.x + margin,
                hi.y + margin,
            ),
            vec![],
            vec![],
        )
        .unwrap();
        // Resolution incommensurate with the lattice periods, so the
        // sampling phase varies across cells and aliasing averages out.
        let grid = build_grid(&room, 0.74 * r).unwrap();
        let d = rasterize_micro(&pts, r, &grid);

        // Average over a window well inside the patch.
        let span = hi - lo;
        let (wlo, whi) = (lo + span * 0.25, hi - span * 0.25);
        let mut sum = 0.0;
        let mut cells = 0usize;
        for j in 0..grid.layout.ny {
            for i in 0..grid.layout.nx {
                let c = grid.layout.cell_center(i, j);
                if c.x >= wlo.x && c.x <= whi.x && c.y >= wlo.y && c.y <= whi.y {
                    sum += d.value(i, j);
                    cells += 1;
                }
            }
        }
        assert!(cells > 100);
        sum / cells as f64
    }

    #[test]
    fn lattices_have_exact_counts_and_no_overlap() {
        for kind in [
            LatticeKind::Triangular,
            LatticeKind::Cartesian,
            LatticeKind::LooseTriangular,
        ] {
            let spec = LatticeSpec {
                kind,
                count: 200,
                radius: 0.3,
                origin: Vec2::new(1.0, 2.0),
            };
            let pts = generate_lattice(&spec);
            assert_eq!(pts.len(), 200);
            assert!(
                min_gap(&pts, 0.3) >= -1e-12 * 0.3,
                "{kind:?} overlaps: {}",
                min_gap(&pts, 0.3)
            );
        }
    }

    #[test]
    fn triangular_patch_reaches_the_hexagonal_density() {
        let mean = interior_mean(LatticeKind::Triangular, 2500);
        assert!(
            (mean - lattice_density(LatticeKind::Triangular)).abs() < 0.02,
            "mean {mean}"
        );
    }

    #[test]
    fn cartesian_patch_reaches_the_square_density() {
        let mean = interior_mean(LatticeKind::Cartesian, 2500);
        assert!(
            (mean - lattice_density(LatticeKind::Cartesian)).abs() < 0.02,
            "mean {mean}"
        );
    }

    #[test]
    fn loose_patch_reaches_the_thinned_density() {
        let mean = interior_mean(LatticeKind::LooseTriangular, 2500);
        assert!(
            (mean - lattice_density(LatticeKind::LooseTriangular)).abs() < 0.02,
            "mean {mean}"
        );
    }
}
