//! Disk configurations viewed as densities: area-fraction rasterization
//! and rescaling against a reference density.

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::macroscale::DensityGrid;
use crate::real::Real;
use crate::vec2::Vec2;

/// Subdivisions per cell axis when estimating covered area fractions.
const SUPERSAMPLE: usize = 4;

/// Per-cell fraction of the cell area covered by the union of disks,
/// estimated on a 4x4 midpoint grid inside each cell. Each sample point
/// is tested against every disk whose box reaches it, so tangent disks
/// never count twice.
pub fn rasterize_micro<S: Real>(
    positions: &[Vec2<S>],
    radius: S,
    grid: &Grid<S>,
) -> DensityGrid<S> {
    let layout = grid.layout;
    let n = SUPERSAMPLE;
    let mut covered: Vec<u16> = vec![0; layout.ncells()];

    let sub_x = layout.dx / S::of(n as f64);
    let sub_y = layout.dy / S::of(n as f64);
    let r2 = radius * radius;
    let half = S::of(0.5);

    for &p in positions {
        let reach = Vec2::new(radius + layout.dx, radius + layout.dy);
        let (i0, j0) = layout.cell_at(p - reach);
        let (i1, j1) = layout.cell_at(p + reach);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let idx = layout.index(i, j);
                if covered[idx] == u16::MAX {
                    continue;
                }
                let corner = Vec2::new(
                    layout.origin.x + layout.dx * S::of(i as f64),
                    layout.origin.y + layout.dy * S::of(j as f64),
                );
                for ky in 0..n {
                    for kx in 0..n {
                        let bit = 1u16 << (ky * n + kx);
                        if covered[idx] & bit != 0 {
                            continue;
                        }
                        let sp = corner
                            + Vec2::new(
                                sub_x * (S::of(kx as f64) + half),
                                sub_y * (S::of(ky as f64) + half),
                            );
                        if (sp - p).norm_sq() < r2 {
                            covered[idx] |= bit;
                        }
                    }
                }
            }
        }
    }

    let samples = S::of((n * n) as f64);
    let rho = covered
        .iter()
        .map(|&bits| S::of(bits.count_ones() as f64) / samples)
        .collect();
    DensityGrid {
        layout,
        rho,
        absorbed: vec![S::zero(); layout.ncells()],
    }
}

/// Rescales a raw density by a reference value, clamping at 1:
/// rho = min(raw / reference, 1). The reference must be positive.
pub fn normalize_density<S: Real>(raw: &DensityGrid<S>, reference: S) -> Result<DensityGrid<S>> {
    if !(reference > S::zero()) || !reference.is_finite() {
        return Err(Error::BadReferenceDensity(reference.to_f64_lossy()));
    }
    let rho = raw
        .rho
        .iter()
        .map(|&v| (v / reference).min(S::one()))
        .collect();
    Ok(DensityGrid {
        layout: raw.layout,
        rho,
        absorbed: raw.absorbed.clone(),
    })
}
