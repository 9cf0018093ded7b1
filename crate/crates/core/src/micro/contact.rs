//! Contact constraints between disks and against walls, and the active-set
//! sweep that feeds the projection solver.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Segment;
use crate::real::Real;
use crate::vec2::Vec2;

/// Identity of one constraint row. Disk pairs are stored once with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContactPair {
    Disks { i: usize, j: usize },
    Wall { i: usize, wall: usize },
}

/// One linearized non-overlap constraint: gap value at the reference
/// configuration plus the (sparse) gap gradient, represented by its unit
/// normal. For a disk pair the full gradient is `-normal` at slot `i` and
/// `+normal` at slot `j`; against a wall it is `+normal` at slot `i`.
#[derive(Debug, Clone, Copy)]
pub struct Contact<S = f64> {
    pub pair: ContactPair,
    pub gap: S,
    pub normal: Vec2<S>,
}

impl<S: Real> Contact<S> {
    /// Gradient dotted with a full configuration displacement.
    pub fn grad_dot(&self, disp: &[Vec2<S>]) -> S {
        match self.pair {
            ContactPair::Disks { i, j } => self.normal.dot(disp[j] - disp[i]),
            ContactPair::Wall { i, .. } => self.normal.dot(disp[i]),
        }
    }

    /// Adds `coeff` times the gradient into a configuration vector.
    pub fn add_scaled_grad(&self, coeff: S, out: &mut [Vec2<S>]) {
        match self.pair {
            ContactPair::Disks { i, j } => {
                out[i] -= self.normal * coeff;
                out[j] += self.normal * coeff;
            }
            ContactPair::Wall { i, .. } => out[i] += self.normal * coeff,
        }
    }

    /// Squared norm of the gradient: 2 for a disk pair, 1 against a wall.
    pub fn grad_norm_sq(&self) -> S {
        match self.pair {
            ContactPair::Disks { .. } => S::of(2.0),
            ContactPair::Wall { .. } => S::one(),
        }
    }

    pub fn touches(&self, disk: usize) -> bool {
        match self.pair {
            ContactPair::Disks { i, j } => i == disk || j == disk,
            ContactPair::Wall { i, .. } => i == disk,
        }
    }
}

/// Gap and gradient of the pair constraint `|q_j - q_i| - 2r`.
pub fn gap_and_gradient<S: Real>(
    positions: &[Vec2<S>],
    radius: S,
    i: usize,
    j: usize,
) -> Result<Contact<S>> {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let diff = positions[j] - positions[i];
    let dist = diff.norm();
    let normal = diff
        .normalized()
        .ok_or(Error::CoincidentCenters { i, j })?;
    Ok(Contact {
        pair: ContactPair::Disks { i, j },
        gap: dist - S::of(2.0) * radius,
        normal,
    })
}

/// Gap and gradient of the wall constraint `dist(q_i, segment) - r`.
pub fn wall_gap_and_gradient<S: Real>(
    positions: &[Vec2<S>],
    radius: S,
    i: usize,
    wall: usize,
    segment: &Segment<S>,
) -> Result<Contact<S>> {
    let closest = segment.closest_point(positions[i]);
    let away = positions[i] - closest;
    let normal = away.normalized().ok_or(Error::CenterOnWall { i })?;
    Ok(Contact {
        pair: ContactPair::Wall { i, wall },
        gap: away.norm() - radius,
        normal,
    })
}

/// All disk pair and disk wall constraints with gap at most `eps_act`,
/// sorted by pair identity. A uniform spatial hash with cell size
/// `2r + eps_act` makes missing a pair inside the threshold impossible.
/// Disks flagged inactive generate nothing.
pub fn active_constraints<S: Real>(
    positions: &[Vec2<S>],
    active: &[bool],
    radius: S,
    walls: &[Segment<S>],
    eps_act: S,
) -> Result<Vec<Contact<S>>> {
    let cell = S::of(2.0) * radius + eps_act.max(S::zero());
    let key = |p: Vec2<S>| -> (i64, i64) {
        (
            (p.x / cell).floor().to_f64_lossy() as i64,
            (p.y / cell).floor().to_f64_lossy() as i64,
        )
    };

    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in positions.iter().enumerate() {
        if active[i] {
            buckets.entry(key(p)).or_default().push(i);
        }
    }

    let reach = S::of(2.0) * radius + eps_act;
    let mut contacts = Vec::new();
    for (i, &p) in positions.iter().enumerate() {
        if !active[i] {
            continue;
        }
        let (cx, cy) = key(p);
        for nx in cx - 1..=cx + 1 {
            for ny in cy - 1..=cy + 1 {
                let Some(bucket) = buckets.get(&(nx, ny)) else {
                    continue;
                };
                for &j in bucket {
                    if j <= i {
                        continue;
                    }
                    if (positions[j] - p).norm() <= reach {
                        contacts.push(gap_and_gradient(positions, radius, i, j)?);
                    }
                }
            }
        }
        for (w, segment) in walls.iter().enumerate() {
            if segment.distance_to(p) - radius <= eps_act {
                contacts.push(wall_gap_and_gradient(positions, radius, i, w, segment)?);
            }
        }
    }

    contacts.sort_by_key(|c| c.pair);
    Ok(contacts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Central finite differences of the gap, component by component, as an
    /// independent check of the analytic gradient.
    fn fd_gradient(positions: &[Vec2<f64>], radius: f64, contact: &Contact<f64>) -> Vec<Vec2<f64>> {
        let h = 1e-6 * radius;
        let gap_at = |q: &[Vec2<f64>]| -> f64 {
            match contact.pair {
                ContactPair::Disks { i, j } => (q[j] - q[i]).norm() - 2.0 * radius,
                ContactPair::Wall { .. } => unreachable!("pair gaps only"),
            }
        };
        let mut grad = vec![Vec2::zero(); positions.len()];
        for k in 0..positions.len() {
            for axis in 0..2 {
                let mut plus = positions.to_vec();
                let mut minus = positions.to_vec();
                if axis == 0 {
                    plus[k].x += h;
                    minus[k].x -= h;
                } else {
                    plus[k].y += h;
                    minus[k].y -= h;
                }
                let d = (gap_at(&plus) - gap_at(&minus)) / (2.0 * h);
                if axis == 0 {
                    grad[k].x = d;
                } else {
                    grad[k].y = d;
                }
            }
        }
        grad
    }

    #[test]
    fn exact_contact_gap() {
        let r: f64 = 0.3;
        let q = [Vec2::new(0.0, 0.0), Vec2::new(2.0 * r, 0.0)];
        let c = gap_and_gradient(&q, r, 0, 1).unwrap();
        assert_eq!(c.gap, 0.0);
        assert_eq!(c.normal, Vec2::new(1.0, 0.0));

        let q = [Vec2::new(0.0, 0.0), Vec2::new(4.0 * r, 0.0)];
        let c = gap_and_gradient(&q, r, 0, 1).unwrap();
        assert!((c.gap - 2.0 * r).abs() < 1e-15);
    }

    #[test]
    fn coincident_centers_rejected() {
        let q = [Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)];
        assert!(matches!(
            gap_and_gradient(&q, 0.3, 0, 1),
            Err(Error::CoincidentCenters { i: 0, j: 1 })
        ));
    }

    #[test]
    fn pair_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = 0.25;
        for _ in 0..50 {
            let q = [
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            if (q[1] - q[0]).norm() < 0.1 {
                continue;
            }
            let c = gap_and_gradient(&q, r, 0, 1).unwrap();
            let fd = fd_gradient(&q, r, &c);
            let mut analytic = vec![Vec2::zero(); q.len()];
            c.add_scaled_grad(1.0, &mut analytic);
            for k in 0..q.len() {
                let err = (analytic[k] - fd[k]).norm();
                assert!(err <= 1e-5, "slot {k}: {:?} vs {:?}", analytic[k], fd[k]);
            }
            // The full gradient has norm sqrt(2) for a pair.
            let norm: f64 = analytic.iter().map(|g| g.norm_sq()).sum::<f64>().sqrt();
            assert!((norm - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn wall_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r = 0.25;
        let seg = Segment::new(Vec2::new(-1.0, -0.5), Vec2::new(2.0, 1.5));
        for _ in 0..50 {
            let q = [Vec2::new(rng.gen_range(-2.0..3.0), rng.gen_range(-2.0..3.0))];
            if seg.distance_to(q[0]) < 0.05 {
                continue;
            }
            let c = wall_gap_and_gradient(&q, r, 0, 0, &seg).unwrap();
            let h = 1e-6 * r;
            let gap = |p: Vec2<f64>| seg.distance_to(p) - r;
            let fd = Vec2::new(
                (gap(q[0] + Vec2::new(h, 0.0)) - gap(q[0] - Vec2::new(h, 0.0))) / (2.0 * h),
                (gap(q[0] + Vec2::new(0.0, h)) - gap(q[0] - Vec2::new(0.0, h))) / (2.0 * h),
            );
            assert!((c.normal - fd).norm() <= 1e-5, "{:?} vs {fd:?}", c.normal);
        }
    }

    #[test]
    fn wall_gap_values() {
        let r: f64 = 0.5;
        let seg = Segment::new(Vec2::new(-10.0, 0.0), Vec2::new(10.0, 0.0));
        let q = [Vec2::new(0.3, r)];
        let c = wall_gap_and_gradient(&q, r, 0, 0, &seg).unwrap();
        assert!(c.gap.abs() < 1e-14);
        assert!((c.normal - Vec2::new(0.0, 1.0)).norm() < 1e-14);

        let q = [Vec2::new(0.3, 3.0 * r)];
        let c = wall_gap_and_gradient(&q, r, 0, 0, &seg).unwrap();
        assert!((c.gap - 2.0 * r).abs() < 1e-15);
    }

    #[test]
    fn distant_disks_yield_empty_set() {
        let r = 0.5;
        let q = [Vec2::new(0.0, 0.0), Vec2::new(4.0 * r, 0.0)];
        let set = active_constraints(&q, &[true, true], r, &[], 0.1 * r).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn contact_chain_lists_two_pairs() {
        let r = 0.5;
        let q = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0 * r, 0.0),
            Vec2::new(4.0 * r, 0.0),
        ];
        let set = active_constraints(&q, &[true; 3], r, &[], 0.01 * r).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set[0].pair, ContactPair::Disks { i: 0, j: 1 });
        assert_eq!(set[1].pair, ContactPair::Disks { i: 1, j: 2 });
    }

    #[test]
    fn hash_matches_all_pairs_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let r = 0.05;
        for round in 0..10 {
            let n = 100;
            let q: Vec<Vec2<f64>> = (0..n)
                .map(|_| Vec2::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)))
                .collect();
            let active = vec![true; n];
            let eps = 0.5 * r;
            let fast = active_constraints(&q, &active, r, &[], eps);
            // Random throws may coincide within activation range of each
            // other at distance zero; both paths must then agree on the error.
            let mut slow: Vec<ContactPair> = Vec::new();
            let mut slow_err = false;
            'outer: for i in 0..n {
                for j in (i + 1)..n {
                    let d = (q[j] - q[i]).norm();
                    if d - 2.0 * r <= eps {
                        if d == 0.0 {
                            slow_err = true;
                            break 'outer;
                        }
                        slow.push(ContactPair::Disks { i, j });
                    }
                }
            }
            match fast {
                Ok(set) => {
                    assert!(!slow_err);
                    let pairs: Vec<ContactPair> = set.iter().map(|c| c.pair).collect();
                    assert_eq!(pairs, slow, "round {round}");
                }
                Err(_) => assert!(slow_err),
            }
        }
    }

    #[test]
    fn inactive_disks_are_ignored() {
        let r = 0.5;
        let q = [Vec2::new(0.0, 0.0), Vec2::new(2.0 * r, 0.0)];
        let set = active_constraints(&q, &[true, false], r, &[], 0.1).unwrap();
        assert!(set.is_empty());
    }
}
