//! Behavioral layer: turns the shared desired-velocity field into per-disk
//! desired velocities, optionally slowing down behind slower neighbors or
//! steering around them.

use crate::error::{Error, Result};
use crate::geometry::{sample_velocity, VelocityField};
use crate::real::Real;
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    None,
    Decelerate,
    Bypass,
}

#[derive(Debug, Clone, Copy)]
pub struct BehaviorParams<S = f64> {
    /// Proximity range beyond contact distance.
    pub prox_range: S,
    /// Half angle of the view cone, radians.
    pub half_angle: S,
}

impl<S: Real> Default for BehaviorParams<S> {
    fn default() -> Self {
        BehaviorParams {
            prox_range: S::of(1.0),
            half_angle: S::of(std::f64::consts::FRAC_PI_3),
        }
    }
}

/// Indices j near and visible to disk i: within 2r + prox_range of it and
/// inside the view cone around its desired direction. A disk with no
/// desired direction sees nobody.
pub fn neighbor_set<S: Real>(
    positions: &[Vec2<S>],
    active: &[bool],
    i: usize,
    direction: Option<Vec2<S>>,
    radius: S,
    params: &BehaviorParams<S>,
) -> Vec<usize> {
    let Some(d) = direction else {
        return Vec::new();
    };
    let cos_alpha = params.half_angle.cos();
    let range = S::of(2.0) * radius + params.prox_range;
    let mut out = Vec::new();
    for (j, &qj) in positions.iter().enumerate() {
        if j == i || !active[j] {
            continue;
        }
        let offset = qj - positions[i];
        let dist = offset.norm();
        if dist >= range {
            continue;
        }
        let Some(e) = offset.normalized() else {
            continue;
        };
        if d.dot(e) >= cos_alpha {
            out.push(j);
        }
    }
    out
}

/// Weighted barycenter of the neighbors' previous speeds. Weights blend
/// angular alignment with linear proximity falloff: 1 for a neighbor dead
/// ahead at contact, 0 at the edge of visibility or range. Returns `None`
/// when there is nothing to average, meaning the speed stays as desired.
pub fn decelerate<S: Real>(
    positions: &[Vec2<S>],
    i: usize,
    direction: Vec2<S>,
    neighbors: &[usize],
    prev_speeds: &[S],
    radius: S,
    params: &BehaviorParams<S>,
) -> Option<S> {
    let cos_alpha = params.half_angle.cos();
    let one = S::one();
    let mut wsum = S::zero();
    let mut acc = S::zero();
    for &j in neighbors {
        let offset = positions[j] - positions[i];
        let dist = offset.norm();
        let e = offset.normalized()?;
        let angular = ((direction.dot(e) - cos_alpha) / (one - cos_alpha)).clamp(S::zero(), one);
        let proximity =
            (one - (dist - S::of(2.0) * radius) / params.prox_range).clamp(S::zero(), one);
        let w = angular * proximity;
        wsum += w;
        acc += w * prev_speeds[j];
    }
    (wsum > S::zero()).then(|| acc / wsum)
}

/// Angular interval blocked by one neighbor, relative to the desired
/// direction, plus the neighbor index owning each edge.
struct Blocked<S> {
    start: S,
    end: S,
    owner: usize,
}

/// Picks a direction around the neighbors while keeping the desired speed.
/// Straight ahead wins if it is clear. Otherwise the widest angular gap
/// between neighbors that is physically wide enough to pass through is
/// taken along its bisector; failing that, the flank tangent closest to the
/// desired direction, preferring the left on ties.
pub fn bypass<S: Real>(
    positions: &[Vec2<S>],
    i: usize,
    direction: Vec2<S>,
    neighbors: &[usize],
    radius: S,
) -> Result<Vec2<S>> {
    if neighbors.is_empty() {
        return Ok(direction);
    }
    let two_r = S::of(2.0) * radius;
    let theta_d = direction.angle();
    let pi = S::of(std::f64::consts::PI);
    let wrap = |a: S| -> S {
        let mut a = a;
        while a > pi {
            a -= S::of(2.0) * pi;
        }
        while a < -pi {
            a += S::of(2.0) * pi;
        }
        a
    };

    let mut blocked: Vec<Blocked<S>> = Vec::with_capacity(neighbors.len());
    for &j in neighbors {
        let offset = positions[j] - positions[i];
        let dist = offset.norm();
        if dist < two_r * (S::one() - S::of(1e-9)) {
            return Err(Error::OverlappingNeighbor { i: j });
        }
        let half_width = (two_r / dist).min(S::one()).asin();
        let center = wrap(offset.angle() - theta_d);
        blocked.push(Blocked {
            start: center - half_width,
            end: center + half_width,
            owner: j,
        });
    }
    blocked.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());

    // Merge overlapping intervals, remembering which neighbor forms each
    // edge; gaps between merged intervals are genuinely free directions.
    let mut merged: Vec<(S, S, usize, usize)> = Vec::new();
    for b in blocked {
        match merged.last_mut() {
            Some(last) if b.start <= last.1 => {
                if b.end > last.1 {
                    last.1 = b.end;
                    last.3 = b.owner;
                }
            }
            _ => merged.push((b.start, b.end, b.owner, b.owner)),
        }
    }

    let zero_clear = !merged
        .iter()
        .any(|&(s, e, _, _)| s < S::zero() && S::zero() < e);
    if zero_clear {
        return Ok(direction);
    }

    // Interior gaps, widest passable one first. Passability compares the
    // angular width against the room the disk needs between the two disks
    // bounding the gap.
    let mut best: Option<(S, S)> = None;
    for w in merged.windows(2) {
        let (_, end_a, _, owner_a) = w[0];
        let (start_b, _, owner_b, _) = w[1];
        let width = start_b - end_a;
        if width <= S::zero() {
            continue;
        }
        let span = (positions[owner_b] - positions[owner_a]).norm();
        let half_gap = ((span - two_r) / S::of(2.0)).max(S::zero());
        let needed = S::of(2.0) * (radius / (radius + half_gap)).min(S::one()).asin();
        if width >= needed {
            let bisector = (end_a + start_b) / S::of(2.0);
            if best.map_or(true, |(bw, _)| width > bw) {
                best = Some((width, bisector));
            }
        }
    }
    if let Some((_, bisector)) = best {
        return Ok(Vec2::from_angle(theta_d + bisector));
    }

    // Steer around the whole group: tangents past the leftmost or the
    // rightmost blocked edge, whichever deviates less; left on a tie.
    let left = merged
        .iter()
        .map(|&(_, e, _, _)| e)
        .fold(S::neg_infinity(), |a, b| a.max(b));
    let right = merged
        .iter()
        .map(|&(s, _, _, _)| s)
        .fold(S::infinity(), |a, b| a.min(b));
    let pick = if left.abs() <= right.abs() { left } else { right };
    Ok(Vec2::from_angle(theta_d + pick))
}

/// Per-population behavior: which field to follow and how to react to
/// neighbors.
#[derive(Debug, Clone, Copy)]
pub struct TypeBehavior<S = f64> {
    pub field: usize,
    pub strategy: Strategy,
    pub params: BehaviorParams<S>,
}

/// Desired velocity for every disk: sample the disk's own field, then apply
/// its population's strategy. `prev_speeds` are the realized speeds of the
/// previous step. Exited disks get zero.
pub fn assign_desired<S: Real>(
    positions: &[Vec2<S>],
    active: &[bool],
    types: &[usize],
    behaviors: &[TypeBehavior<S>],
    fields: &[VelocityField<S>],
    radius: S,
    prev_speeds: &[S],
) -> Result<Vec<Vec2<S>>> {
    let mut out = vec![Vec2::zero(); positions.len()];
    for i in 0..positions.len() {
        if !active[i] {
            continue;
        }
        let b = behaviors
            .get(types[i])
            .ok_or(Error::MissingField(types[i]))?;
        let field = fields.get(b.field).ok_or(Error::MissingField(b.field))?;
        let u = sample_velocity(field, positions[i]);
        out[i] = match b.strategy {
            Strategy::None => u,
            Strategy::Decelerate => match u.normalized() {
                None => u,
                Some(d) => {
                    let speed = u.norm();
                    let n = neighbor_set(positions, active, i, Some(d), radius, &b.params);
                    match decelerate(positions, i, d, &n, prev_speeds, radius, &b.params) {
                        Some(s) if s < speed => d * s.max(S::zero()),
                        _ => u,
                    }
                }
            },
            Strategy::Bypass => match u.normalized() {
                None => u,
                Some(d) => {
                    let n = neighbor_set(positions, active, i, Some(d), radius, &b.params);
                    let dir = bypass(positions, i, d, &n, radius)?;
                    dir * u.norm()
                }
            },
        };
    }
    Ok(out)
}
