//! The microscopic time stepper: predict with the desired velocities,
//! correct by projecting onto the constraints linearized at the current
//! configuration, absorb disks that cross an exit.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Segment;
use crate::real::Real;
use crate::vec2::Vec2;

use super::contact::{active_constraints, gap_and_gradient, Contact, ContactPair};
use super::solver::{project_step_uzawa, SaddleSolution, SolverParams};

#[derive(Debug, Clone, Copy)]
pub struct MicroParams<S = f64> {
    pub radius: S,
    pub tau: S,
    /// Feasibility slack on true gaps. Default 1e-9 times the radius.
    pub tol_geom: S,
    /// Solver certificate tolerance. Default 1e-9 times the radius.
    pub tol_kkt: S,
    /// Activation threshold override; `None` derives 2 tau |U| + tol_geom
    /// from the step's desired velocities.
    pub eps_act: Option<S>,
    pub max_iter: Option<usize>,
    /// Seed each solve with the previous step's multipliers. Jammed contacts
    /// then converge in a handful of iterations.
    pub warm_start: bool,
}

impl<S: Real> MicroParams<S> {
    pub fn new(radius: S, tau: S) -> Self {
        let tol = S::of(1e-9) * radius;
        MicroParams {
            radius,
            tau,
            tol_geom: tol,
            tol_kkt: tol,
            eps_act: None,
            max_iter: None,
            warm_start: true,
        }
    }
}

/// Per-step record: the constraint set that was solved, its multipliers,
/// and what happened.
#[derive(Debug, Clone)]
pub struct StepReport<S = f64> {
    pub contacts: Vec<Contact<S>>,
    pub multipliers: Vec<S>,
    pub iterations: usize,
    pub violation: S,
    pub complementarity: S,
    pub exited_now: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MicroSim<S = f64> {
    pub params: MicroParams<S>,
    pub walls: Vec<Segment<S>>,
    pub exits: Vec<Segment<S>>,
    pub positions: Vec<Vec2<S>>,
    pub exited: Vec<bool>,
    /// Realized velocities of the last step, (q_new - q_old) / tau.
    pub velocities: Vec<Vec2<S>>,
    pub time: S,
    pub steps: usize,
    warm: HashMap<ContactPair, S>,
}

impl<S: Real> MicroSim<S> {
    pub fn new(
        params: MicroParams<S>,
        positions: Vec<Vec2<S>>,
        walls: Vec<Segment<S>>,
        exits: Vec<Segment<S>>,
    ) -> Result<Self> {
        let n = positions.len();
        let sim = MicroSim {
            params,
            walls,
            exits,
            positions,
            exited: vec![false; n],
            velocities: vec![Vec2::zero(); n],
            time: S::zero(),
            steps: 0,
            warm: HashMap::new(),
        };
        sim.check_feasible()?;
        Ok(sim)
    }

    /// Verifies every pair gap and wall gap clears -tol_geom.
    pub fn check_feasible(&self) -> Result<()> {
        let r = self.params.radius;
        let tol = self.params.tol_geom;
        let contacts =
            active_constraints(&self.positions, &self.exited_mask(), r, &self.walls, S::zero())?;
        for c in &contacts {
            if c.gap < -tol {
                return Err(Error::InfeasibleInitial(format!(
                    "{:?} overlaps by {}",
                    c.pair,
                    (-c.gap).to_f64_lossy()
                )));
            }
        }
        Ok(())
    }

    fn exited_mask(&self) -> Vec<bool> {
        self.exited.iter().map(|e| !e).collect()
    }

    pub fn active_count(&self) -> usize {
        self.exited.iter().filter(|e| !**e).count()
    }

    /// One prediction and correction step. Disks whose desired velocity is
    /// ignored because they already exited stay frozen in place.
    pub fn step(&mut self, desired: &[Vec2<S>]) -> Result<StepReport<S>> {
        let r = self.params.radius;
        let tau = self.params.tau;
        let active = self.exited_mask();

        let mut umax = S::zero();
        for (u, a) in desired.iter().zip(&active) {
            if *a {
                umax = umax.max(u.norm());
            }
        }
        let eps = self
            .params
            .eps_act
            .unwrap_or(S::of(2.0) * tau * umax + self.params.tol_geom);

        let mut predicted = self.positions.clone();
        for (k, p) in predicted.iter_mut().enumerate() {
            if active[k] {
                *p += desired[k] * tau;
            }
        }

        let mut contacts = active_constraints(&self.positions, &active, r, &self.walls, eps)?;
        let solver = SolverParams {
            tol_kkt: self.params.tol_kkt,
            max_iter: self.params.max_iter,
        };

        let mut solution = self.solve(&predicted, &contacts, &solver)?;

        // The linearized gap underestimates the true gap for pair and wall
        // constraints alike, so listed constraints cannot end up violated
        // beyond the certificate tolerance. A pair that was outside the
        // activation range can, in principle, be driven into overlap by the
        // correction itself; sweep for such pairs and re-solve with them
        // appended until the step is clean.
        for _round in 0..8 {
            let escaped = self.escaped_violations(&solution.positions, &contacts, &active)?;
            if escaped.is_empty() {
                break;
            }
            contacts.extend(escaped);
            contacts.sort_by_key(|c| c.pair);
            solution = self.solve(&predicted, &contacts, &solver)?;
        }
        let escaped = self.escaped_violations(&solution.positions, &contacts, &active)?;
        if !escaped.is_empty() {
            return Err(Error::UzawaNonConvergence {
                iterations: solution.iterations,
                violation: escaped
                    .iter()
                    .map(|c| (-c.gap).to_f64_lossy())
                    .fold(0.0, f64::max),
                complementarity: solution.complementarity.to_f64_lossy(),
            });
        }

        self.warm.clear();
        for (c, &l) in contacts.iter().zip(&solution.multipliers) {
            if l > S::zero() {
                self.warm.insert(c.pair, l);
            }
        }

        let mut exited_now = Vec::new();
        for k in 0..self.positions.len() {
            if !active[k] {
                continue;
            }
            let path = Segment::new(self.positions[k], solution.positions[k]);
            if self.exits.iter().any(|exit| exit.intersects(&path)) {
                self.exited[k] = true;
                exited_now.push(k);
            }
            self.velocities[k] = (solution.positions[k] - self.positions[k]) / tau;
        }
        for k in &exited_now {
            self.velocities[*k] = Vec2::zero();
        }

        self.positions = solution.positions;
        self.time += tau;
        self.steps += 1;

        Ok(StepReport {
            contacts,
            multipliers: solution.multipliers,
            iterations: solution.iterations,
            violation: solution.violation,
            complementarity: solution.complementarity,
            exited_now,
        })
    }

    fn solve(
        &self,
        predicted: &[Vec2<S>],
        contacts: &[Contact<S>],
        solver: &SolverParams<S>,
    ) -> Result<SaddleSolution<S>> {
        let warm: Option<Vec<S>> = self.params.warm_start.then(|| {
            contacts
                .iter()
                .map(|c| self.warm.get(&c.pair).copied().unwrap_or(S::zero()))
                .collect()
        });
        project_step_uzawa(&self.positions, predicted, contacts, solver, warm.as_deref())
    }

    /// True-gap violations at `q` among constraints absent from `known`,
    /// linearized at the step's reference configuration.
    fn escaped_violations(
        &self,
        q: &[Vec2<S>],
        known: &[Contact<S>],
        active: &[bool],
    ) -> Result<Vec<Contact<S>>> {
        let r = self.params.radius;
        let tol = self.params.tol_kkt;
        let now = active_constraints(q, active, r, &self.walls, S::zero())?;
        let mut extra = Vec::new();
        for c in now {
            if c.gap >= -tol {
                continue;
            }
            if known.iter().any(|k| k.pair == c.pair) {
                continue;
            }
            let at_ref = match c.pair {
                ContactPair::Disks { i, j } => gap_and_gradient(&self.positions, r, i, j)?,
                ContactPair::Wall { i, wall } => super::contact::wall_gap_and_gradient(
                    &self.positions,
                    r,
                    i,
                    wall,
                    &self.walls[wall],
                )?,
            };
            extra.push(at_ref);
        }
        Ok(extra)
    }

    /// Smallest true gap over all pairs and walls among active disks.
    pub fn min_gap(&self) -> Result<S> {
        let contacts = active_constraints(
            &self.positions,
            &self.exited_mask(),
            self.params.radius,
            &self.walls,
            S::zero(),
        )?;
        Ok(contacts
            .iter()
            .map(|c| c.gap)
            .fold(S::infinity(), |a, b| a.min(b)))
    }
}

/// Prox-regularity radius of the feasible set for N disks of radius r:
/// r sqrt(12 / (N (N-1) (N+1))). Steps with tau |U| near this value risk
/// a multivalued projection; callers use it as a warning threshold.
pub fn prox_regularity_bound<S: Real>(n: usize, r: S) -> Result<S> {
    if n < 2 {
        return Err(Error::ProxRegularityN(n));
    }
    let nf = S::from_usize(n).unwrap();
    let denom = nf * (nf - S::one()) * (nf + S::one());
    Ok(r * (S::of(12.0) / denom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lone_disk_moves_freely_bitwise() {
        let params = MicroParams::new(0.5f64, 0.1);
        let mut sim = MicroSim::new(params, vec![Vec2::new(0.0, 0.0)], vec![], vec![]).unwrap();
        let desired = vec![Vec2::new(1.0, 0.0)];
        for _ in 0..7 {
            sim.step(&desired).unwrap();
        }
        // No constraint ever activates, so the step is exactly explicit
        // Euler, including rounding.
        let mut q = Vec2::new(0.0f64, 0.0);
        for _ in 0..7 {
            q += Vec2::new(1.0, 0.0) * 0.1;
        }
        assert_eq!(sim.positions[0], q);
    }

    #[test]
    fn disk_settles_on_a_wall_and_slides() {
        let r: f64 = 0.5;
        let params = MicroParams::new(r, 0.05);
        let wall = Segment::new(Vec2::new(-20.0, 0.0), Vec2::new(20.0, 0.0));
        let mut sim =
            MicroSim::new(params, vec![Vec2::new(0.0, 2.0)], vec![wall], vec![]).unwrap();
        // Driven diagonally into the wall.
        let desired = vec![Vec2::new(1.0, -1.0)];
        for _ in 0..200 {
            sim.step(&desired).unwrap();
        }
        // Settles at gap zero, keeps full tangential speed.
        assert!((sim.positions[0].y - r).abs() < 1e-8);
        let expected_x = {
            // Free fall until contact, sliding afterwards.
            0.05 * 200.0 * 1.0
        };
        assert!((sim.positions[0].x - expected_x).abs() < 1e-8);
        assert!(sim.min_gap().unwrap() >= -1e-9 * r);
    }

    #[test]
    fn head_on_pair_travels_at_half_speed() {
        let r = 0.5;
        let tau = 0.02;
        let params = MicroParams::new(r, tau);
        let mut sim = MicroSim::new(
            params,
            vec![Vec2::new(0.0, 0.0), Vec2::new(2.0 * r, 0.0)],
            vec![],
            vec![],
        )
        .unwrap();
        let desired = vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 0.0)];
        let steps = 100;
        for _ in 0..steps {
            sim.step(&desired).unwrap();
        }
        let travelled = sim.positions[1].x - 2.0 * r;
        let want = 0.5 * tau * steps as f64;
        assert!(
            (travelled - want).abs() < 1e-7,
            "front disk travelled {travelled}, want {want}"
        );
        assert!((sim.positions[1].x - sim.positions[0].x - 2.0 * r).abs() < 1e-7);
    }

    #[test]
    fn exit_crossing_removes_the_disk() {
        let r = 0.2;
        let params = MicroParams::new(r, 0.1);
        let exit = Segment::new(Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0));
        let mut sim =
            MicroSim::new(params, vec![Vec2::new(0.75, 0.0)], vec![], vec![exit]).unwrap();
        let desired = vec![Vec2::new(1.0, 0.0)];
        let mut crossed_at = None;
        for step in 0..10 {
            let report = sim.step(&desired).unwrap();
            if !report.exited_now.is_empty() {
                crossed_at = Some(step);
                break;
            }
        }
        assert_eq!(crossed_at, Some(2));
        assert!(sim.exited[0]);
        let before = sim.positions[0];
        sim.step(&desired).unwrap();
        assert_eq!(sim.positions[0], before);
    }

    #[test]
    fn overlapping_start_is_rejected() {
        let r = 0.5;
        let params = MicroParams::new(r, 0.1);
        let result = MicroSim::new(
            params,
            vec![Vec2::new(0.0, 0.0), Vec2::new(r, 0.0)],
            vec![],
            vec![],
        );
        assert!(matches!(result, Err(Error::InfeasibleInitial(_))));
    }

    #[test]
    fn prox_regularity_values() {
        let r = 0.3f64;
        let eta2 = prox_regularity_bound(2, r).unwrap();
        assert!((eta2 - r * 2f64.sqrt()).abs() < 1e-12);
        let eta3 = prox_regularity_bound(3, r).unwrap();
        assert!((eta3 - r / 2f64.sqrt()).abs() < 1e-12);
        assert!(prox_regularity_bound(1, r).is_err());
        // The scaled value stays bounded as N grows.
        for n in [10usize, 100, 1000, 10000] {
            let eta = prox_regularity_bound(n, r).unwrap();
            let scaled = eta * (n as f64).powf(1.5) / r;
            assert!((1.0..=10.0).contains(&scaled), "N={n}: {scaled}");
        }
    }

    #[test]
    fn determinism_across_reruns() {
        let r = 0.25;
        let params = MicroParams::new(r, 0.05);
        let start = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.6, 0.1),
            Vec2::new(1.2, -0.05),
        ];
        let desired = vec![Vec2::new(1.0, 0.0); 3];
        let run = || {
            let mut sim = MicroSim::new(params, start.clone(), vec![], vec![]).unwrap();
            for _ in 0..50 {
                sim.step(&desired).unwrap();
            }
            sim.positions
        };
        assert_eq!(run(), run());
    }
}
