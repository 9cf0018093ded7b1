//! Prediction-correction time stepping on the density grid, for one
//! population or two sharing the same capacity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Grid, VelocityField};
use crate::real::Real;

use super::density::DensityGrid;
use super::project::{project_components, stochastic_project, Odometer, ProjectionParams};
use super::transport::transport_density;

#[derive(Debug, Clone, Copy)]
pub struct MacroParams<S = f64> {
    pub tau: S,
    pub max_walk_steps: Option<usize>,
}

impl<S: Real> MacroParams<S> {
    pub fn new(tau: S) -> Self {
        MacroParams {
            tau,
            max_walk_steps: None,
        }
    }

    fn projection(&self) -> ProjectionParams {
        ProjectionParams {
            max_walk_steps: self.max_walk_steps,
        }
    }
}

/// Single-population crowd on a grid. Each step transports the density
/// along the supplied field, then corrects the overshoot stochastically.
pub struct MacroSim<S = f64> {
    pub grid: Grid<S>,
    pub density: DensityGrid<S>,
    pub params: MacroParams<S>,
    rng: ChaCha8Rng,
    pub time: S,
    pub steps: usize,
}

impl<S: Real> MacroSim<S> {
    pub fn new(grid: Grid<S>, density: DensityGrid<S>, params: MacroParams<S>, seed: u64) -> Result<Self> {
        density.validate(&grid)?;
        Ok(MacroSim {
            grid,
            density,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            time: S::zero(),
            steps: 0,
        })
    }

    /// One prediction-correction step. Returns the odometer of the
    /// correction walks (zero everywhere when no cell overflowed).
    pub fn step(&mut self, velocity: &VelocityField<S>) -> Result<Odometer<S>> {
        let predicted = transport_density(&self.density, &self.grid, velocity, self.params.tau)?;
        let (corrected, odometer) = stochastic_project(
            &predicted,
            &self.grid,
            &mut self.rng,
            &self.params.projection(),
        )?;
        self.density = corrected;
        self.time += self.params.tau;
        self.steps += 1;
        Ok(odometer)
    }

    pub fn interior_mass(&self) -> S {
        self.density.interior_mass()
    }

    pub fn absorbed_mass(&self) -> S {
        self.density.absorbed_mass()
    }
}

/// Two populations with separate targets competing for the same space.
/// Transport is per population; the correction walk moves joint excess,
/// taking from each population in proportion to its local share.
pub struct TwoPopulationSim<S = f64> {
    pub grid: Grid<S>,
    pub first: DensityGrid<S>,
    pub second: DensityGrid<S>,
    pub params: MacroParams<S>,
    rng: ChaCha8Rng,
    pub time: S,
    pub steps: usize,
}

impl<S: Real> TwoPopulationSim<S> {
    pub fn new(
        grid: Grid<S>,
        first: DensityGrid<S>,
        second: DensityGrid<S>,
        params: MacroParams<S>,
        seed: u64,
    ) -> Result<Self> {
        first.validate(&grid)?;
        second.validate(&grid)?;
        for idx in 0..grid.layout.ncells() {
            let t = first.rho[idx] + second.rho[idx];
            if t > S::one() {
                return Err(Error::InfeasibleInitial(format!(
                    "joint density {} above 1 at cell {}",
                    t.to_f64_lossy(),
                    idx
                )));
            }
        }
        Ok(TwoPopulationSim {
            grid,
            first,
            second,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            time: S::zero(),
            steps: 0,
        })
    }

    pub fn step(
        &mut self,
        velocity_first: &VelocityField<S>,
        velocity_second: &VelocityField<S>,
    ) -> Result<Odometer<S>> {
        let p1 = transport_density(&self.first, &self.grid, velocity_first, self.params.tau)?;
        let p2 = transport_density(&self.second, &self.grid, velocity_second, self.params.tau)?;
        let mut comps = [p1.rho, p2.rho];
        let mut absorbed = [p1.absorbed, p2.absorbed];
        let odometer = project_components(
            &self.grid,
            &mut comps,
            &mut absorbed,
            &mut self.rng,
            &self.params.projection(),
        )?;
        let [r1, r2] = comps;
        let [a1, a2] = absorbed;
        self.first = DensityGrid {
            layout: self.grid.layout,
            rho: r1,
            absorbed: a1,
        };
        self.second = DensityGrid {
            layout: self.grid.layout,
            rho: r2,
            absorbed: a2,
        };
        self.time += self.params.tau;
        self.steps += 1;
        Ok(Odometer {
            layout: self.grid.layout,
            values: odometer,
        })
    }
}

/// Slows the field down where the crowd ahead is dense: each cell reads
/// the density one cell along its own direction of motion and scales by
/// `alpha` of that value. `alpha` must map 0 to 1 and stay inside [0, 1].
pub fn density_dependent_velocity<S: Real, F: Fn(S) -> S>(
    density: &DensityGrid<S>,
    velocity: &VelocityField<S>,
    alpha: F,
) -> Result<VelocityField<S>> {
    let layout = velocity.layout;
    assert!(layout.same_shape(&density.layout));
    let at_zero = alpha(S::zero());
    if (at_zero - S::one()).abs() > S::of(1e-12) {
        return Err(Error::BadSpeedFactor {
            rho: 0.0,
            alpha: at_zero.to_f64_lossy(),
        });
    }
    let mut out = velocity.clone();
    for j in 0..layout.ny {
        for i in 0..layout.nx {
            let u = velocity.values[layout.index(i, j)];
            let dir = match u.normalized() {
                Some(d) => d,
                None => continue,
            };
            let probe = layout.cell_center(i, j)
                + crate::vec2::Vec2::new(layout.dx * dir.x, layout.dy * dir.y);
            let (di, dj) = layout.cell_at(probe);
            let rho = density.rho[layout.index(di, dj)];
            let factor = alpha(rho);
            if factor < S::zero() || factor > S::one() {
                return Err(Error::BadSpeedFactor {
                    rho: rho.to_f64_lossy(),
                    alpha: factor.to_f64_lossy(),
                });
            }
            out.values[layout.index(i, j)] = u * factor;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, rectangle, Room, Segment};
    use crate::vec2::Vec2;

    fn closed_room(w: f64, h: f64, res: f64) -> Grid<f64> {
        let room = Room::new(rectangle(0.0, 0.0, w, h), vec![], vec![]).unwrap();
        build_grid(&room, res).unwrap()
    }

    fn uniform_field(grid: &Grid<f64>, u: Vec2<f64>) -> VelocityField<f64> {
        VelocityField {
            layout: grid.layout,
            values: vec![u; grid.layout.ncells()],
        }
    }

    #[test]
    fn empty_density_stays_empty() {
        let g = closed_room(4.0, 3.0, 0.5);
        let field = uniform_field(&g, Vec2::new(0.3, 0.1));
        let mut sim = MacroSim::new(g.clone(), DensityGrid::zeros(&g), MacroParams::new(1.0), 1).unwrap();
        for _ in 0..10 {
            let od = sim.step(&field).unwrap();
            assert!(od.values.iter().all(|&v| v == 0.0));
        }
        assert_eq!(sim.interior_mass(), 0.0);
    }

    #[test]
    fn closed_box_keeps_mass_and_ceiling() {
        let g = closed_room(6.0, 6.0, 0.5);
        let mut d = DensityGrid::zeros(&g);
        d.fill_rect(&g, Vec2::new(1.0, 1.0), Vec2::new(5.0, 5.0), 0.85);
        let m0 = d.interior_mass();
        let field = uniform_field(&g, Vec2::new(0.31, -0.17));
        let mut sim = MacroSim::new(g, d, MacroParams::new(1.0), 42).unwrap();
        for _ in 0..200 {
            sim.step(&field).unwrap();
            assert!(sim.density.rho.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let drift = (sim.interior_mass() - m0).abs() / m0;
        assert!(drift <= 1e-12, "relative drift {drift}");
    }

    #[test]
    fn door_drains_the_room() {
        let room = Room::new(
            rectangle(0.0, 0.0, 6.0, 3.0),
            vec![],
            vec![Segment::new(Vec2::new(6.0, 0.0), Vec2::new(6.0, 3.0))],
        )
        .unwrap();
        let g = build_grid(&room, 0.5).unwrap();
        let mut d = DensityGrid::zeros(&g);
        // Saturated block reaching the door: outflow from the first step.
        d.fill_rect(&g, Vec2::new(0.5, 0.5), Vec2::new(6.0, 2.5), 1.0);
        let m0 = d.interior_mass();
        let field = uniform_field(&g, Vec2::new(0.4, 0.0));
        let mut sim = MacroSim::new(g, d, MacroParams::new(1.0), 7).unwrap();
        let mut prev = m0;
        let mut steps = 0;
        while sim.interior_mass() > 1e-6 * m0 && steps < 500 {
            sim.step(&field).unwrap();
            let now = sim.interior_mass();
            assert!(now < prev, "mass did not decrease at step {steps}");
            prev = now;
            steps += 1;
        }
        assert!(sim.interior_mass() <= 1e-6 * m0, "room did not empty");
        let balance = sim.interior_mass() + sim.absorbed_mass();
        assert!((balance - m0).abs() <= 1e-12 * m0);
    }

    #[test]
    fn empty_second_population_reduces_to_the_single_model() {
        let g = closed_room(5.0, 5.0, 0.5);
        let mut d = DensityGrid::zeros(&g);
        d.fill_rect(&g, Vec2::new(0.5, 0.5), Vec2::new(3.0, 4.5), 0.95);
        let field = uniform_field(&g, Vec2::new(0.4, 0.05));
        let still = uniform_field(&g, Vec2::new(0.0, 0.0));

        let mut single = MacroSim::new(g.clone(), d.clone(), MacroParams::new(1.0), 99).unwrap();
        let mut pair = TwoPopulationSim::new(
            g.clone(),
            d.clone(),
            DensityGrid::zeros(&g),
            MacroParams::new(1.0),
            99,
        )
        .unwrap();
        for _ in 0..50 {
            single.step(&field).unwrap();
            pair.step(&field, &still).unwrap();
        }
        assert_eq!(single.density.rho, pair.first.rho);
        assert!(pair.second.rho.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn joint_ceiling_holds_for_opposing_streams() {
        let g = closed_room(10.0, 1.0, 1.0);
        let mut d1 = DensityGrid::zeros(&g);
        let mut d2 = DensityGrid::zeros(&g);
        d1.fill_rect(&g, Vec2::new(0.0, 0.0), Vec2::new(4.0, 1.0), 0.7);
        d2.fill_rect(&g, Vec2::new(6.0, 0.0), Vec2::new(10.0, 1.0), 0.7);
        let m1 = d1.interior_mass();
        let m2 = d2.interior_mass();
        let right = uniform_field(&g, Vec2::new(0.8, 0.0));
        let left = uniform_field(&g, Vec2::new(-0.8, 0.0));
        let mut sim = TwoPopulationSim::new(g, d1, d2, MacroParams::new(1.0), 3).unwrap();
        for _ in 0..30 {
            sim.step(&right, &left).unwrap();
            for idx in 0..sim.grid.layout.ncells() {
                let t = sim.first.rho[idx] + sim.second.rho[idx];
                assert!(t <= 1.0, "joint density {t} above the ceiling");
            }
        }
        assert!((sim.first.interior_mass() - m1).abs() <= 1e-12 * m1);
        assert!((sim.second.interior_mass() - m2).abs() <= 1e-12 * m2);
    }

    #[test]
    fn speed_factor_reads_the_cell_ahead() {
        let g = closed_room(5.0, 1.0, 1.0);
        let mut d = DensityGrid::zeros(&g);
        d.rho[g.layout.index(3, 0)] = 0.5;
        let field = uniform_field(&g, Vec2::new(2.0, 0.0));
        let linear = |rho: f64| 1.0 - rho;
        let out = density_dependent_velocity(&d, &field, linear).unwrap();
        // Cell 2 looks into the half-full cell 3 and halves its speed.
        assert_eq!(out.values[g.layout.index(2, 0)], Vec2::new(1.0, 0.0));
        assert_eq!(out.values[g.layout.index(0, 0)], Vec2::new(2.0, 0.0));
    }

    #[test]
    fn empty_room_leaves_the_field_alone() {
        let g = closed_room(4.0, 4.0, 0.5);
        let d = DensityGrid::zeros(&g);
        let field = uniform_field(&g, Vec2::new(0.7, -0.2));
        let out = density_dependent_velocity(&d, &field, |rho: f64| 1.0 - rho).unwrap();
        assert_eq!(out.values, field.values);
    }

    #[test]
    fn saturated_room_freezes_a_vanishing_factor() {
        let g = closed_room(4.0, 4.0, 0.5);
        let mut d = DensityGrid::zeros(&g);
        for v in d.rho.iter_mut() {
            *v = 1.0;
        }
        let field = uniform_field(&g, Vec2::new(0.7, -0.2));
        let out = density_dependent_velocity(&d, &field, |rho: f64| 1.0 - rho).unwrap();
        assert!(out.values.iter().all(|&v| v == Vec2::new(0.0, 0.0)));
    }

    #[test]
    fn bad_speed_factors_are_rejected() {
        let g = closed_room(2.0, 2.0, 1.0);
        let d = DensityGrid::zeros(&g);
        let field = uniform_field(&g, Vec2::new(1.0, 0.0));
        let err = density_dependent_velocity(&d, &field, |_: f64| 0.5).unwrap_err();
        assert!(matches!(err, Error::BadSpeedFactor { .. }));
        let mut half = DensityGrid::zeros(&g);
        for v in half.rho.iter_mut() {
            *v = 0.5;
        }
        let err = density_dependent_velocity(&half, &field, |rho: f64| 1.0 + rho).unwrap_err();
        assert!(matches!(err, Error::BadSpeedFactor { .. }));
    }
}
