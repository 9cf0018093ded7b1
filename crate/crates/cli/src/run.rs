//! Run orchestration: one scenario in, one self-describing run directory
//! out. The directory always carries a manifest with every parameter
//! resolved; re-running the manifest reproduces the directory bit for bit.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use crowdsim_core::analysis::{
    evacuation_metrics, normalize_density, rasterize_micro, JamVerdictParams,
};
use crowdsim_core::geometry::{
    compute_distance_field, desired_velocity_from_distance, Grid, Room, VelocityField,
};
use crowdsim_core::macroscale::{
    pressure_from_odometer, DensityGrid, MacroParams, MacroSim, Odometer,
};
use crowdsim_core::micro::{
    assign_desired, disk_pressure_sums, BehaviorParams, MicroParams, MicroSim, TypeBehavior,
};
use crowdsim_core::Vec2;

use crate::output::{
    ensure_dir, frame_name, pgm_name, write_grid_csv, write_pgm, CsvWriter, JsonlWriter,
    MicroFrame,
};
use crate::scenario::{initial_positions, Scenario, SeedFan};

#[derive(Debug, Clone)]
pub struct MicroSummary {
    pub disks: usize,
    pub remaining: usize,
    pub exited: usize,
    pub steps_run: usize,
    pub frames: usize,
    pub jammed: bool,
    /// Raw raster value the densities were normalized by.
    pub raster_reference: f64,
}

#[derive(Debug, Clone)]
pub struct MacroSummary {
    pub initial_mass: f64,
    pub interior_mass: f64,
    pub absorbed_mass: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub micro: Option<MicroSummary>,
    pub macroscopic: Option<MacroSummary>,
}

/// The desired-velocity field of a population: constant when the scenario
/// pins one, otherwise downhill on the distance to the exits. A room with
/// no exit and no pinned velocity yields a still field.
fn guidance_field(
    grid: &Grid,
    room: &Room,
    speed: f64,
    constant: Option<[f64; 2]>,
) -> Result<VelocityField> {
    if let Some([ux, uy]) = constant {
        let mut values = vec![Vec2::new(ux, uy); grid.layout.ncells()];
        for j in 0..grid.layout.ny {
            for i in 0..grid.layout.nx {
                if grid.is_wall(i, j) {
                    values[grid.layout.index(i, j)] = Vec2::zero();
                }
            }
        }
        return Ok(VelocityField { layout: grid.layout, values });
    }
    if room.exits.is_empty() {
        return Ok(VelocityField {
            layout: grid.layout,
            values: vec![Vec2::zero(); grid.layout.ncells()],
        });
    }
    let distance = compute_distance_field(grid).context("computing the distance field")?;
    Ok(desired_velocity_from_distance(grid, &distance, speed, true))
}

/// Runs a validated scenario into `dir`. Existing files are overwritten;
/// everything emitted is listed in the manifest's directory.
pub fn run_scenario(scenario: &Scenario, dir: &Path) -> Result<RunSummary> {
    scenario.validate()?;
    ensure_dir(dir)?;
    let room = scenario.build_room()?;
    let grid = scenario.build_grid(&room)?;

    let manifest = serde_json::to_string_pretty(scenario)?;
    fs::write(dir.join("manifest.json"), manifest + "\n")?;

    let mut summary = RunSummary::default();
    if scenario.run.model.wants_micro() {
        summary.micro = Some(run_micro(scenario, &room, &grid, dir)?);
    }
    if scenario.run.model.wants_macro() {
        summary.macroscopic = Some(run_macro(scenario, &room, &grid, dir)?);
    }
    Ok(summary)
}

fn run_micro(scenario: &Scenario, room: &Room, grid: &Grid, dir: &Path) -> Result<MicroSummary> {
    let m = scenario.micro.as_ref().expect("validated");
    let tau = scenario.run.tau;
    let stride = scenario.run.frame_stride;
    let fan = SeedFan::new(scenario.run.seed);

    let positions = initial_positions(&m.fill, m.radius, room, fan.placement)?;
    let n = positions.len();
    let field = guidance_field(grid, room, m.speed, m.velocity)?;

    let mut params = MicroParams::new(m.radius, tau);
    params.eps_act = m.eps_act;
    if let Some(tol) = m.tol_kkt {
        params.tol_kkt = tol;
    }
    params.max_iter = m.max_iter;
    params.warm_start = m.warm_start;
    let mut sim = MicroSim::new(params, positions, room.wall_segments(), room.exits.clone())
        .context("[micro] initial configuration rejected")?;

    let behaviors = [TypeBehavior {
        field: 0,
        strategy: m.strategy.into(),
        params: BehaviorParams { prox_range: m.prox_range, half_angle: m.half_angle },
    }];
    let types = vec![0usize; n];
    let fields = [field];
    let mut prev_speeds = vec![0.0f64; n];

    let mut frames = JsonlWriter::create(&dir.join("micro_frames.jsonl"))?;
    let mut metrics = CsvWriter::create(
        &dir.join("micro_metrics.csv"),
        &["step", "time", "remaining", "exited", "min_gap", "contacts", "iterations"],
    )?;
    // Gap reported when nothing is within reach of anything.
    let gap_cap = (room.outer.bounding_box().1 - room.outer.bounding_box().0).norm();

    let mut rasters: Vec<(usize, DensityGrid)> = Vec::new();
    let mut curve: Vec<(f64, f64, f64)> = Vec::new();
    let mut kept = 0usize;

    let emit = |sim: &MicroSim,
                    step: usize,
                    pressures: Vec<f64>,
                    frames: &mut JsonlWriter,
                    rasters: &mut Vec<(usize, DensityGrid)>|
     -> Result<()> {
        let remaining = sim.active_count();
        frames.write(&MicroFrame {
            step,
            time: sim.time,
            positions: sim.positions.iter().map(|p| [p.x, p.y]).collect(),
            exited: sim.exited.clone(),
            pressures,
            remaining,
            exited_count: n - remaining,
        })?;
        let active: Vec<Vec2> = sim
            .positions
            .iter()
            .zip(&sim.exited)
            .filter(|(_, e)| !**e)
            .map(|(p, _)| *p)
            .collect();
        rasters.push((step, rasterize_micro(&active, m.radius, grid)));
        Ok(())
    };

    emit(&sim, 0, vec![0.0; n], &mut frames, &mut rasters)?;
    kept += 1;
    metrics.row(&[0.0, 0.0, n as f64, 0.0, sim.min_gap()?.min(gap_cap), 0.0, 0.0])?;
    curve.push((0.0, n as f64, 0.0));

    let mut steps_run = 0usize;
    for step in 1..=scenario.run.steps {
        let active: Vec<bool> = sim.exited.iter().map(|e| !e).collect();
        let desired =
            assign_desired(&sim.positions, &active, &types, &behaviors, &fields, m.radius, &prev_speeds)?;
        let report = sim
            .step(&desired)
            .with_context(|| format!("[micro] solver failed at step {step}"))?;
        steps_run = step;
        for (v, s) in sim.velocities.iter().zip(prev_speeds.iter_mut()) {
            *s = v.norm();
        }
        let remaining = sim.active_count();
        curve.push((sim.time, remaining as f64, (n - remaining) as f64));
        metrics.row(&[
            step as f64,
            sim.time,
            remaining as f64,
            (n - remaining) as f64,
            sim.min_gap()?.min(gap_cap),
            report.contacts.len() as f64,
            report.iterations as f64,
        ])?;
        if step % stride == 0 || step == scenario.run.steps || remaining == 0 {
            let pressures = disk_pressure_sums(&report.contacts, &report.multipliers, tau, n);
            emit(&sim, step, pressures, &mut frames, &mut rasters)?;
            kept += 1;
        }
        if remaining == 0 {
            break;
        }
    }
    frames.finish()?;
    metrics.finish()?;

    // The raster frames are normalized by the highest raw value the run
    // produced, so saturation means "as dense as this run ever got".
    let reference = rasters
        .iter()
        .flat_map(|(_, d)| d.rho.iter().copied())
        .fold(0.0f64, f64::max);
    let raster_dir = dir.join("raster");
    ensure_dir(&raster_dir)?;
    for (step, raw) in &rasters {
        let values = if reference > 0.0 {
            normalize_density(raw, reference)?.rho
        } else {
            raw.rho.clone()
        };
        write_grid_csv(&raster_dir.join(frame_name(*step)), &grid.layout, &values)?;
    }

    let (_, jammed) = evacuation_metrics(&curve, &JamVerdictParams::default())?;
    let remaining = sim.active_count();
    Ok(MicroSummary {
        disks: n,
        remaining,
        exited: n - remaining,
        steps_run,
        frames: kept,
        jammed,
        raster_reference: reference,
    })
}

fn run_macro(scenario: &Scenario, room: &Room, grid: &Grid, dir: &Path) -> Result<MacroSummary> {
    let m = scenario.macroscopic.as_ref().expect("validated");
    let stride = scenario.run.frame_stride;
    let fan = SeedFan::new(scenario.run.seed);

    let field = guidance_field(grid, room, m.speed, m.velocity)?;
    let mut density = DensityGrid::zeros(grid);
    for b in &m.blocks {
        density.fill_rect(grid, Vec2::new(b[0], b[1]), Vec2::new(b[2], b[3]), b[4]);
    }
    let mut params = MacroParams::new(scenario.run.tau);
    params.max_walk_steps = m.max_walk_steps;
    let mut sim = MacroSim::new(grid.clone(), density, params, fan.projection)
        .context("[macro] initial density rejected")?;
    let initial_mass = sim.interior_mass();

    let frames_dir = dir.join("frames");
    ensure_dir(&frames_dir)?;
    let mut metrics = CsvWriter::create(
        &dir.join("macro_metrics.csv"),
        &["step", "time", "interior_mass", "absorbed_mass", "max_rho"],
    )?;
    let mut odometer = Odometer { layout: grid.layout, values: vec![0.0; grid.layout.ncells()] };
    let mut kept = 0usize;

    let max_rho = |d: &DensityGrid| d.rho.iter().copied().fold(0.0f64, f64::max);
    let emit = |sim: &MacroSim, step: usize, kept: &mut usize| -> Result<()> {
        write_grid_csv(&frames_dir.join(frame_name(step)), &grid.layout, &sim.density.rho)?;
        if scenario.output.pgm {
            write_pgm(&frames_dir.join(pgm_name(step)), &grid.layout, &sim.density.rho)?;
        }
        *kept += 1;
        Ok(())
    };

    emit(&sim, 0, &mut kept)?;
    metrics.row(&[0.0, 0.0, initial_mass, 0.0, max_rho(&sim.density)])?;

    for step in 1..=scenario.run.steps {
        let step_odometer = sim
            .step(&field)
            .with_context(|| format!("[macro] correction failed at step {step}"))?;
        odometer.accumulate(&step_odometer);
        metrics.row(&[
            step as f64,
            sim.time,
            sim.interior_mass(),
            sim.absorbed_mass(),
            max_rho(&sim.density),
        ])?;
        if step % stride == 0 || step == scenario.run.steps {
            emit(&sim, step, &mut kept)?;
        }
    }
    metrics.finish()?;

    write_grid_csv(&dir.join("odometer.csv"), &grid.layout, &odometer.values)?;
    write_grid_csv(&dir.join("pressure.csv"), &grid.layout, &pressure_from_odometer(&odometer))?;

    Ok(MacroSummary {
        initial_mass,
        interior_mass: sim.interior_mass(),
        absorbed_mass: sim.absorbed_mass(),
        frames: kept,
    })
}
