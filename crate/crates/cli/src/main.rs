use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crowdsim_cli::compare::compare_runs;
use crowdsim_cli::output::{read_csv, write_grid_csv};
use crowdsim_cli::run::run_scenario;
use crowdsim_cli::scenario::{initial_positions, Scenario, SeedFan};

use crowdsim_core::analysis::{
    evacuation_metrics, normalize_density, rasterize_micro, JamVerdictParams,
};
use crowdsim_core::geometry::compute_distance_field;

#[derive(Parser)]
#[command(name = "crowdsim", version, about = "Two-level crowd motion simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file into an output directory
    Run {
        /// Scenario TOML, or the manifest.json of an earlier run
        #[arg(long)]
        scenario: PathBuf,
        /// Run directory to create
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the frame stride
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Compare two finished runs frame by frame
    Compare {
        /// Run directory whose curves go in the first columns
        first: PathBuf,
        /// Run directory whose curves go in the second columns
        second: PathBuf,
        /// Report directory to create
        #[arg(long)]
        out: PathBuf,
    },
    /// Rasterize a scenario's initial disk layout onto its grid
    Rasterize {
        #[arg(long)]
        scenario: PathBuf,
        /// CSV file to write
        #[arg(long)]
        out: PathBuf,
        /// Normalize by this reference density instead of writing raw values
        #[arg(long)]
        reference: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evacuation metrics and jam verdict of a finished run
    Metrics {
        /// Run directory to analyze
        #[arg(long)]
        run: PathBuf,
        /// Also write the JSON report here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance-to-exit field of a scenario as a CSV grid
    DistanceField {
        #[arg(long)]
        scenario: PathBuf,
        /// CSV file to write; walls and unreachable cells hold -1
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { scenario, out, seed, stride } => {
            let scenario = Scenario::load(&scenario)?.with_overrides(seed, stride);
            let summary = run_scenario(&scenario, &out)?;
            if let Some(m) = &summary.micro {
                println!(
                    "micro: {} disks, {} exited, {} remaining after {} steps ({} frames{})",
                    m.disks,
                    m.exited,
                    m.remaining,
                    m.steps_run,
                    m.frames,
                    if m.jammed { ", jammed" } else { "" }
                );
            }
            if let Some(m) = &summary.macroscopic {
                println!(
                    "macro: mass {:.6} -> interior {:.6} + absorbed {:.6} ({} frames)",
                    m.initial_mass, m.interior_mass, m.absorbed_mass, m.frames
                );
            }
            println!("run written to {}", out.display());
        }
        Command::Compare { first, second, out } => {
            let report = compare_runs(&first, &second, &out)?;
            println!(
                "{} frames compared, L1 max {:.6}, final {:.6}",
                report.frames_compared, report.l1_max, report.l1_final
            );
            match report.divergence_time {
                Some(t) => println!("diverged at t = {t:.3}"),
                None => println!("never diverged"),
            }
            println!(
                "second exited mass dominates first: {}",
                report.second_exited_dominates_first
            );
            println!("report written to {}", out.display());
        }
        Command::Rasterize { scenario, out, reference, seed } => {
            let scenario = Scenario::load(&scenario)?.with_overrides(seed, None);
            let micro = scenario
                .micro
                .as_ref()
                .context("rasterize needs a [micro] section in the scenario")?;
            let room = scenario.build_room()?;
            let grid = scenario.build_grid(&room)?;
            let fan = SeedFan::new(scenario.run.seed);
            let positions = initial_positions(&micro.fill, micro.radius, &room, fan.placement)?;
            let raw = rasterize_micro(&positions, micro.radius, &grid);
            let values = match reference {
                Some(r) => normalize_density(&raw, r)?.rho,
                None => raw.rho,
            };
            write_grid_csv(&out, &grid.layout, &values)?;
            println!("{} disks rasterized to {}", positions.len(), out.display());
        }
        Command::Metrics { run, out } => {
            let micro = run.join("micro_metrics.csv");
            let macro_ = run.join("macro_metrics.csv");
            let (table, remaining_col, exited_col) = if micro.is_file() {
                (read_csv(&micro)?, "remaining", "exited")
            } else {
                (
                    read_csv(&macro_)
                        .with_context(|| format!("{} has no metrics file", run.display()))?,
                    "interior_mass",
                    "absorbed_mass",
                )
            };
            let times = table.column("time")?;
            let remaining = table.column(remaining_col)?;
            let exited = table.column(exited_col)?;
            let frames: Vec<(f64, f64, f64)> = times
                .iter()
                .zip(&remaining)
                .zip(&exited)
                .map(|((&t, &r), &e)| (t, r, e))
                .collect();
            let (curve, jammed) = evacuation_metrics(&frames, &JamVerdictParams::default())?;
            let report = serde_json::json!({
                "frames": curve.times.len(),
                "duration": curve.times.last().copied().unwrap_or(0.0),
                "initial": curve.remaining.first().copied().unwrap_or(0.0)
                    + curve.exited.first().copied().unwrap_or(0.0),
                "remaining": curve.remaining.last().copied().unwrap_or(0.0),
                "exited": curve.exited.last().copied().unwrap_or(0.0),
                "jammed": jammed,
            });
            let text = serde_json::to_string_pretty(&report)?;
            println!("{text}");
            if let Some(path) = out {
                std::fs::write(&path, text + "\n")?;
            }
        }
        Command::DistanceField { scenario, out } => {
            let scenario = Scenario::load(&scenario)?;
            let room = scenario.build_room()?;
            let grid = scenario.build_grid(&room)?;
            let field = compute_distance_field(&grid)?;
            let values: Vec<f64> =
                field.values.iter().map(|&v| if v.is_finite() { v } else { -1.0 }).collect();
            write_grid_csv(&out, &grid.layout, &values)?;
            println!("distance field written to {}", out.display());
        }
    }
    Ok(())
}
