//! Frame-by-frame comparison of two finished runs. The two sides must share
//! the floor plan, the grid resolution and the time step; the report gives
//! the L1 distance between their density frames at every shared step plus
//! the overlay of the evacuation curves.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::output::{ensure_dir, frame_steps, read_csv, read_grid_csv, CsvWriter};
use crate::scenario::Scenario;

/// A frame series diverged once the densities differ by this fraction of
/// the initial mass.
pub const DIVERGENCE_FRACTION: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct RunData {
    pub dir: PathBuf,
    pub scenario: Scenario,
    /// Where the density frames live: disk runs store rasterized densities
    /// under raster/, grid runs store their frames under frames/.
    pub density_dir: PathBuf,
    pub steps: Vec<usize>,
    pub evacuation: EvacSeries,
}

/// Remaining and exited mass per step, as fractions of the initial mass so
/// a disk count and a density integral compare directly.
#[derive(Debug, Clone)]
pub struct EvacSeries {
    pub times: Vec<f64>,
    pub remaining_frac: Vec<f64>,
    pub exited_frac: Vec<f64>,
}

/// Loads one side of a comparison. A both-mode run carries two density
/// series; `prefer_raster` picks the disk raster for the side standing in
/// for the disk model and the grid frames for the other, falling back to
/// whichever exists.
pub fn load_run(dir: &Path, prefer_raster: bool) -> Result<RunData> {
    let scenario = Scenario::load(&dir.join("manifest.json"))
        .with_context(|| format!("{} is not a run directory", dir.display()))?;
    let raster = dir.join("raster");
    let frames = dir.join("frames");
    let (preferred, fallback) = if prefer_raster { (raster, frames) } else { (frames, raster) };
    let density_dir = if preferred.is_dir() { preferred } else { fallback };
    let steps = frame_steps(&density_dir)?;
    if steps.is_empty() {
        bail!("{} has no density frames", dir.display());
    }
    let evacuation = load_evacuation(dir, prefer_raster)?;
    Ok(RunData { dir: dir.to_owned(), scenario, density_dir, steps, evacuation })
}

fn load_evacuation(dir: &Path, prefer_micro: bool) -> Result<EvacSeries> {
    let micro = dir.join("micro_metrics.csv");
    let macro_ = dir.join("macro_metrics.csv");
    let micro_cols = (micro, "remaining", "exited");
    let macro_cols = (macro_, "interior_mass", "absorbed_mass");
    let (preferred, fallback) =
        if prefer_micro { (micro_cols, macro_cols) } else { (macro_cols, micro_cols) };
    let picked = if preferred.0.is_file() {
        preferred
    } else if fallback.0.is_file() {
        fallback
    } else {
        bail!("{} has no metrics file", dir.display());
    };
    let (table, remaining_col, exited_col) = (read_csv(&picked.0)?, picked.1, picked.2);
    let times = table.column("time")?;
    let remaining = table.column(remaining_col)?;
    let exited = table.column(exited_col)?;
    let initial = remaining.first().copied().unwrap_or(0.0) + exited.first().copied().unwrap_or(0.0);
    let frac = |v: &[f64]| -> Vec<f64> {
        v.iter().map(|x| if initial > 0.0 { x / initial } else { 0.0 }).collect()
    };
    Ok(EvacSeries { times, remaining_frac: frac(&remaining), exited_frac: frac(&exited) })
}

/// One field whose mismatch rules out a comparison, or nothing.
fn geometry_mismatch(a: &Scenario, b: &Scenario) -> Option<String> {
    let (ra, rb) = (&a.room, &b.room);
    if ra.width != rb.width {
        return Some(format!("[room] width {} vs {}", ra.width, rb.width));
    }
    if ra.height != rb.height {
        return Some(format!("[room] height {} vs {}", ra.height, rb.height));
    }
    if ra.obstacles != rb.obstacles {
        return Some("[room] obstacles differ".into());
    }
    let exits_a: Vec<([f64; 2], [f64; 2])> = ra.exits.iter().map(|e| (e.from, e.to)).collect();
    let exits_b: Vec<([f64; 2], [f64; 2])> = rb.exits.iter().map(|e| (e.from, e.to)).collect();
    if exits_a != exits_b {
        return Some("[room] exits differ".into());
    }
    if a.grid.resolution != b.grid.resolution {
        return Some(format!("[grid] resolution {} vs {}", a.grid.resolution, b.grid.resolution));
    }
    if a.run.tau != b.run.tau {
        return Some(format!("[run] tau {} vs {}", a.run.tau, b.run.tau));
    }
    None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub first: PathBuf,
    pub second: PathBuf,
    pub frames_compared: usize,
    pub l1_max: f64,
    pub l1_final: f64,
    /// First shared time where the frames differ by more than
    /// DIVERGENCE_FRACTION of the initial mass; null when they never do.
    pub divergence_time: Option<f64>,
    /// Whether the second run's exited mass dominates the first's at every
    /// shared metric step.
    pub second_exited_dominates_first: bool,
}

/// The first side stands in for the disk model, the second for the grid
/// model; either side degrades to the series it has.
pub fn compare_runs(first_dir: &Path, second_dir: &Path, out: &Path) -> Result<CompareReport> {
    let first = load_run(first_dir, true)?;
    let second = load_run(second_dir, false)?;
    if let Some(diff) = geometry_mismatch(&first.scenario, &second.scenario) {
        bail!("runs are not comparable: {diff}");
    }
    ensure_dir(out)?;

    let room = first.scenario.build_room()?;
    let layout = first.scenario.build_grid(&room)?.layout;
    let cell_area = layout.dx * layout.dy;
    let tau = first.scenario.run.tau;

    let shared: Vec<usize> =
        first.steps.iter().copied().filter(|s| second.steps.binary_search(s).is_ok()).collect();
    if shared.is_empty() {
        bail!(
            "no shared frame steps between {} and {}",
            first_dir.display(),
            second_dir.display()
        );
    }

    // Densities are area fractions, so the reference mass for the
    // divergence threshold is the larger of the two initial masses.
    let initial_mass = |run: &RunData| -> Result<f64> {
        let rows = read_grid_csv(&run.density_dir.join(crate::output::frame_name(run.steps[0])))?;
        Ok(rows.iter().flatten().sum::<f64>() * cell_area)
    };
    let mass_scale = initial_mass(&first)?.max(initial_mass(&second)?);

    let mut l1_csv = CsvWriter::create(&out.join("l1.csv"), &["step", "time", "l1"])?;
    let mut l1_max = 0.0f64;
    let mut l1_final = 0.0f64;
    let mut divergence_time = None;
    for &step in &shared {
        let a = read_grid_csv(&first.density_dir.join(crate::output::frame_name(step)))?;
        let b = read_grid_csv(&second.density_dir.join(crate::output::frame_name(step)))?;
        if a.len() != b.len() || a.first().map(Vec::len) != b.first().map(Vec::len) {
            bail!("frame {step}: grid shapes differ between the runs");
        }
        let l1: f64 = a
            .iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            * cell_area;
        let time = step as f64 * tau;
        l1_csv.row(&[step as f64, time, l1])?;
        l1_max = l1_max.max(l1);
        l1_final = l1;
        if divergence_time.is_none() && mass_scale > 0.0 && l1 > DIVERGENCE_FRACTION * mass_scale {
            divergence_time = Some(time);
        }
    }
    l1_csv.finish()?;

    let rows = first.evacuation.times.len().min(second.evacuation.times.len());
    let mut evac_csv = CsvWriter::create(
        &out.join("evacuation.csv"),
        &[
            "time",
            "first_remaining_frac",
            "first_exited_frac",
            "second_remaining_frac",
            "second_exited_frac",
        ],
    )?;
    let mut dominates = true;
    for k in 0..rows {
        let fe = first.evacuation.exited_frac[k];
        let se = second.evacuation.exited_frac[k];
        // Comparing a disk count against a mass integral leaves room for
        // representation noise, nothing more.
        if se + 1e-9 < fe {
            dominates = false;
        }
        evac_csv.row(&[
            first.evacuation.times[k],
            first.evacuation.remaining_frac[k],
            fe,
            second.evacuation.remaining_frac[k],
            se,
        ])?;
    }
    evac_csv.finish()?;

    let report = CompareReport {
        first: first_dir.to_owned(),
        second: second_dir.to_owned(),
        frames_compared: shared.len(),
        l1_max,
        l1_final,
        divergence_time,
        second_exited_dominates_first: dominates,
    };
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(out.join("report.json"), json + "\n")?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::run_scenario;
    use std::fs;

    fn tmp(name: &str) -> PathBuf {
        let dir =
            std::env::temp_dir().join(format!("crowdsim-compare-{}-{name}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn scenario(model: &str, width: f64) -> Scenario {
        let text = format!(
            r#"
            [room]
            width = {width}
            height = 3.0
            [[room.exit]]
            from = [{width}, 1.0]
            to = [{width}, 2.0]

            [grid]
            resolution = 0.25

            [run]
            model = "{model}"
            steps = 20
            tau = 0.05
            seed = 3
            frame_stride = 5

            [micro]
            radius = 0.2
            fill = {{ kind = "lattice", lattice = "cartesian", count = 4, origin = [0.6, 0.8], gap = 0.1 }}

            [macro]
            blocks = [[0.5, 0.5, 2.5, 2.5, 0.6]]
            "#
        );
        toml::from_str(&text).unwrap()
    }

    #[test]
    fn a_run_compared_to_itself_is_identically_zero() {
        let dir = tmp("self");
        run_scenario(&scenario("macro", 6.0), &dir.join("run")).unwrap();
        let report = compare_runs(&dir.join("run"), &dir.join("run"), &dir.join("cmp")).unwrap();
        assert_eq!(report.l1_max, 0.0);
        assert_eq!(report.l1_final, 0.0);
        assert_eq!(report.divergence_time, None);
        assert!(report.second_exited_dominates_first);
        assert!(report.frames_compared >= 4);
        let table = read_csv(&dir.join("cmp").join("l1.csv")).unwrap();
        assert!(table.column("l1").unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn both_mode_run_compares_micro_against_macro() {
        let dir = tmp("both");
        run_scenario(&scenario("both", 6.0), &dir.join("run")).unwrap();
        // Same directory on both sides: the first picks the rasterized disk
        // densities, the second the grid frames.
        let report = compare_runs(&dir.join("run"), &dir.join("run"), &dir.join("cmp")).unwrap();
        assert!(report.l1_max > 0.0, "disk raster and density frames should differ");
    }

    #[test]
    fn mismatched_geometry_is_refused() {
        let dir = tmp("geom");
        run_scenario(&scenario("macro", 6.0), &dir.join("a")).unwrap();
        run_scenario(&scenario("macro", 8.0), &dir.join("b")).unwrap();
        let err = compare_runs(&dir.join("a"), &dir.join("b"), &dir.join("cmp")).unwrap_err();
        assert!(err.to_string().contains("[room] width"), "{err}");
    }

    #[test]
    fn empty_scenarios_give_zero_curves() {
        let mut s = scenario("macro", 6.0);
        s.macroscopic.as_mut().unwrap().blocks = vec![[0.5, 0.5, 1.0, 1.0, 0.0]];
        let dir = tmp("empty");
        run_scenario(&s, &dir.join("run")).unwrap();
        let report = compare_runs(&dir.join("run"), &dir.join("run"), &dir.join("cmp")).unwrap();
        assert_eq!(report.l1_max, 0.0);
        let table = read_csv(&dir.join("cmp").join("evacuation.csv")).unwrap();
        assert!(table.column("first_exited_frac").unwrap().iter().all(|&v| v == 0.0));
        assert!(table.column("first_remaining_frac").unwrap().iter().all(|&v| v == 0.0));
    }
}
