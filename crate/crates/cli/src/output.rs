//! File emission and re-ingestion for run directories. Grids go out as bare
//! CSV matrices (row j = 0 first), frames additionally as binary PGM for a
//! quick look. Every writer refuses non-finite numbers, so no emitted file
//! ever carries a NaN or an infinity.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crowdsim_core::geometry::GridLayout;
use crowdsim_core::macroscale::DensityGrid;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn finite(label: &str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        bail!("refusing to emit non-finite value {v} for {label}");
    }
    Ok(v)
}

/// One row per grid row, lowest j first; plain comma separated values in
/// Rust's shortest round-tripping float format.
pub fn write_grid_csv(path: &Path, layout: &GridLayout, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), layout.ncells());
    let mut text = String::new();
    for j in 0..layout.ny {
        for i in 0..layout.nx {
            if i > 0 {
                text.push(',');
            }
            let v = finite("grid cell", values[layout.index(i, j)])?;
            let _ = write!(text, "{v}");
        }
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_grid_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (jn, line) in text.lines().enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}: row {jn}: bad number {s:?}", path.display()))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() as Option<&Vec<f64>> {
            if first.len() != row.len() {
                bail!("{}: ragged row {jn}", path.display());
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Binary PGM, darkest = saturated. Rows are flipped so the image shows y
/// increasing upwards.
pub fn write_pgm(path: &Path, layout: &GridLayout, values: &[f64]) -> Result<()> {
    let mut out = Vec::with_capacity(layout.ncells() + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", layout.nx, layout.ny).as_bytes());
    for j in (0..layout.ny).rev() {
        for i in 0..layout.nx {
            let v = finite("pgm cell", values[layout.index(i, j)])?;
            out.push(255 - (v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// One kept frame of the disk simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MicroFrame {
    pub step: usize,
    pub time: f64,
    pub positions: Vec<[f64; 2]>,
    pub exited: Vec<bool>,
    /// Summed contact pressure per disk, from the step's multipliers.
    pub pressures: Vec<f64>,
    pub remaining: usize,
    pub exited_count: usize,
}

pub struct JsonlWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<JsonlWriter> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(JsonlWriter { out: BufWriter::new(file), path: path.to_owned() })
    }

    pub fn write(&mut self, frame: &MicroFrame) -> Result<()> {
        for p in &frame.positions {
            finite("frame position", p[0])?;
            finite("frame position", p[1])?;
        }
        for &p in &frame.pressures {
            finite("frame pressure", p)?;
        }
        serde_json::to_writer(&mut self.out, frame)?;
        self.out
            .write_all(b"\n")
            .with_context(|| format!("writing {}", self.path.display()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().with_context(|| format!("flushing {}", self.path.display()))
    }
}

pub fn read_jsonl_frames(path: &Path) -> Result<Vec<MicroFrame>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(|l| serde_json::from_str(l).with_context(|| format!("parsing {}", path.display())))
        .collect()
}

/// Plain CSV with a header row; all cells numeric.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<CsvWriter> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out, columns: header.len(), path: path.to_owned() })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        assert_eq!(values.len(), self.columns);
        let mut line = String::new();
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            let _ = write!(line, "{}", finite("csv cell", *v)?);
        }
        writeln!(self.out, "{line}").with_context(|| format!("writing {}", self.path.display()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().with_context(|| format!("flushing {}", self.path.display()))
    }
}

#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column {name:?}, have {:?}", self.header))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .with_context(|| format!("{} is empty", path.display()))?
        .split(',')
        .map(|s| s.trim().to_owned())
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}: row {n}: bad number {s:?}", path.display()))
            })
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            bail!("{}: row {n} has {} cells, header has {}", path.display(), row.len(), header.len());
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

pub fn frame_name(step: usize) -> String {
    format!("rho_{step:06}.csv")
}

pub fn pgm_name(step: usize) -> String {
    format!("rho_{step:06}.pgm")
}

/// Lists the kept frame steps in a frames directory by parsing the file
/// names back.
pub fn frame_steps(dir: &Path) -> Result<Vec<usize>> {
    let mut steps = Vec::new();
    if !dir.is_dir() {
        return Ok(steps);
    }
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(step) = name.strip_prefix("rho_").and_then(|s| s.strip_suffix(".csv")) {
            steps.push(step.parse().with_context(|| format!("frame name {name}"))?);
        }
    }
    steps.sort_unstable();
    Ok(steps)
}

pub fn density_values(density: &DensityGrid) -> &[f64] {
    &density.rho
}
