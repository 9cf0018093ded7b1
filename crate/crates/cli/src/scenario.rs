//! Scenario files: a TOML tree describing the room, the grid, the run, and
//! the per-model populations. Loading resolves every optional field to its
//! default, so the value written back out (the manifest) is self-describing
//! and can be re-run bit-identically.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crowdsim_core::analysis::{generate_lattice, LatticeKind, LatticeSpec};
use crowdsim_core::geometry::{build_grid, rectangle, Grid, Polygon, Room, Segment};
use crowdsim_core::micro::Strategy;
use crowdsim_core::Vec2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Micro,
    Macro,
    Both,
}

impl Model {
    pub fn wants_micro(self) -> bool {
        matches!(self, Model::Micro | Model::Both)
    }

    pub fn wants_macro(self) -> bool {
        matches!(self, Model::Macro | Model::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    None,
    Decelerate,
    Bypass,
}

impl From<StrategyName> for Strategy {
    fn from(s: StrategyName) -> Strategy {
        match s {
            StrategyName::None => Strategy::None,
            StrategyName::Decelerate => Strategy::Decelerate,
            StrategyName::Bypass => Strategy::Bypass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeName {
    Triangular,
    Cartesian,
    LooseTriangular,
}

impl From<LatticeName> for LatticeKind {
    fn from(k: LatticeName) -> LatticeKind {
        match k {
            LatticeName::Triangular => LatticeKind::Triangular,
            LatticeName::Cartesian => LatticeKind::Cartesian,
            LatticeName::LooseTriangular => LatticeKind::LooseTriangular,
        }
    }
}

/// How the micro population is seeded. Explicit positions, a lattice patch
/// grown from an origin corner, or rejection-sampled random placement in a
/// rectangle. `gap` is extra clearance added between disk surfaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FillSpec {
    Positions {
        positions: Vec<[f64; 2]>,
    },
    Lattice {
        lattice: LatticeName,
        count: usize,
        origin: [f64; 2],
        #[serde(default)]
        gap: f64,
    },
    Random {
        count: usize,
        region: [f64; 4],
        #[serde(default)]
        gap: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSection {
    pub width: f64,
    pub height: f64,
    /// Axis-aligned rectangular blocks, [x0, y0, x1, y1].
    #[serde(default)]
    pub obstacles: Vec<[f64; 4]>,
    /// Exit segments on the outer boundary.
    #[serde(default, rename = "exit")]
    pub exits: Vec<ExitSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitSection {
    pub from: [f64; 2],
    pub to: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub resolution: f64,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub model: Model,
    pub steps: usize,
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
    /// Keep every nth frame (the initial frame is always kept).
    #[serde(default = "default_stride")]
    pub frame_stride: usize,
}

fn default_speed() -> f64 {
    1.0
}

fn default_prox_range() -> f64 {
    1.0
}

fn default_half_angle() -> f64 {
    std::f64::consts::FRAC_PI_3
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroSection {
    pub radius: f64,
    #[serde(default = "default_speed")]
    pub speed: f64,
    pub fill: FillSpec,
    #[serde(default = "default_strategy")]
    pub strategy: StrategyName,
    #[serde(default = "default_prox_range")]
    pub prox_range: f64,
    #[serde(default = "default_half_angle")]
    pub half_angle: f64,
    /// Constant desired velocity for the whole population; when absent the
    /// field is derived from the distance to the exits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
    /// Override for the contact activation threshold; derived per step
    /// from the desired speeds when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_act: Option<f64>,
    /// Override for the solver certificate tolerance; 1e-9 times the
    /// radius when absent. Dense packs converge much faster at 1e-6 times
    /// the radius, still far below any printed digit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_kkt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_strategy() -> StrategyName {
    StrategyName::None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroSection {
    #[serde(default = "default_speed")]
    pub speed: f64,
    /// Initial density blocks, [x0, y0, x1, y1, value], applied in order.
    pub blocks: Vec<[f64; 5]>,
    /// Constant transport velocity; when absent the field is derived from
    /// the distance to the exits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_walk_steps: Option<usize>,
}

fn default_pgm() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Also render macro density frames as PGM images.
    pub pgm: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { pgm: default_pgm() }
    }
}

/// A fully resolved scenario: every default filled in. This is what the
/// manifest stores, and a manifest is itself a loadable scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    pub room: RoomSection,
    pub grid: GridSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro: Option<MicroSection>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "macro")]
    pub macroscopic: Option<MacroSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl Scenario {
    /// Parses a scenario from TOML (.toml) or from an emitted manifest
    /// (.json); anything else is tried as TOML.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        let scenario: Scenario = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .with_context(|| format!("parsing manifest {}", path.display()))?
        } else {
            toml::from_str(&text)
                .with_context(|| format!("parsing scenario {}", path.display()))?
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.room;
        if !(r.width > 0.0 && r.height > 0.0) {
            bail!("[room] width and height must be positive, got {} x {}", r.width, r.height);
        }
        for (k, o) in r.obstacles.iter().enumerate() {
            if !(o[0] < o[2] && o[1] < o[3]) {
                bail!("[room] obstacle {k} is not a proper rectangle: {o:?}");
            }
        }
        if !(self.grid.resolution > 0.0) {
            bail!("[grid] resolution must be positive, got {}", self.grid.resolution);
        }
        if !(self.run.tau > 0.0) {
            bail!("[run] tau must be positive, got {}", self.run.tau);
        }
        if self.run.frame_stride == 0 {
            bail!("[run] frame_stride must be at least 1");
        }
        if self.run.model.wants_micro() {
            let m = self
                .micro
                .as_ref()
                .with_context(|| format!("[run] model {:?} needs a [micro] section", self.run.model))?;
            if !(m.radius > 0.0) {
                bail!("[micro] radius must be positive, got {}", m.radius);
            }
            if !(m.speed >= 0.0) {
                bail!("[micro] speed must be nonnegative, got {}", m.speed);
            }
            if let Some(tol) = m.tol_kkt {
                if !(tol > 0.0) {
                    bail!("[micro] tol_kkt must be positive, got {tol}");
                }
            }
        }
        if self.run.model.wants_macro() {
            let m = self
                .macroscopic
                .as_ref()
                .with_context(|| format!("[run] model {:?} needs a [macro] section", self.run.model))?;
            for (k, b) in m.blocks.iter().enumerate() {
                if !(b[0] < b[2] && b[1] < b[3]) {
                    bail!("[macro] block {k} is not a proper rectangle: {b:?}");
                }
                if !(0.0..=1.0).contains(&b[4]) {
                    bail!("[macro] block {k} density {} outside [0, 1]", b[4]);
                }
            }
        }
        Ok(())
    }

    /// Applies command line overrides. Overrides land in the manifest, so a
    /// rerun of the manifest does not need the flags again.
    pub fn with_overrides(mut self, seed: Option<u64>, stride: Option<usize>) -> Scenario {
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(s) = stride {
            self.run.frame_stride = s.max(1);
        }
        self
    }

    pub fn build_room(&self) -> Result<Room> {
        let outer = rectangle(0.0, 0.0, self.room.width, self.room.height);
        let obstacles: Vec<Polygon> = self
            .room
            .obstacles
            .iter()
            .map(|o| rectangle(o[0], o[1], o[2], o[3]))
            .collect();
        let exits = self
            .room
            .exits
            .iter()
            .map(|e| Segment::new(Vec2::new(e.from[0], e.from[1]), Vec2::new(e.to[0], e.to[1])))
            .collect();
        Room::new(outer, obstacles, exits).context("[room] invalid geometry")
    }

    pub fn build_grid(&self, room: &Room) -> Result<Grid> {
        build_grid(room, self.grid.resolution).context("[grid] build failed")
    }
}

/// Per-subsystem seeds, all derived from the one scenario seed. The global
/// seed keys a counter RNG and the subsystems draw from it in a fixed
/// order, so adding a consumer never perturbs the existing ones.
#[derive(Debug, Clone, Copy)]
pub struct SeedFan {
    pub placement: u64,
    pub projection: u64,
}

impl SeedFan {
    pub fn new(seed: u64) -> SeedFan {
        let mut root = ChaCha8Rng::seed_from_u64(seed);
        SeedFan {
            placement: root.gen(),
            projection: root.gen(),
        }
    }
}

/// Materializes the initial micro positions. Lattice fills keep the exact
/// count; random fills reject overlaps and give up with an error when the
/// region is too tight.
pub fn initial_positions(
    spec: &FillSpec,
    radius: f64,
    room: &Room,
    seed: u64,
) -> Result<Vec<Vec2>> {
    let positions = match spec {
        FillSpec::Positions { positions } => {
            positions.iter().map(|p| Vec2::new(p[0], p[1])).collect()
        }
        FillSpec::Lattice { lattice, count, origin, gap } => {
            if *gap < 0.0 {
                bail!("[micro.fill] gap must be nonnegative, got {gap}");
            }
            // Placing on a lattice of inflated disks leaves `gap` clearance
            // between the real surfaces.
            let spec = LatticeSpec {
                kind: (*lattice).into(),
                count: *count,
                radius: radius + 0.5 * gap,
                origin: Vec2::new(origin[0], origin[1]),
            };
            generate_lattice(&spec)
        }
        FillSpec::Random { count, region, gap } => {
            let [x0, y0, x1, y1] = *region;
            if !(x0 < x1 && y0 < y1) {
                bail!("[micro.fill] region is not a proper rectangle: {region:?}");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut placed: Vec<Vec2> = Vec::with_capacity(*count);
            let min_dist = 2.0 * radius + gap;
            let mut attempts = 0usize;
            let budget = 1000 * (*count).max(1);
            while placed.len() < *count {
                attempts += 1;
                if attempts > budget {
                    bail!(
                        "[micro.fill] placed only {} of {count} disks after {budget} attempts; \
                         enlarge the region or lower the count",
                        placed.len()
                    );
                }
                let p = Vec2::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
                if !room.is_inside(p) {
                    continue;
                }
                if room.wall_segments().iter().any(|w| w.distance_to(p) < radius + gap) {
                    continue;
                }
                if placed.iter().any(|q| (*q - p).norm() < min_dist) {
                    continue;
                }
                placed.push(p);
            }
            placed
        }
    };
    for (i, p) in positions.iter().enumerate() {
        if !room.is_inside(*p) {
            bail!("[micro.fill] disk {i} at ({}, {}) is outside the room", p.x, p.y);
        }
    }
    Ok(positions)
}
