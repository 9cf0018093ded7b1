//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("invalid room: {0}")]
    InvalidRoom(String),

    #[error("grid resolution must be positive, got {0}")]
    BadResolution(f64),

    #[error("grid has no exit cell")]
    NoExitCell,

    #[error("disks {i} and {j} have coincident centers")]
    CoincidentCenters { i: usize, j: usize },

    #[error("disk {i} center lies on a wall segment")]
    CenterOnWall { i: usize },

    #[error("disk {i} overlaps a neighbor beyond tolerance")]
    OverlappingNeighbor { i: usize },

    #[error(
        "Uzawa solver did not converge after {iterations} iterations \
         (constraint violation {violation:e}, complementarity {complementarity:e})"
    )]
    UzawaNonConvergence {
        iterations: usize,
        violation: f64,
        complementarity: f64,
    },

    #[error("prox-regularity bound needs N >= 2, got {0}")]
    ProxRegularityN(usize),

    #[error("CFL violation during transport: |U|*tau = {displacement} exceeds cell size {cell}")]
    CflViolation { displacement: f64, cell: f64 },

    #[error("stochastic projection stalled: walker exceeded {0} steps with mass left over")]
    ProjectionStalled(usize),

    #[error("density-dependent speed factor left [0, 1]: alpha({rho}) = {alpha}")]
    BadSpeedFactor { rho: f64, alpha: f64 },

    #[error("reference density must be positive, got {0}")]
    BadReferenceDensity(f64),

    #[error("no frames to analyze")]
    EmptyRun,

    #[error("desired-velocity field {0} missing")]
    MissingField(usize),

    #[error("infeasible initial configuration: {0}")]
    InfeasibleInitial(String),
}

pub type Result<T> = std::result::Result<T, Error>;
