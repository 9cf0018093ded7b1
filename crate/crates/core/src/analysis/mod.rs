//! Bridges and diagnostics between the two models: turning disks into
//! densities, reference packings, jamming detection, velocity feasibility
//! and evacuation summaries.

mod evacuation;
mod feasibility;
mod jamming;
mod lattice;
mod raster;

pub use evacuation::{evacuation_metrics, EvacuationCurve, JamVerdictParams};
pub use feasibility::macro_feasibility_check;
pub use jamming::{is_locally_jammed, jamming_report, JammingReport};
pub use lattice::{generate_lattice, lattice_density, LatticeKind, LatticeSpec};
pub use raster::{normalize_density, rasterize_micro};
