//! Library half of the `crowdsim` binary: scenario files, run
//! orchestration, output emission, and the run-to-run comparison pipeline.
//! The binary is a thin argument parser over these modules, so tests and
//! downstream tools can drive runs in-process.

pub mod compare;
pub mod output;
pub mod run;
pub mod scenario;
