//! Microscopic model: rigid disks, contact constraints, projection stepping.

mod behavior;
mod contact;
mod sim;
mod solver;

pub use behavior::{
    assign_desired, bypass, decelerate, neighbor_set, BehaviorParams, Strategy, TypeBehavior,
};
pub use contact::{
    active_constraints, gap_and_gradient, wall_gap_and_gradient, Contact, ContactPair,
};
pub use sim::{prox_regularity_bound, MicroParams, MicroSim, StepReport};
pub use solver::{
    disk_pressure_sums, pressures, project_step_uzawa, SaddleSolution, SolverParams,
};
