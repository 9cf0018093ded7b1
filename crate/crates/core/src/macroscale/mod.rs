//! Macroscopic model: densities on the room grid, moved by a velocity
//! field and held under the unit ceiling by a stochastic correction.

mod density;
mod project;
mod sim;
mod transport;

pub use density::DensityGrid;
pub use project::{
    pressure_from_odometer, project_components, stochastic_project, Odometer, ProjectionParams,
};
pub use sim::{density_dependent_velocity, MacroParams, MacroSim, TwoPopulationSim};
pub use transport::transport_density;
