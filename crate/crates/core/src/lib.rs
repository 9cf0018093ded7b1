//! Crowd motion with hard congestion constraints.
//!
//! Two models of the same evacuation problem share one geometry layer:
//!
//! * a microscopic one, where people are rigid disks and each time step
//!   projects the desired move onto the set of non-overlapping
//!   configurations, and
//! * a macroscopic one, where a density field is transported by the desired
//!   velocity and then pushed back under the saturation ceiling by a
//!   stochastic rearrangement.
//!
//! Everything is generic over the scalar type `S` ([`Real`], implemented for
//! `f32` and `f64`); type parameters default to `f64`, which is what the
//! binaries use.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod macroscale;
pub mod micro;
pub mod real;
pub mod vec2;

pub use error::{Error, Result};
pub use real::Real;
pub use vec2::Vec2;
