//! Semi-classical spin dynamics in a Stern-Gerlach device.
//!
//! The crate is split along the physics:
//!
//! * [`magnetostatics`] builds the two-piece magnet as a set of current-carrying
//!   surface panels and evaluates B and its Jacobian by Biot-Savart quadrature,
//!   optionally through a precomputed [`magnetostatics::FieldGrid`].
//! * [`moment`] evolves the moment orientation `(phi, theta)` under a pluggable
//!   torque magnitude model with damping, using RK4.
//! * [`carrier`] moves the particle that carries the moment (RK2) and projects
//!   it onto a detector plane.
//! * [`experiment`] nests the two integrators, samples initial conditions,
//!   runs seeded ensembles in parallel and reduces them to flip statistics.
//! * [`config`] is the strict JSON configuration shared by the CLI.
//!
//! All quantities are SI internally.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carrier;
pub mod config;
pub mod experiment;
pub mod integrate;
pub mod magnetostatics;
pub mod math;
pub mod moment;

pub use math::{Mat3, Vec3, MU0};
