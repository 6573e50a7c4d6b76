//! Rotational dynamics of the moment orientation.
//!
//! The moment is a unit rod with orientation `(phi, theta)`: `phi` is the polar
//! angle off +z and `theta` the azimuth off +x. Its equations of motion come from
//! `I α = τ` with `τ = mu |B| TMM(β) n̂ - b ω`. The azimuthal equation is singular
//! at the poles, so the stepper switches to a working frame rotated a quarter turn
//! about x whenever the moment gets close to one.

mod eom;
mod state;
mod stepper;
mod torque;

pub use eom::{
    angular_acceleration, angular_velocity, beta, beta_of_direction, eom_rhs, eom_rhs_cartesian_rows,
    torque_axis, total_torque, EPS_AXIS, EPS_SING,
};
pub use state::{Frame, FrameDirection, MomentParams, SpinState};
pub use stepper::{evolve, rk4_step, rk4_step_with, rotate_frame, FRAME_SWITCH_SIN, PHI_CLAMP_TOL};
pub use torque::{torque_magnitude, TorqueModel, TorqueTable};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("zero magnetic field, beta is undefined")]
    ZeroField,
    #[error("moment is parallel to the field, torque axis is undefined")]
    DegenerateAxis,
    #[error("orientation phi = {phi} is too close to a pole of the working frame")]
    SingularOrientation { phi: f64 },
    #[error("step rejected: {0}")]
    StepRejected(String),
    #[error("invalid moment parameters: {0}")]
    InvalidParams(String),
    #[error("invalid torque table: {0}")]
    InvalidTorqueTable(String),
}
