use std::f64::consts::{PI, TAU};

use crate::integrate::rk4;
use crate::math::{angles_of, rot_x_quarter, rot_x_quarter_inv, wrap_angle, Vec3};

use super::eom::eom_rhs;
use super::{DynamicsError, Frame, FrameDirection, MomentParams, SpinState};

/// The stepper leaves a frame once `|sin phi|` drops below this.
pub const FRAME_SWITCH_SIN: f64 = 0.25;
/// Largest pole overshoot that is reflected back instead of rejected.
pub const PHI_CLAMP_TOL: f64 = 1e-9;

fn velocity_of(spin: &SpinState) -> Vec3 {
    let (sp, cp) = spin.phi.sin_cos();
    let (st, ct) = spin.theta.sin_cos();
    let e_phi = Vec3::new(cp * ct, cp * st, -sp);
    let e_theta = Vec3::new(-st, ct, 0.0);
    spin.phi_dot * e_phi + spin.theta_dot * sp * e_theta
}

fn state_from(dir: &Vec3, vel: &Vec3, frame: Frame) -> SpinState {
    let (phi, theta) = angles_of(dir);
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let e_phi = Vec3::new(cp * ct, cp * st, -sp);
    let e_theta = Vec3::new(-st, ct, 0.0);
    // at a pole the azimuthal rate has no meaning; keep it finite
    let theta_dot = if sp > 0.0 { vel.dot(&e_theta) / sp } else { 0.0 };
    SpinState { phi, theta, phi_dot: vel.dot(&e_phi), theta_dot, frame }
}

/// Re-express the state in the other working frame.
///
/// Converting into a frame where the moment sits exactly on a pole loses the
/// azimuthal rate; callers only switch towards the frame where it is equatorial.
pub fn rotate_frame(spin: &SpinState, dir: FrameDirection) -> SpinState {
    let (d, v) = (spin.frame_direction(), velocity_of(spin));
    match (dir, spin.frame) {
        (FrameDirection::ToRotated, Frame::Lab) => state_from(&rot_x_quarter(&d), &rot_x_quarter(&v), Frame::RotatedX90),
        (FrameDirection::ToLab, Frame::RotatedX90) => state_from(&rot_x_quarter_inv(&d), &rot_x_quarter_inv(&v), Frame::Lab),
        _ => *spin,
    }
}

fn field_in_frame(b_lab: &Vec3, frame: Frame) -> Vec3 {
    match frame {
        Frame::Lab => *b_lab,
        Frame::RotatedX90 => rot_x_quarter(b_lab),
    }
}

/// Wrap θ and reflect tiny φ overshoots across the pole.
fn normalize(mut s: SpinState) -> Result<SpinState, DynamicsError> {
    if !s.is_finite() {
        return Err(DynamicsError::StepRejected("non-finite spin state".into()));
    }
    let over = if s.phi < 0.0 {
        -s.phi
    } else if s.phi > PI {
        s.phi - PI
    } else {
        0.0
    };
    if over > PHI_CLAMP_TOL {
        return Err(DynamicsError::StepRejected(format!("phi = {} left [0, pi]", s.phi)));
    }
    if over > 0.0 {
        s.phi = if s.phi < 0.0 { -s.phi } else { TAU - s.phi };
        s.theta += PI;
        s.phi_dot = -s.phi_dot;
    }
    s.theta = wrap_angle(s.theta);
    Ok(s)
}

/// One RK4 step with a caller-supplied right-hand side `(φ̈, θ̈) = f(state)`.
pub fn rk4_step_with(
    spin: &SpinState,
    dt: f64,
    mut rhs: impl FnMut(&SpinState) -> Result<(f64, f64), DynamicsError>,
) -> Result<SpinState, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::StepRejected(format!("dt must be positive, got {dt}")));
    }
    let frame = spin.frame;
    let y = rk4(&spin.to_array(), dt, |y| {
        let s = SpinState::from_array(*y, frame);
        let (pdd, tdd) = rhs(&s)?;
        Ok([y[2], y[3], pdd, tdd])
    })?;
    normalize(SpinState::from_array(y, frame))
}

/// One RK4 step in the state's current frame under a lab field held fixed.
pub fn rk4_step(spin: &SpinState, b_lab: &Vec3, params: &MomentParams, dt: f64) -> Result<SpinState, DynamicsError> {
    let b = field_in_frame(b_lab, spin.frame);
    rk4_step_with(spin, dt, |s| eom_rhs(s, &b, params))
}

/// Advance `steps` RK4 steps, hopping frames whenever the moment nears a pole.
pub fn evolve(
    spin: &SpinState,
    b_lab: &Vec3,
    params: &MomentParams,
    dt: f64,
    steps: usize,
) -> Result<SpinState, DynamicsError> {
    let mut s = *spin;
    for _ in 0..steps {
        if s.phi.sin().abs() < FRAME_SWITCH_SIN {
            let to = match s.frame {
                Frame::Lab => FrameDirection::ToRotated,
                Frame::RotatedX90 => FrameDirection::ToLab,
            };
            s = rotate_frame(&s, to);
        }
        s = rk4_step(&s, b_lab, params, dt)?;
    }
    Ok(s)
}
