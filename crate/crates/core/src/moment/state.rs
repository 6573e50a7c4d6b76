use crate::math::{direction, rot_x_quarter_inv, Vec3};

use super::{DynamicsError, TorqueModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Lab,
    /// Coordinates rotated by +π/2 about x; lab ±z sits on this frame's equator.
    RotatedX90,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDirection {
    ToRotated,
    ToLab,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub phi: f64,
    pub theta: f64,
    pub phi_dot: f64,
    pub theta_dot: f64,
    pub frame: Frame,
}

impl SpinState {
    /// Lab-frame state at rest.
    pub fn at_rest(phi: f64, theta: f64) -> Self {
        Self { phi, theta, phi_dot: 0.0, theta_dot: 0.0, frame: Frame::Lab }
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.theta.is_finite() && self.phi_dot.is_finite() && self.theta_dot.is_finite()
    }

    /// Unit direction in the state's own frame.
    pub fn frame_direction(&self) -> Vec3 {
        direction(self.phi, self.theta)
    }

    /// Unit direction in lab coordinates regardless of working frame.
    pub fn lab_direction(&self) -> Vec3 {
        match self.frame {
            Frame::Lab => self.frame_direction(),
            Frame::RotatedX90 => rot_x_quarter_inv(&self.frame_direction()),
        }
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.phi, self.theta, self.phi_dot, self.theta_dot]
    }

    pub(crate) fn from_array(a: [f64; 4], frame: Frame) -> Self {
        Self { phi: a[0], theta: a[1], phi_dot: a[2], theta_dot: a[3], frame }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentParams {
    /// Moment magnitude, J/T.
    pub mu: f64,
    /// Rod moment of inertia, kg·m².
    pub inertia: f64,
    /// Linear angular damping, N·m·s.
    pub damping: f64,
    pub torque_model: TorqueModel,
}

impl MomentParams {
    pub const DEFAULT_MU: f64 = 9.274e-24;
    pub const DEFAULT_INERTIA: f64 = 1.0e-38;
    pub const DEFAULT_DAMPING: f64 = 5.0e-32;

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidParams(m));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.inertia > 0.0 && self.inertia.is_finite()) {
            return bad(format!("inertia must be positive, got {}", self.inertia));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return bad(format!("damping must be non-negative, got {}", self.damping));
        }
        self.torque_model.validate()
    }
}

impl Default for MomentParams {
    fn default() -> Self {
        Self {
            mu: Self::DEFAULT_MU,
            inertia: Self::DEFAULT_INERTIA,
            damping: Self::DEFAULT_DAMPING,
            torque_model: TorqueModel::default(),
        }
    }
}
