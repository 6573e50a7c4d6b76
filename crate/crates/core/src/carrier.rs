//! Translational motion of the particle carrying the moment.

use std::io::Write;

use crate::integrate::rk2_midpoint;
use crate::magnetostatics::{FieldError, FieldSample};
use crate::math::{is_finite_vec, Vec3};

/// Silver atom, kg.
pub const DEFAULT_MASS: f64 = 1.79e-25;
/// Exit plane to detector, m.
pub const DEFAULT_DETECTOR_DISTANCE: f64 = 0.10;

#[derive(Debug, thiserror::Error)]
pub enum CarrierError {
    #[error("carrier left the field corridor at ({:e}, {:e}, {:e})", .0.x, .0.y, .0.z)]
    OutOfBounds(Vec3),
    #[error("carrier is not moving towards the detector (vx = {0})")]
    NonForwardMotion(f64),
    #[error("invalid carrier state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Field(FieldError),
}

impl From<FieldError> for CarrierError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::OutOfBounds(p) => CarrierError::OutOfBounds(p),
            other => CarrierError::Field(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub mass: f64,
}

impl CarrierState {
    pub fn validate(&self) -> Result<(), CarrierError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(CarrierError::InvalidState(format!("mass must be positive, got {}", self.mass)));
        }
        if !is_finite_vec(&self.position) || !is_finite_vec(&self.velocity) {
            return Err(CarrierError::InvalidState("non-finite position or velocity".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForceModel {
    /// `(μ·∇)B + μ × (∇ × B)`.
    FullForce,
    /// z-gradient force plus the two transverse terms driven by `μ_z`.
    DriftAware,
    /// `μ_z ∂B_z/∂z` along z only, optionally damped by `exp(-(y/σ_y)²)`.
    ZOnly { suppression: bool, sigma_y: f64 },
}

impl ForceModel {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ForceModel::ZOnly { suppression: true, sigma_y } if !(sigma_y > 0.0 && sigma_y.is_finite()) => {
                Err(format!("sigma_y must be positive when suppression is on, got {sigma_y}"))
            }
            _ => Ok(()),
        }
    }
}

/// `exp(-(y/σ)²)`.
pub fn suppression_factor(y: f64, sigma_y: f64) -> f64 {
    (-(y / sigma_y).powi(2)).exp()
}

/// Force on moment `mu` at a point where the field is `sample`, `y` being the
/// lateral coordinate used by the suppression factor.
pub fn force(mu: &Vec3, sample: &FieldSample, y: f64, model: &ForceModel) -> Vec3 {
    let j = &sample.jacobian;
    match *model {
        ForceModel::FullForce => j * mu + mu.cross(&sample.curl()),
        ForceModel::DriftAware => {
            let (dbz_dz, dbz_dy, dby_dz) = (j[(2, 2)], j[(2, 1)], j[(1, 2)]);
            Vec3::new(0.0, mu.z * dbz_dy - mu.z * dby_dz, mu.z * dbz_dz)
        }
        ForceModel::ZOnly { suppression, sigma_y } => {
            let mut g = j[(2, 2)];
            if suppression {
                g *= suppression_factor(y, sigma_y);
            }
            Vec3::new(0.0, 0.0, mu.z * g)
        }
    }
}

/// Forces act only while `x_min <= x <= x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceGate {
    pub x_min: f64,
    pub x_max: f64,
}

impl ForceGate {
    pub fn open(&self, p: &Vec3) -> bool {
        p.x >= self.x_min && p.x <= self.x_max
    }
}

/// One midpoint RK2 step of `(x, v)` with `a = F(x)/m`; `force_at` is only
/// consulted inside the gate.
pub fn rk2_step<F>(carrier: &CarrierState, dt: f64, gate: &ForceGate, mut force_at: F) -> Result<CarrierState, CarrierError>
where
    F: FnMut(&Vec3) -> Result<Vec3, CarrierError>,
{
    if !(dt > 0.0) {
        return Err(CarrierError::InvalidState(format!("dt must be positive, got {dt}")));
    }
    let m = carrier.mass;
    let p = carrier.position;
    let v = carrier.velocity;
    let y = [p.x, p.y, p.z, v.x, v.y, v.z];
    let out = rk2_midpoint(&y, dt, |s| {
        let pos = Vec3::new(s[0], s[1], s[2]);
        let f = if gate.open(&pos) { force_at(&pos)? } else { Vec3::zeros() };
        Ok::<_, CarrierError>([s[3], s[4], s[5], f.x / m, f.y / m, f.z / m])
    })?;
    let next = CarrierState {
        position: Vec3::new(out[0], out[1], out[2]),
        velocity: Vec3::new(out[3], out[4], out[5]),
        mass: m,
    };
    if !is_finite_vec(&next.position) || !is_finite_vec(&next.velocity) {
        return Err(CarrierError::InvalidState("non-finite carrier state".into()));
    }
    Ok(next)
}

/// Ballistic deflection `(Δy, Δz)` accumulated over a further distance `d` along x.
pub fn project_to_detector(carrier: &CarrierState, d: f64) -> Result<(f64, f64), CarrierError> {
    let vx = carrier.velocity.x;
    if !(vx > 0.0) {
        return Err(CarrierError::NonForwardMotion(vx));
    }
    let t = d / vx;
    Ok((carrier.velocity.y * t, carrier.velocity.z * t))
}

/// Detector coordinates: exit-plane `(y, z)` plus the ballistic deflection.
pub fn detector_hit(carrier: &CarrierState, d: f64) -> Result<(f64, f64), CarrierError> {
    let (dy, dz) = project_to_detector(carrier, d)?;
    Ok((carrier.position.y + dy, carrier.position.z + dz))
}

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,vx,vy,vz,phi,theta,beta,Fy,Fz,drive_ratio";

/// One row of a trajectory dump; angles are lab-frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub phi: f64,
    pub theta: f64,
    pub beta: f64,
    pub force: Vec3,
    pub drive_ratio: f64,
}

pub fn write_trajectory_csv<W: Write>(mut w: W, rows: &[TrajectoryRow]) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.position.x,
            r.position.y,
            r.position.z,
            r.velocity.x,
            r.velocity.y,
            r.velocity.z,
            r.phi,
            r.theta,
            r.beta,
            r.force.y,
            r.force.z,
            r.drive_ratio
        )?;
    }
    w.flush()
}
