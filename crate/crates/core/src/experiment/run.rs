use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::carrier::{detector_hit, force, rk2_step, CarrierError, CarrierState, ForceGate, TrajectoryRow};
use crate::magnetostatics::{FieldError, FieldSample, FieldSource};
use crate::math::{angles_of, Vec3};
use crate::moment::{beta_of_direction, evolve, DynamicsError};

use super::diagnostics::drive_ratio;
use super::{InitialConditions, SimConfig};

/// Half-width of the undecided band around β = π/2.
pub const EPS_CLASS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Up,
    Down,
    Unresolved,
}

impl Classification {
    pub fn of_beta(beta: f64) -> Self {
        if beta < FRAC_PI_2 - EPS_CLASS {
            Classification::Up
        } else if beta > FRAC_PI_2 + EPS_CLASS {
            Classification::Down
        } else {
            Classification::Unresolved
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Up => "up",
            Classification::Down => "down",
            Classification::Unresolved => "unresolved",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classification {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "up" => Ok(Classification::Up),
            "down" => Ok(Classification::Down),
            "unresolved" => Ok(Classification::Unresolved),
            other => Err(format!("unknown class `{other}`")),
        }
    }
}

/// Why a run did not finish cleanly. Flagged runs are kept but left out of
/// the flip statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RunFlag {
    OutOfBounds,
    StepRejected,
    SingularOrientation,
    NonForwardMotion,
    FieldFailure,
    StepLimit,
}

impl RunFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunFlag::OutOfBounds => "out_of_bounds",
            RunFlag::StepRejected => "step_rejected",
            RunFlag::SingularOrientation => "singular_orientation",
            RunFlag::NonForwardMotion => "non_forward_motion",
            RunFlag::FieldFailure => "field_failure",
            RunFlag::StepLimit => "step_limit",
        }
    }
}

impl FromStr for RunFlag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [
            RunFlag::OutOfBounds,
            RunFlag::StepRejected,
            RunFlag::SingularOrientation,
            RunFlag::NonForwardMotion,
            RunFlag::FieldFailure,
            RunFlag::StepLimit,
        ]
        .into_iter()
        .find(|f| f.as_str() == s)
        .ok_or_else(|| format!("unknown flag `{s}`"))
    }
}

impl From<&FieldError> for RunFlag {
    fn from(e: &FieldError) -> Self {
        match e {
            FieldError::OutOfBounds(_) => RunFlag::OutOfBounds,
            _ => RunFlag::FieldFailure,
        }
    }
}

impl From<&DynamicsError> for RunFlag {
    fn from(e: &DynamicsError) -> Self {
        match e {
            DynamicsError::SingularOrientation { .. } => RunFlag::SingularOrientation,
            _ => RunFlag::StepRejected,
        }
    }
}

impl From<&CarrierError> for RunFlag {
    fn from(e: &CarrierError) -> Self {
        match e {
            CarrierError::OutOfBounds(_) => RunFlag::OutOfBounds,
            CarrierError::NonForwardMotion(_) => RunFlag::NonForwardMotion,
            CarrierError::Field(f) => f.into(),
            CarrierError::InvalidState(_) => RunFlag::StepRejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_index: usize,
    pub phi_i: f64,
    pub theta_i: f64,
    /// β against the field at the start point (`phi_i` where that field is zero).
    pub initial_beta: f64,
    /// β against the field at the exit point.
    pub final_beta: f64,
    pub classification: Classification,
    pub exit_state: CarrierState,
    /// Detector `(y, z)`; NaN when the carrier never reached the exit moving forward.
    pub detector_hit: (f64, f64),
    pub max_drive_ratio: f64,
    /// Largest `|(∇×B)_x|` seen along the path, T/m.
    pub max_curl_x: f64,
    pub flags: Vec<RunFlag>,
}

impl RunResult {
    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    /// Hemisphere the moment started in: `phi_i ≤ π/2` counts as up.
    pub fn initial_class(&self) -> Classification {
        if self.phi_i <= FRAC_PI_2 {
            Classification::Up
        } else {
            Classification::Down
        }
    }

    pub fn flipped(&self) -> bool {
        self.classification != Classification::Unresolved && self.classification != self.initial_class()
    }
}

/// β of a lab direction against `b`, falling back to the start-plane field axis in zero field.
fn beta_against(dir: &Vec3, b: &Vec3, config: &SimConfig) -> f64 {
    match beta_of_direction(dir, b) {
        Ok(beta) => beta,
        Err(_) => {
            let axis = if config.geometry.magnetization.z > 0.0 { -Vec3::z() } else { Vec3::z() };
            beta_of_direction(dir, &axis).expect("unit axis")
        }
    }
}

pub fn run_single(ic: &InitialConditions, config: &SimConfig, field: &FieldSource) -> RunResult {
    run_impl(ic, config, field, None)
}

/// [`run_single`] that also records every `decimation`-th slow step.
pub fn run_single_traced(
    ic: &InitialConditions,
    config: &SimConfig,
    field: &FieldSource,
    decimation: usize,
) -> (RunResult, Vec<TrajectoryRow>) {
    let mut rows = Vec::new();
    let r = run_impl(ic, config, field, Some((decimation.max(1), &mut rows)));
    (r, rows)
}

fn run_impl(
    ic: &InitialConditions,
    config: &SimConfig,
    field: &FieldSource,
    mut trace: Option<(usize, &mut Vec<TrajectoryRow>)>,
) -> RunResult {
    let length = config.geometry.length;
    let gate = ForceGate { x_min: 0.0, x_max: length };
    let dt_slow = config.dt_slow();
    let mut spin = ic.spin;
    let mut carrier = ic.carrier;
    let mut flags = Vec::new();
    let mut max_drive = 0.0f64;
    let mut max_curl_x = 0.0f64;
    let mut last_b = None;
    let mut t = 0.0;

    let path = length - carrier.position.x;
    let step_limit = if carrier.velocity.x > 0.0 {
        (10.0 * path / (carrier.velocity.x * dt_slow)).ceil() as usize + 10
    } else {
        0
    };
    if carrier.velocity.x <= 0.0 {
        flags.push(RunFlag::NonForwardMotion);
    }

    let mut initial_beta = ic.phi_i;
    let mut step = 0usize;
    while flags.is_empty() && carrier.position.x < length {
        if step >= step_limit {
            flags.push(RunFlag::StepLimit);
            break;
        }
        let sample = match field.sample(&carrier.position) {
            Ok(s) => s,
            Err(e) => {
                flags.push((&e).into());
                break;
            }
        };
        if step == 0 && sample.b.norm() > 0.0 {
            initial_beta = beta_against(&spin.lab_direction(), &sample.b, config);
        }
        last_b = Some(sample.b);
        max_drive = max_drive.max(drive_ratio(&sample));
        max_curl_x = max_curl_x.max(sample.curl().x.abs());

        spin = match evolve(&spin, &sample.b, &config.moment, config.dt_fast, config.substeps) {
            Ok(s) => s,
            Err(e) => {
                flags.push((&e).into());
                break;
            }
        };
        let mu = config.moment.mu * spin.lab_direction();
        let start = carrier.position;
        let force_at = |p: &Vec3| -> Result<Vec3, CarrierError> {
            let s: FieldSample = if *p == start { sample } else { field.sample(p)? };
            Ok(force(&mu, &s, p.y, &config.force_model))
        };
        if let Some((every, rows)) = trace.as_mut() {
            if step.is_multiple_of(*every) {
                let f = if gate.open(&start) { force(&mu, &sample, start.y, &config.force_model) } else { Vec3::zeros() };
                let (phi, theta) = angles_of(&spin.lab_direction());
                rows.push(TrajectoryRow {
                    t,
                    position: start,
                    velocity: carrier.velocity,
                    phi,
                    theta,
                    beta: beta_against(&spin.lab_direction(), &sample.b, config),
                    force: f,
                    drive_ratio: drive_ratio(&sample),
                });
            }
        }
        carrier = match rk2_step(&carrier, dt_slow, &gate, force_at) {
            Ok(c) => c,
            Err(e) => {
                flags.push((&e).into());
                break;
            }
        };
        t += dt_slow;
        step += 1;
    }

    // The moment last saw the field one slow step upstream. Give it one more
    // block of substeps at the end point so it is judged against the field it
    // actually sits in.
    let end_b = match field.sample(&carrier.position) {
        Ok(s) => {
            if flags.is_empty() {
                match evolve(&spin, &s.b, &config.moment, config.dt_fast, config.substeps) {
                    Ok(next) => spin = next,
                    Err(e) => flags.push((&e).into()),
                }
            }
            Some(s.b)
        }
        Err(_) => last_b,
    };
    let final_beta = beta_against(&spin.lab_direction(), &end_b.unwrap_or_else(Vec3::zeros), config);
    let detector = if flags.is_empty() {
        match detector_hit(&carrier, config.detector_distance) {
            Ok(hit) => hit,
            Err(e) => {
                flags.push((&e).into());
                (f64::NAN, f64::NAN)
            }
        }
    } else {
        (f64::NAN, f64::NAN)
    };
    flags.sort();
    flags.dedup();
    RunResult {
        run_index: ic.run_index,
        phi_i: ic.phi_i,
        theta_i: ic.theta_i,
        initial_beta,
        final_beta,
        classification: Classification::of_beta(final_beta),
        exit_state: carrier,
        detector_hit: detector,
        max_drive_ratio: max_drive,
        max_curl_x,
        flags,
    }
}
