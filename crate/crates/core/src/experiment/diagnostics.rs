use serde::Serialize;

use crate::magnetostatics::{FieldError, FieldSample, FieldSource, SgdParams};
use crate::math::Vec3;

/// `|B_x| / |B_z|`; infinite when only B_z vanishes, zero in zero field.
pub fn drive_ratio(sample: &FieldSample) -> f64 {
    let (bx, bz) = (sample.b.x.abs(), sample.b.z.abs());
    if bz == 0.0 {
        if bx == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        bx / bz
    }
}

/// `(x, ratio)` along the beam axis from the start plane to the entrance, `n ≥ 2` points.
pub fn drive_profile(field: &FieldSource, params: &SgdParams, n: usize) -> Result<Vec<(f64, f64)>, FieldError> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let x = -params.standoff + params.standoff * i as f64 / (n - 1) as f64;
            let s = field.sample(&Vec3::new(x, 0.0, 0.0))?;
            Ok((x, drive_ratio(&s)))
        })
        .collect()
}

/// Half-width of the central lobe of `∂B_z/∂z` along +y at `(L/2, ·, 0)`:
/// the first sign change, located by scanning then bisection. `None` if the
/// sign never changes within `y_max`.
pub fn measure_sigma_y(field: &FieldSource, params: &SgdParams, y_max: f64) -> Result<Option<f64>, FieldError> {
    let x = 0.5 * params.length;
    let g = |y: f64| -> Result<f64, FieldError> { Ok(field.sample(&Vec3::new(x, y, 0.0))?.jacobian[(2, 2)]) };
    let g0 = g(0.0)?;
    if g0 == 0.0 {
        return Ok(None);
    }
    let n = 80;
    let mut lo = 0.0;
    for i in 1..=n {
        let y = y_max * i as f64 / n as f64;
        if g(y)?.signum() != g0.signum() {
            let mut hi = y;
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if g(mid)?.signum() == g0.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        lo = y;
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxCheckInput {
    /// Device field at the moment, T.
    pub b_sg: f64,
    /// Moment, J/T.
    pub mu: f64,
    /// Permeability used by the estimate, T·m/A.
    pub mu0: f64,
    /// Radius of the moment's volume, m.
    pub radius: f64,
    /// Loop area for the flux estimate, m².
    pub area: f64,
    /// Entry time scale, s.
    pub t_enter: f64,
    /// Residual field of the moment, T.
    pub b_r: f64,
}

impl Default for FluxCheckInput {
    /// Order-of-magnitude values: 1 T device field, 1e-24 J/T moment,
    /// μ0 ~ 1e-7, radius 1e-15 m.
    fn default() -> Self {
        Self { b_sg: 1.0, mu: 1e-24, mu0: 1e-7, radius: 1e-15, area: 1e-30, t_enter: 1e-6, b_r: 1.0 }
    }
}

impl FluxCheckInput {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("b_sg", self.b_sg),
            ("mu", self.mu),
            ("mu0", self.mu0),
            ("radius", self.radius),
            ("area", self.area),
            ("t_enter", self.t_enter),
            ("b_r", self.b_r),
        ];
        for (k, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{k} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FluxVerdict {
    IgnoreBackReaction,
    BackReactionMatters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxCheck {
    pub input: FluxCheckInput,
    pub volume: f64,
    /// Field of the moment itself, `mu * mu0 / V`, T.
    pub b_qs: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub verdict: FluxVerdict,
}

pub const FLUX_DOMINANCE_THRESHOLD: f64 = 1e3;

/// Compares the moment's own field with the device field.
pub fn flux_dominance_check(input: &FluxCheckInput) -> FluxCheck {
    let volume = input.volume();
    let b_qs = input.mu * input.mu0 / volume;
    let ratio = b_qs / input.b_sg;
    let verdict = if ratio > FLUX_DOMINANCE_THRESHOLD {
        FluxVerdict::IgnoreBackReaction
    } else {
        FluxVerdict::BackReactionMatters
    };
    FluxCheck { input: *input, volume, b_qs, ratio, threshold: FLUX_DOMINANCE_THRESHOLD, verdict }
}
