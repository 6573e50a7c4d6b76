use super::{unpack, FieldError, FieldEvaluator, FieldGrid};
use crate::math::{curl, divergence, Mat3, Vec3};

/// How a [`FieldSample`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Grid,
    Direct { inside_material: bool },
    /// No magnet present.
    Vacuum,
}

/// B and its spatial Jacobian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub b: Vec3,
    /// `jacobian[(i, j)] = dB_i/dx_j`, T/m.
    pub jacobian: Mat3,
    pub mode: SampleMode,
}

impl FieldSample {
    pub fn divergence(&self) -> f64 {
        divergence(&self.jacobian)
    }

    pub fn curl(&self) -> Vec3 {
        curl(&self.jacobian)
    }

    pub fn uniform(b: Vec3) -> Self {
        Self {
            b,
            jacobian: Mat3::zeros(),
            mode: SampleMode::Direct {
                inside_material: false,
            },
        }
    }
}

/// Uniform read access to the device field for the dynamics code.
#[derive(Debug, Clone)]
pub enum FieldSource {
    Grid(FieldGrid),
    Direct(FieldEvaluator),
    /// Zero field everywhere (unmagnetized device).
    Vacuum,
}

impl FieldSource {
    pub fn sample(&self, p: &Vec3) -> Result<FieldSample, FieldError> {
        match self {
            FieldSource::Grid(g) => {
                let (b, jacobian) = unpack(&g.interpolate(p)?);
                Ok(FieldSample {
                    b,
                    jacobian,
                    mode: SampleMode::Grid,
                })
            }
            FieldSource::Direct(ev) => {
                let (b, jacobian) = ev.field_and_jacobian(p)?;
                Ok(FieldSample {
                    b,
                    jacobian,
                    mode: SampleMode::Direct {
                        inside_material: ev.geometry.inside_material(p),
                    },
                })
            }
            FieldSource::Vacuum => {
                if !crate::math::is_finite_vec(p) {
                    return Err(FieldError::NonFinitePoint);
                }
                Ok(FieldSample {
                    b: Vec3::zeros(),
                    jacobian: Mat3::zeros(),
                    mode: SampleMode::Vacuum,
                })
            }
        }
    }

    /// Field magnitude only; cheaper than [`Self::sample`] in direct mode.
    pub fn field(&self, p: &Vec3) -> Result<Vec3, FieldError> {
        match self {
            FieldSource::Direct(ev) => ev.field(p),
            _ => self.sample(p).map(|s| s.b),
        }
    }
}
