use super::FieldError;
use crate::math::Vec3;

/// Saturation magnetization of iron, A/m (mu0 * Ms ≈ 2.15 T).
pub const IRON_SATURATION: f64 = 1.71e6;

/// Dimensions of the two-piece magnet, in meters.
///
/// The beam travels along +x. The gap is centred on the x axis: the wedge apex
/// of the top piece sits at `z = tip` and the flat face of the bottom piece at
/// `z = -bottom_top`. The entrance plane is `x = 0`, the exit plane `x = length`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdParams {
    /// Width of both pieces along y.
    pub width: f64,
    /// Height from the centre line to the top of the top piece.
    pub top_height: f64,
    /// Height from the centre line down to the bottom of the bottom piece.
    pub bottom_height: f64,
    /// Height from the centre line to where the wedge tip begins.
    pub tip_length: f64,
    /// Distance from the wedge apex to the centre line.
    pub tip: f64,
    /// Distance from the top of the bottom piece to the centre line.
    pub bottom_top: f64,
    /// Overall length along x.
    pub length: f64,
    /// Half opening angle of the wedge, radians.
    pub tip_half_angle: f64,
    /// Uniform magnetization of both pieces, A/m.
    pub magnetization: Vec3,
    /// Distance upstream of the entrance at which flights start.
    pub standoff: f64,
    /// When false the top piece is a plain box from `tip_length` to `top_height`.
    pub with_tip: bool,
}

impl Default for SgdParams {
    fn default() -> Self {
        const CM: f64 = 1e-2;
        Self {
            width: 1.0 * CM,
            top_height: 1.75 * CM,
            bottom_height: 1.5 * CM,
            tip_length: 0.75 * CM,
            tip: 0.05 * CM,
            bottom_top: 0.05 * CM,
            length: 3.5 * CM,
            tip_half_angle: std::f64::consts::FRAC_PI_4,
            magnetization: Vec3::new(0.0, 0.0, -IRON_SATURATION),
            standoff: 1.0 * CM,
            with_tip: true,
        }
    }
}

impl SgdParams {
    /// Full check, including a nonzero magnetization.
    pub fn validate(&self) -> Result<(), FieldError> {
        self.validate_shape()?;
        let m = self.magnetization.norm();
        if !(m.is_finite() && m > 0.0) {
            return Err(FieldError::InvalidGeometry(
                "magnetization must be nonzero".into(),
            ));
        }
        Ok(())
    }

    /// Dimensions and angles only; an unmagnetized device passes.
    pub fn validate_shape(&self) -> Result<(), FieldError> {
        if !crate::math::is_finite_vec(&self.magnetization) {
            return Err(FieldError::InvalidGeometry("magnetization is not finite".into()));
        }
        let lengths = [
            ("width", self.width),
            ("top_height", self.top_height),
            ("bottom_height", self.bottom_height),
            ("tip_length", self.tip_length),
            ("tip", self.tip),
            ("bottom_top", self.bottom_top),
            ("length", self.length),
            ("standoff", self.standoff),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(FieldError::InvalidGeometry(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.tip < self.tip_length && self.tip_length < self.top_height) {
            return Err(FieldError::InvalidGeometry(
                "need tip < tip_length < top_height".into(),
            ));
        }
        if self.bottom_top >= self.bottom_height {
            return Err(FieldError::InvalidGeometry(
                "need bottom_top < bottom_height".into(),
            ));
        }
        if self.tip <= -self.bottom_top {
            return Err(FieldError::InvalidGeometry(
                "wedge apex penetrates the bottom piece".into(),
            ));
        }
        let a = self.tip_half_angle;
        if !(a.is_finite() && a > 0.0 && a < std::f64::consts::FRAC_PI_2) {
            return Err(FieldError::InvalidGeometry(format!(
                "tip_half_angle must lie in (0, pi/2), got {a}"
            )));
        }
        Ok(())
    }

    pub fn is_unmagnetized(&self) -> bool {
        self.magnetization == crate::math::Vec3::zeros()
    }

    /// Height of the gap between apex and bottom face.
    pub fn gap(&self) -> f64 {
        self.tip + self.bottom_top
    }
}
