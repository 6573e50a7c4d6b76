//! Small shared numeric helpers.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Vacuum permeability, T·m/A.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

pub fn is_finite_vec(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Curl of a field from its Jacobian, `jac[(i, j)] = dB_i/dx_j`.
pub fn curl(jac: &Mat3) -> Vec3 {
    Vec3::new(
        jac[(2, 1)] - jac[(1, 2)],
        jac[(0, 2)] - jac[(2, 0)],
        jac[(1, 0)] - jac[(0, 1)],
    )
}

pub fn divergence(jac: &Mat3) -> f64 {
    jac.trace()
}

/// Rotation about +x by a quarter turn: (x, y, z) -> (x, -z, y).
pub fn rot_x_quarter(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, -v.z, v.y)
}

/// Inverse of [`rot_x_quarter`].
pub fn rot_x_quarter_inv(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, v.z, -v.y)
}

/// Unit direction for polar angle `phi` off +z and azimuth `theta` off +x.
pub fn direction(phi: f64, theta: f64) -> Vec3 {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    Vec3::new(sp * ct, sp * st, cp)
}

/// Inverse of [`direction`]; `theta` is wrapped to `[0, 2π)`.
pub fn angles_of(dir: &Vec3) -> (f64, f64) {
    let n = dir.norm();
    let phi = (dir.z / n).clamp(-1.0, 1.0).acos();
    let theta = wrap_angle(dir.y.atan2(dir.x));
    (phi, theta)
}

pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = a.rem_euclid(tau);
    // rem_euclid can round up to exactly tau for tiny negative inputs
    if w >= tau {
        0.0
    } else {
        w
    }
}
