use crate::math::Vec3;

use super::{torque_magnitude, DynamicsError, MomentParams, SpinState};

/// Below this `|sin phi|` the azimuthal equation is refused.
pub const EPS_SING: f64 = 1e-3;
/// Relative `|μ̂ × B̂|` under which the torque axis counts as undefined.
pub const EPS_AXIS: f64 = 1e-15;

/// Angle between a unit direction and the field, in `[0, π]`.
pub fn beta_of_direction(dir: &Vec3, b: &Vec3) -> Result<f64, DynamicsError> {
    if b.norm_squared() == 0.0 {
        return Err(DynamicsError::ZeroField);
    }
    // atan2 keeps full precision near 0 and π, unlike acos
    Ok(dir.cross(b).norm().atan2(dir.dot(b)))
}

/// β for a state and a field given in the state's own frame.
pub fn beta(spin: &SpinState, b: &Vec3) -> Result<f64, DynamicsError> {
    beta_of_direction(&spin.frame_direction(), b)
}

pub fn torque_axis(spin_dir: &Vec3, b: &Vec3) -> Result<Vec3, DynamicsError> {
    let c = spin_dir.cross(b);
    let n = c.norm();
    if !(n > EPS_AXIS * spin_dir.norm() * b.norm()) {
        return Err(DynamicsError::DegenerateAxis);
    }
    Ok(c / n)
}

fn tangent_basis(phi: f64, theta: f64) -> (Vec3, Vec3) {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    // ∂r̂/∂φ and the unit azimuthal direction
    (Vec3::new(cp * ct, cp * st, -sp), Vec3::new(-st, ct, 0.0))
}

/// ω = r̂ × ṙ̂ for a unit rod.
pub fn angular_velocity(spin: &SpinState) -> Vec3 {
    let (e_phi, e_theta) = tangent_basis(spin.phi, spin.theta);
    spin.phi_dot * e_theta - spin.theta_dot * spin.phi.sin() * e_phi
}

/// Time derivative of [`angular_velocity`] for given second derivatives.
pub fn angular_acceleration(spin: &SpinState, phi_ddot: f64, theta_ddot: f64) -> Vec3 {
    let (sp, cp) = spin.phi.sin_cos();
    let (st, ct) = spin.theta.sin_cos();
    let (pd, td) = (spin.phi_dot, spin.theta_dot);
    let spcp = sp * cp;
    Vec3::new(
        -phi_ddot * st - theta_ddot * spcp * ct - 2.0 * pd * td * cp * cp * ct + td * td * spcp * st,
        phi_ddot * ct - theta_ddot * spcp * st - 2.0 * pd * td * cp * cp * st - td * td * spcp * ct,
        theta_ddot * sp * sp + 2.0 * td * pd * spcp,
    )
}

/// Field torque plus damping, with `b` in the state's own frame.
pub fn total_torque(spin: &SpinState, b: &Vec3, params: &MomentParams) -> Vec3 {
    let dir = spin.frame_direction();
    let bn = b.norm();
    let field = if bn > 0.0 {
        match torque_axis(&dir, b) {
            Ok(n) => {
                let beta = beta_of_direction(&dir, b).expect("nonzero field");
                params.mu * bn * torque_magnitude(&params.torque_model, beta) * n
            }
            // μ ∥ B: the torque magnitude vanishes there, so drop the term
            Err(_) => Vec3::zeros(),
        }
    } else {
        Vec3::zeros()
    };
    field - params.damping * angular_velocity(spin)
}

fn check_singular(spin: &SpinState) -> Result<(), DynamicsError> {
    if !spin.is_finite() {
        return Err(DynamicsError::StepRejected("non-finite spin state".into()));
    }
    if spin.phi.sin().abs() < EPS_SING {
        return Err(DynamicsError::SingularOrientation { phi: spin.phi });
    }
    Ok(())
}

/// `(φ̈, θ̈)` solving `I α = τ` projected on the tangent plane.
pub fn eom_rhs(spin: &SpinState, b: &Vec3, params: &MomentParams) -> Result<(f64, f64), DynamicsError> {
    check_singular(spin)?;
    let tau = total_torque(spin, b, params) / params.inertia;
    let (e_phi, e_theta) = tangent_basis(spin.phi, spin.theta);
    let (sp, cp) = spin.phi.sin_cos();
    let (pd, td) = (spin.phi_dot, spin.theta_dot);
    let phi_ddot = td * td * sp * cp + tau.dot(&e_theta);
    let theta_ddot = -(tau.dot(&e_phi) + 2.0 * td * pd * cp) / sp;
    Ok((phi_ddot, theta_ddot))
}

/// Same system solved from the x and y rows of `I α = τ` as a 2×2 linear system.
///
/// That matrix has determinant `sin φ cos φ`, so this form also fails on the
/// equator; it exists to cross-check [`eom_rhs`].
pub fn eom_rhs_cartesian_rows(
    spin: &SpinState,
    b: &Vec3,
    params: &MomentParams,
) -> Result<(f64, f64), DynamicsError> {
    check_singular(spin)?;
    let (sp, cp) = spin.phi.sin_cos();
    let (st, ct) = spin.theta.sin_cos();
    let det = sp * cp;
    if det.abs() < EPS_SING {
        return Err(DynamicsError::SingularOrientation { phi: spin.phi });
    }
    let tau = total_torque(spin, b, params) / params.inertia;
    // α with the second derivatives zeroed holds the velocity-only terms
    let rest = angular_acceleration(spin, 0.0, 0.0);
    let (rx, ry) = (tau.x - rest.x, tau.y - rest.y);
    // [-sθ  -sφcφcθ] [φ̈]   [rx]
    // [ cθ  -sφcφsθ] [θ̈] = [ry]
    let phi_ddot = (-sp * cp * st * rx + sp * cp * ct * ry) / det;
    let theta_ddot = (-ct * rx - st * ry) / det;
    Ok((phi_ddot, theta_ddot))
}
