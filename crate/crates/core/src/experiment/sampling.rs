use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::carrier::CarrierState;
use crate::math::{wrap_angle, Vec3};
use crate::moment::{Frame, SpinState};

use super::SimConfig;

/// Random stream owned by one run: the seed picks the generator, the run
/// index picks the stream, so the draw order of other runs is irrelevant.
pub fn run_rng(seed: u64, run_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditions {
    pub run_index: usize,
    /// Initial polar angle off lab +z, which is the field direction on the start plane.
    pub phi_i: f64,
    pub theta_i: f64,
    pub spin: SpinState,
    pub carrier: CarrierState,
}

/// Lab-frame orientation for `(phi_i, theta_i)`.
///
/// Upstream of the magnet the fringe field runs opposite to the gap field, so
/// with `M_z < 0` it points +z there and `phi_i` is the lab polar angle as is.
/// A moment that follows the field adiabatically carries `β ≈ phi_i` into the gap.
pub fn initial_lab_spin(config: &SimConfig, phi_i: f64, theta_i: f64) -> SpinState {
    let phi = if config.geometry.magnetization.z > 0.0 { std::f64::consts::PI - phi_i } else { phi_i };
    SpinState {
        phi,
        theta: theta_i,
        phi_dot: config.initial_phi_dot,
        theta_dot: config.initial_theta_dot,
        frame: Frame::Lab,
    }
}

pub fn sample_initial_conditions(config: &SimConfig, run_index: usize) -> InitialConditions {
    let mut rng = run_rng(config.seed, run_index);
    let phi_i = config.phi_of_run(run_index);
    let theta_i = wrap_angle(rng.random_range(0.0..std::f64::consts::TAU));
    let hw = config.beam_half_width;
    let (y, z) = if hw > 0.0 {
        (rng.random_range(-hw..=hw), rng.random_range(-hw..=hw))
    } else {
        (0.0, 0.0)
    };
    let vx = Normal::new(config.vx_mean, config.vx_sigma)
        .expect("validated speed distribution")
        .sample(&mut rng);
    InitialConditions {
        run_index,
        phi_i,
        theta_i,
        spin: initial_lab_spin(config, phi_i, theta_i),
        carrier: CarrierState {
            position: Vec3::new(-config.geometry.standoff, y, z),
            velocity: Vec3::new(vx, 0.0, 0.0),
            mass: config.mass,
        },
    }
}
