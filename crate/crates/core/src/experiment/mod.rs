//! Full runs: nested moment/carrier integration, seeded initial conditions,
//! parallel ensembles, flip statistics and diagnostics.
//!
//! Each slow step freezes the carrier position, advances the moment by
//! `substeps` RK4 steps under the field sampled there, then moves the carrier
//! one RK2 step with the moment held at its new orientation.

mod diagnostics;
mod ensemble;
mod output;
mod run;
mod sampling;

pub use diagnostics::{
    drive_profile, drive_ratio, flux_dominance_check, measure_sigma_y, FluxCheck, FluxCheckInput, FluxVerdict,
};
pub use ensemble::{
    detector_histogram, flip_statistics, quantum_flip_probability, run_ensemble, run_ensemble_with_threads,
    EnsembleResult, FlipPoint, FlipStatistics, Histogram2d, SliceCell,
};
pub use output::{
    read_runs_csv, write_drive_profile_csv, write_flip_curve_csv, write_histogram_csv, write_runs_csv,
    write_slices_csv, FLIP_CURVE_HEADER, RUNS_HEADER, SLICES_HEADER,
};
pub use run::{run_single, run_single_traced, Classification, RunFlag, RunResult, EPS_CLASS};
pub use sampling::{initial_lab_spin, run_rng, sample_initial_conditions, InitialConditions};

use crate::carrier::{ForceModel, DEFAULT_DETECTOR_DISTANCE, DEFAULT_MASS};
use crate::magnetostatics::SgdParams;
use crate::moment::MomentParams;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Field(#[from] crate::magnetostatics::FieldError),
    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
    #[error("runs table: {0}")]
    RunsTable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub phi_steps: usize,
    pub reps_per_phi: usize,
    /// Mean and spread of the entry speed along x, m/s.
    pub vx_mean: f64,
    pub vx_sigma: f64,
    /// Half side of the square beam cross-section, m.
    pub beam_half_width: f64,
    pub dt_fast: f64,
    /// Fast steps per slow step; the slow step is `substeps * dt_fast`.
    pub substeps: usize,
    pub seed: u64,
    pub force_model: ForceModel,
    pub moment: MomentParams,
    pub geometry: SgdParams,
    pub detector_distance: f64,
    pub mass: f64,
    pub initial_phi_dot: f64,
    pub initial_theta_dot: f64,
    /// Azimuthal bands for the sliced flip report.
    pub theta_bands: usize,
    /// Bins per axis of the detector histogram.
    pub histogram_bins: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            phi_steps: 101,
            reps_per_phi: 100,
            vx_mean: 550.0,
            vx_sigma: 27.5,
            beam_half_width: 1e-6,
            dt_fast: 1e-9,
            substeps: 100,
            seed: 0,
            force_model: ForceModel::ZOnly { suppression: true, sigma_y: 1e-3 },
            moment: MomentParams::default(),
            geometry: SgdParams::default(),
            detector_distance: DEFAULT_DETECTOR_DISTANCE,
            mass: DEFAULT_MASS,
            initial_phi_dot: 0.0,
            initial_theta_dot: 0.0,
            theta_bands: 8,
            histogram_bins: 50,
        }
    }
}

impl SimConfig {
    pub fn dt_slow(&self) -> f64 {
        self.substeps as f64 * self.dt_fast
    }

    pub fn total_runs(&self) -> usize {
        self.phi_steps * self.reps_per_phi
    }

    /// φ_i of the block that `run_index` belongs to.
    pub fn phi_of_run(&self, run_index: usize) -> f64 {
        self.phi_of_block(run_index / self.reps_per_phi)
    }

    pub fn phi_of_block(&self, block: usize) -> f64 {
        block as f64 * std::f64::consts::PI / self.phi_steps as f64
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.phi_steps < 2 {
            return bad(format!("phi_steps must be at least 2, got {}", self.phi_steps));
        }
        if self.reps_per_phi < 1 {
            return bad("reps_per_phi must be at least 1".into());
        }
        if self.substeps < 100 {
            return bad(format!("substeps must be at least 100, got {}", self.substeps));
        }
        let positive = [
            ("vx_mean", self.vx_mean),
            ("dt_fast", self.dt_fast),
            ("detector_distance", self.detector_distance),
            ("mass", self.mass),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("vx_sigma", self.vx_sigma), ("beam_half_width", self.beam_half_width)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.initial_phi_dot.is_finite() && self.initial_theta_dot.is_finite()) {
            return bad("initial rates must be finite".into());
        }
        if self.theta_bands < 1 || self.histogram_bins < 1 {
            return bad("theta_bands and histogram_bins must be at least 1".into());
        }
        self.force_model.validate().map_err(ExperimentError::InvalidConfig)?;
        self.moment.validate().map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        self.geometry.validate_shape()?;
        Ok(())
    }
}
