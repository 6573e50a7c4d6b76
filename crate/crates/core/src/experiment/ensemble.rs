use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;

use crate::magnetostatics::FieldSource;

use super::{run_single, sample_initial_conditions, Classification, ExperimentError, RunResult, SimConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct FlipPoint {
    pub phi_i: f64,
    /// Flip fraction over the resolved, unflagged runs; NaN if there are none.
    pub p_flip_measured: f64,
    pub p_flip_quantum: f64,
    /// Runs in this block, flagged ones included.
    pub n_runs: usize,
    pub n_unresolved: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceCell {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub phi_i: f64,
    pub p_flip: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipStatistics {
    pub curve: Vec<FlipPoint>,
    pub slices: Vec<SliceCell>,
}

/// Counts on a regular `(y, z)` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2d {
    pub y_range: (f64, f64),
    pub z_range: (f64, f64),
    pub bins: usize,
    /// `counts[iy * bins + iz]`.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub runs: Vec<RunResult>,
    pub flip_curve: Vec<FlipPoint>,
    pub azimuthal_slices: Vec<SliceCell>,
    pub detector_histogram: Histogram2d,
}

impl EnsembleResult {
    pub fn flagged(&self) -> usize {
        self.runs.iter().filter(|r| r.is_flagged()).count()
    }

    pub fn unresolved(&self) -> usize {
        self.runs.iter().filter(|r| r.classification == Classification::Unresolved).count()
    }
}

/// Quantum flip probability for a moment starting at `phi_i` from the field axis:
/// `sin²(φ/2)` below π/2, `cos²(φ/2)` above, one half on the equator.
pub fn quantum_flip_probability(phi_i: f64) -> f64 {
    if phi_i == FRAC_PI_2 {
        0.5
    } else if phi_i < FRAC_PI_2 {
        (0.5 * phi_i).sin().powi(2)
    } else {
        (0.5 * phi_i).cos().powi(2)
    }
}

fn flip_fraction<'a>(runs: impl Iterator<Item = &'a RunResult>) -> f64 {
    let (mut n, mut flips) = (0usize, 0usize);
    for r in runs.filter(|r| !r.is_flagged() && r.classification != Classification::Unresolved) {
        n += 1;
        flips += r.flipped() as usize;
    }
    if n == 0 {
        f64::NAN
    } else {
        flips as f64 / n as f64
    }
}

/// Per-φ_i flip curve and per-(θ band, φ_i) flip rates. Runs are grouped by
/// exact `phi_i`, in ascending order.
pub fn flip_statistics(runs: &[RunResult], theta_bands: usize) -> FlipStatistics {
    let mut phis: Vec<f64> = runs.iter().map(|r| r.phi_i).collect();
    phis.sort_by(f64::total_cmp);
    phis.dedup();
    let bands = theta_bands.max(1);
    let width = TAU / bands as f64;
    let band_of = |theta: f64| ((theta / width) as usize).min(bands - 1);

    let mut curve = Vec::with_capacity(phis.len());
    let mut slices = Vec::with_capacity(phis.len() * bands);
    for &phi in &phis {
        let block: Vec<&RunResult> = runs.iter().filter(|r| r.phi_i == phi).collect();
        curve.push(FlipPoint {
            phi_i: phi,
            p_flip_measured: flip_fraction(block.iter().copied()),
            p_flip_quantum: quantum_flip_probability(phi),
            n_runs: block.len(),
            n_unresolved: block.iter().filter(|r| r.classification == Classification::Unresolved).count(),
        });
        for b in 0..bands {
            slices.push(SliceCell {
                theta_lo: b as f64 * width,
                theta_hi: (b + 1) as f64 * width,
                phi_i: phi,
                p_flip: flip_fraction(block.iter().copied().filter(|r| band_of(r.theta_i) == b)),
            });
        }
    }
    // band-major order reads naturally as one curve per band
    slices.sort_by(|a, b| a.theta_lo.total_cmp(&b.theta_lo).then(a.phi_i.total_cmp(&b.phi_i)));
    FlipStatistics { curve, slices }
}

/// Detector hits of unflagged runs binned over their own bounding box.
pub fn detector_histogram(runs: &[RunResult], bins: usize) -> Histogram2d {
    let bins = bins.max(1);
    let hits: Vec<(f64, f64)> = runs
        .iter()
        .filter(|r| !r.is_flagged())
        .map(|r| r.detector_hit)
        .filter(|(y, z)| y.is_finite() && z.is_finite())
        .collect();
    let range = |f: fn(&(f64, f64)) -> f64| {
        let lo = hits.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = hits.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 0.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 1e-9, hi + 1e-9)
        }
    };
    let y_range = range(|h| h.0);
    let z_range = range(|h| h.1);
    let mut counts = vec![0u64; bins * bins];
    let index = |v: f64, (lo, hi): (f64, f64)| (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
    for &(y, z) in &hits {
        counts[index(y, y_range) * bins + index(z, z_range)] += 1;
    }
    Histogram2d { y_range, z_range, bins, counts }
}

/// Runs every `(seed, run_index)` of `config` on the current rayon pool.
/// Results come back ordered by run index, so the outcome is independent of
/// the number of workers.
pub fn run_ensemble(config: &SimConfig, field: &FieldSource) -> Result<EnsembleResult, ExperimentError> {
    config.validate()?;
    let runs: Vec<RunResult> = (0..config.total_runs())
        .into_par_iter()
        .map(|i| run_single(&sample_initial_conditions(config, i), config, field))
        .collect();
    let stats = flip_statistics(&runs, config.theta_bands);
    let detector_histogram = detector_histogram(&runs, config.histogram_bins);
    Ok(EnsembleResult { runs, flip_curve: stats.curve, azimuthal_slices: stats.slices, detector_histogram })
}

/// [`run_ensemble`] on a dedicated pool of `threads` workers.
pub fn run_ensemble_with_threads(
    config: &SimConfig,
    field: &FieldSource,
    threads: usize,
) -> Result<EnsembleResult, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    pool.install(|| run_ensemble(config, field))
}
