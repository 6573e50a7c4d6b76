use std::io::{Read, Write};

use crate::carrier::CarrierState;
use crate::math::Vec3;

use super::{ExperimentError, FlipPoint, Histogram2d, RunFlag, RunResult, SliceCell};

pub const RUNS_HEADER: &str =
    "run_index,phi_i,theta_i,beta_i,beta_f,class,exit_y,exit_z,det_y,det_z,max_drive_ratio,flags";
pub const FLIP_CURVE_HEADER: &str = "phi_i,p_flip_measured,p_flip_quantum,n_runs,n_unresolved";
pub const SLICES_HEADER: &str = "theta_lo,theta_hi,phi_i,p_flip";

// `{}` on f64 prints the shortest string that parses back to the same value

pub fn write_runs_csv<W: Write>(mut w: W, runs: &[RunResult]) -> std::io::Result<()> {
    writeln!(w, "{RUNS_HEADER}")?;
    for r in runs {
        let flags: Vec<&str> = r.flags.iter().map(|f| f.as_str()).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.run_index,
            r.phi_i,
            r.theta_i,
            r.initial_beta,
            r.final_beta,
            r.classification,
            r.exit_state.position.y,
            r.exit_state.position.z,
            r.detector_hit.0,
            r.detector_hit.1,
            r.max_drive_ratio,
            flags.join("|")
        )?;
    }
    w.flush()
}

/// Parse a runs table back. Only the stored columns are meaningful: the exit
/// x coordinate, velocity, mass and curl maximum come back as NaN.
pub fn read_runs_csv<R: Read>(r: R) -> Result<Vec<RunResult>, ExperimentError> {
    let err = |m: String| ExperimentError::RunsTable(m);
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != RUNS_HEADER {
        return Err(err(format!("unexpected header, want `{RUNS_HEADER}`")));
    }
    let mut runs = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let row = line + 2;
        let num = |i: usize| -> Result<f64, ExperimentError> {
            rec[i].parse::<f64>().map_err(|_| err(format!("row {row}: bad number in column {}", i + 1)))
        };
        let flags = if rec[11].is_empty() {
            vec![]
        } else {
            rec[11]
                .split('|')
                .map(|s| s.parse::<RunFlag>().map_err(|e| err(format!("row {row}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?
        };
        runs.push(RunResult {
            run_index: rec[0].parse().map_err(|_| err(format!("row {row}: bad run_index")))?,
            phi_i: num(1)?,
            theta_i: num(2)?,
            initial_beta: num(3)?,
            final_beta: num(4)?,
            classification: rec[5].parse().map_err(|e| err(format!("row {row}: {e}")))?,
            exit_state: CarrierState {
                position: Vec3::new(f64::NAN, num(6)?, num(7)?),
                velocity: Vec3::repeat(f64::NAN),
                mass: f64::NAN,
            },
            detector_hit: (num(8)?, num(9)?),
            max_drive_ratio: num(10)?,
            max_curl_x: f64::NAN,
            flags,
        });
    }
    Ok(runs)
}

pub fn write_flip_curve_csv<W: Write>(mut w: W, curve: &[FlipPoint]) -> std::io::Result<()> {
    writeln!(w, "{FLIP_CURVE_HEADER}")?;
    for p in curve {
        writeln!(w, "{},{},{},{},{}", p.phi_i, p.p_flip_measured, p.p_flip_quantum, p.n_runs, p.n_unresolved)?;
    }
    w.flush()
}

pub fn write_slices_csv<W: Write>(mut w: W, slices: &[SliceCell]) -> std::io::Result<()> {
    writeln!(w, "{SLICES_HEADER}")?;
    for s in slices {
        writeln!(w, "{},{},{},{}", s.theta_lo, s.theta_hi, s.phi_i, s.p_flip)?;
    }
    w.flush()
}

pub fn write_histogram_csv<W: Write>(mut w: W, h: &Histogram2d) -> std::io::Result<()> {
    writeln!(w, "y_lo,y_hi,z_lo,z_hi,count")?;
    let dy = (h.y_range.1 - h.y_range.0) / h.bins as f64;
    let dz = (h.z_range.1 - h.z_range.0) / h.bins as f64;
    for iy in 0..h.bins {
        for iz in 0..h.bins {
            let (y0, z0) = (h.y_range.0 + iy as f64 * dy, h.z_range.0 + iz as f64 * dz);
            writeln!(w, "{},{},{},{},{}", y0, y0 + dy, z0, z0 + dz, h.counts[iy * h.bins + iz])?;
        }
    }
    w.flush()
}

pub fn write_drive_profile_csv<W: Write>(mut w: W, profile: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "x,ratio")?;
    for (x, r) in profile {
        writeln!(w, "{x},{r}")?;
    }
    w.flush()
}
