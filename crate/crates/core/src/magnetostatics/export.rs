use std::io::Write;

use super::{FieldError, FieldSample, FieldSource};
use crate::math::Vec3;

pub const SLICE_HEADER: &str = "x,y,z,Bx,By,Bz,dBzdz,dBzdy,dBydz,div,curl_x,curl_y,curl_z";

#[derive(Debug, Clone, Copy)]
pub struct SliceRow {
    pub position: Vec3,
    pub sample: FieldSample,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Rectangular y-z slice at fixed `x`, y varying fastest.
pub fn yz_slice(
    source: &FieldSource,
    x: f64,
    y: (f64, f64),
    z: (f64, f64),
    n: (usize, usize),
) -> Result<Vec<SliceRow>, FieldError> {
    let mut rows = Vec::with_capacity(n.0 * n.1);
    for zv in linspace(z.0, z.1, n.1) {
        for yv in linspace(y.0, y.1, n.0) {
            let position = Vec3::new(x, yv, zv);
            rows.push(SliceRow {
                position,
                sample: source.sample(&position)?,
            });
        }
    }
    Ok(rows)
}

/// Line along y at fixed `(x, z)`.
pub fn divergence_profile(
    source: &FieldSource,
    x: f64,
    z: f64,
    y: (f64, f64),
    n: usize,
) -> Result<Vec<SliceRow>, FieldError> {
    yz_slice(source, x, y, (z, z), (n, 1))
}

pub fn write_slice_csv<W: Write>(rows: &[SliceRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SLICE_HEADER}")?;
    for r in rows {
        let (p, s) = (r.position, r.sample);
        let j = s.jacobian;
        let c = s.curl();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.x,
            p.y,
            p.z,
            s.b.x,
            s.b.y,
            s.b.z,
            j[(2, 2)],
            j[(2, 1)],
            j[(1, 2)],
            s.divergence(),
            c.x,
            c.y,
            c.z
        )?;
    }
    w.flush()
}
