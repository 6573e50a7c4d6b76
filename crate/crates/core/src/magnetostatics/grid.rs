//! Precomputed B/Jacobian lattice with trilinear blending and a binary cache.

use std::io::{Read, Write};

use rayon::prelude::*;

use super::{FieldError, FieldEvaluator, SgdParams};
use crate::math::{Mat3, Vec3};

const MAGIC: &[u8; 4] = b"SGFG";
const VERSION: u8 = 0x01;

/// Per-node payload: B (3) followed by the row-major Jacobian (9).
pub type NodeValue = [f64; 12];

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub origin: Vec3,
    pub spacing: Vec3,
    pub dims: [u32; 3],
    /// Node data with x varying fastest.
    pub nodes: Vec<NodeValue>,
}

/// Region and resolution of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: Vec3,
    pub max: Vec3,
    pub spacing: Vec3,
}

impl GridSpec {
    /// Flight corridor for `params`: x from the start plane to 1 mm past the
    /// exit, |y| ≤ 2 mm, and z across the gap inset 0.05 mm from both pole
    /// faces. Each axis spacing is shrunk from `spacing` so the nodes land
    /// exactly on the bounds, with at least five cells across the gap.
    pub fn corridor(params: &SgdParams, spacing: f64) -> Self {
        let inset = (0.05e-3f64).min(0.1 * params.gap());
        let min = Vec3::new(-params.standoff, -2e-3, -params.bottom_top + inset);
        let max = Vec3::new(params.length + 1e-3, 2e-3, params.tip - inset);
        let fit = |span: f64, min_cells: f64| span / (span / spacing - 1e-9).ceil().max(min_cells);
        Self {
            min,
            max,
            spacing: Vec3::new(fit(max.x - min.x, 1.0), fit(max.y - min.y, 1.0), fit(max.z - min.z, 5.0)),
        }
    }

    pub fn dims(&self) -> [u32; 3] {
        let n = |i: usize| ((self.max[i] - self.min[i]) / self.spacing[i] - 1e-9).ceil() as u32 + 1;
        [n(0), n(1), n(2)]
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        for i in 0..3 {
            if !(self.spacing[i] > 0.0 && self.max[i] > self.min[i]) {
                return Err(FieldError::InvalidGrid(format!(
                    "axis {i}: need spacing > 0 and max > min"
                )));
            }
        }
        Ok(())
    }
}

pub fn pack(b: &Vec3, jac: &Mat3) -> NodeValue {
    let mut v = [0.0; 12];
    v[..3].copy_from_slice(b.as_slice());
    for i in 0..3 {
        for j in 0..3 {
            v[3 + 3 * i + j] = jac[(i, j)];
        }
    }
    v
}

pub fn unpack(v: &NodeValue) -> (Vec3, Mat3) {
    let b = Vec3::new(v[0], v[1], v[2]);
    let jac = Mat3::from_row_slice(&v[3..]);
    (b, jac)
}

/// Fill a grid over `spec`. Nodes are independent and computed in parallel.
pub fn build_field_grid(evaluator: &FieldEvaluator, spec: &GridSpec) -> Result<FieldGrid, FieldError> {
    spec.validate()?;
    let dims = spec.dims();
    let count = dims.iter().map(|&d| d as usize).product::<usize>();
    let grid = FieldGrid {
        origin: spec.min,
        spacing: spec.spacing,
        dims,
        nodes: Vec::new(),
    };
    let nodes = (0..count)
        .into_par_iter()
        .map(|n| {
            let p = grid.node_position_flat(n);
            evaluator
                .field_and_jacobian(&p)
                .map(|(b, j)| pack(&b, &j))
                .map_err(|e| FieldError::GridNode {
                    index: n,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FieldGrid { nodes, ..grid })
}

impl FieldGrid {
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.dims.map(|d| d as usize);
        i + nx * (j + ny * k)
    }

    fn node_position_flat(&self, n: usize) -> Vec3 {
        let [nx, ny, _] = self.dims.map(|d| d as usize);
        self.node_position(n % nx, (n / nx) % ny, n / (nx * ny))
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + self.spacing.component_mul(&Vec3::new(i as f64, j as f64, k as f64))
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> &NodeValue {
        &self.nodes[self.index(i, j, k)]
    }

    pub fn max_corner(&self) -> Vec3 {
        self.node_position(
            self.dims[0] as usize - 1,
            self.dims[1] as usize - 1,
            self.dims[2] as usize - 1,
        )
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.locate(p).is_some()
    }

    /// Lower cell index and fractional offset along each axis.
    fn locate(&self, p: &Vec3) -> Option<[(usize, f64); 3]> {
        let mut out = [(0usize, 0.0); 3];
        for a in 0..3 {
            let n = self.dims[a] as usize;
            let mut t = (p[a] - self.origin[a]) / self.spacing[a];
            // snap onto nodes so that node samples are exact
            let r = t.round();
            if (t - r).abs() < 1e-9 {
                t = r;
            }
            if !(t >= 0.0 && t <= (n - 1) as f64) {
                return None;
            }
            let i = (t.floor() as usize).min(n.saturating_sub(2));
            out[a] = (i, t - i as f64);
        }
        Some(out)
    }

    /// Trilinear blend of the node data around `p`.
    pub fn interpolate(&self, p: &Vec3) -> Result<NodeValue, FieldError> {
        let [(i, fx), (j, fy), (k, fz)] = self.locate(p).ok_or(FieldError::OutOfBounds(*p))?;
        let step = |a: usize, f: f64| if self.dims[a] > 1 && f > 0.0 { 1 } else { 0 };
        let (di, dj, dk) = (step(0, fx), step(1, fy), step(2, fz));
        let mut out = [0.0; 12];
        for (ci, wx) in [(0, 1.0 - fx), (di, fx)] {
            for (cj, wy) in [(0, 1.0 - fy), (dj, fy)] {
                for (ck, wz) in [(0, 1.0 - fz), (dk, fz)] {
                    let w = wx * wy * wz;
                    if w == 0.0 {
                        continue;
                    }
                    let v = self.node(i + ci, j + cj, k + ck);
                    for (o, x) in out.iter_mut().zip(v) {
                        *o += w * x;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION])?;
        for d in self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        for v in self.origin.iter().chain(self.spacing.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        for node in &self.nodes {
            for v in node {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, FieldError> {
        let bad = |m: &str| FieldError::CacheFormat(m.to_string());
        let mut head = [0u8; 5];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(bad("missing SGFG magic"));
        }
        if head[4] != VERSION {
            return Err(bad("unsupported cache version"));
        }
        let mut u = [0u8; 4];
        let mut dims = [0u32; 3];
        for d in &mut dims {
            r.read_exact(&mut u)?;
            *d = u32::from_le_bytes(u);
        }
        if dims.contains(&0) {
            return Err(bad("zero grid dimension"));
        }
        let mut f = [0u8; 8];
        let mut read_f64 = |r: &mut R| -> Result<f64, FieldError> {
            r.read_exact(&mut f)?;
            Ok(f64::from_le_bytes(f))
        };
        let mut hdr = [0.0; 6];
        for h in &mut hdr {
            *h = read_f64(&mut r)?;
        }
        let count = dims.iter().map(|&d| d as usize).product::<usize>();
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let mut node = [0.0; 12];
            for v in &mut node {
                *v = read_f64(&mut r)?;
            }
            nodes.push(node);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes after node data"));
        }
        Ok(Self {
            origin: Vec3::new(hdr[0], hdr[1], hdr[2]),
            spacing: Vec3::new(hdr[3], hdr[4], hdr[5]),
            dims,
            nodes,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), FieldError> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, FieldError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}
