//! Biot-Savart quadrature over bound surface currents.
//!
//! Each panel carries a constant `K`, so its field is
//! `mu0/4π · K × ∫ (r - r')/|r - r'|³ dA'`. The vector integral is computed by
//! adaptive quadtree subdivision of the panel's bilinear parametrisation with
//! a tensor Gauss-Legendre rule on every cell. Cells closer to the field point
//! than their own diameter are always split.
//!
//! The Jacobian is a central difference of the field. The subdivision tree is
//! built once at the centre point and reused for the six displaced points, so
//! the difference quotient sees one fixed quadrature rule and no adaptivity
//! noise.

use serde::{Deserialize, Serialize};

use super::{FieldError, Panel, SgdGeometry};
use crate::math::{Mat3, Vec3, MU0};

const GL_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_9,
    0.326_072_577_431_273_1,
    0.326_072_577_431_273_1,
    0.173_927_422_568_726_9,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Relative tolerance per panel.
    pub rel_tol: f64,
    /// Maximum quadtree depth before giving up.
    pub max_depth: u32,
    /// A cell is split unconditionally while its distance to the field point
    /// is below this multiple of its diameter.
    pub near_field_factor: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            max_depth: 24,
            near_field_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    u0: f64,
    v0: f64,
    size: f64,
}

impl Cell {
    const UNIT: Cell = Cell {
        u0: 0.0,
        v0: 0.0,
        size: 1.0,
    };

    fn split(&self) -> [Cell; 4] {
        let h = 0.5 * self.size;
        [
            Cell { u0: self.u0, v0: self.v0, size: h },
            Cell { u0: self.u0 + h, v0: self.v0, size: h },
            Cell { u0: self.u0, v0: self.v0 + h, size: h },
            Cell { u0: self.u0 + h, v0: self.v0 + h, size: h },
        ]
    }
}

/// Bilinear map of the unit square onto a planar panel.
#[derive(Debug, Clone, Copy)]
struct Patch {
    c: [Vec3; 4],
}

impl Patch {
    fn point(&self, u: f64, v: f64) -> Vec3 {
        let [a, b, c, d] = self.c;
        a * ((1.0 - u) * (1.0 - v)) + b * (u * (1.0 - v)) + c * (u * v) + d * ((1.0 - u) * v)
    }

    fn area_element(&self, u: f64, v: f64) -> f64 {
        let [a, b, c, d] = self.c;
        let du = (b - a) * (1.0 - v) + (c - d) * v;
        let dv = (d - a) * (1.0 - u) + (c - b) * u;
        du.cross(&dv).norm()
    }

    /// Gauss nodes of a cell as (source point, weight · area element).
    fn nodes(&self, cell: &Cell) -> [(Vec3, f64); 16] {
        let mut out = [(Vec3::zeros(), 0.0); 16];
        let area = cell.size * cell.size;
        for (i, (&xu, &wu)) in GL_NODES.iter().zip(&GL_WEIGHTS).enumerate() {
            let u = cell.u0 + xu * cell.size;
            for (j, (&xv, &wv)) in GL_NODES.iter().zip(&GL_WEIGHTS).enumerate() {
                let v = cell.v0 + xv * cell.size;
                out[4 * i + j] = (self.point(u, v), wu * wv * area * self.area_element(u, v));
            }
        }
        out
    }

    fn diameter(&self, cell: &Cell) -> f64 {
        let (u1, v1) = (cell.u0 + cell.size, cell.v0 + cell.size);
        let d1 = (self.point(u1, v1) - self.point(cell.u0, cell.v0)).norm();
        let d2 = (self.point(u1, cell.v0) - self.point(cell.u0, v1)).norm();
        d1.max(d2)
    }

    fn centre(&self, cell: &Cell) -> Vec3 {
        let h = 0.5 * cell.size;
        self.point(cell.u0 + h, cell.v0 + h)
    }
}

#[inline]
fn kernel(field: &Vec3, source: &Vec3) -> Vec3 {
    let d = field - source;
    let r2 = d.norm_squared();
    d / (r2 * r2.sqrt())
}

fn cell_integral(patch: &Patch, cell: &Cell, p: &Vec3) -> Vec3 {
    patch
        .nodes(cell)
        .iter()
        .fold(Vec3::zeros(), |acc, (s, w)| acc + kernel(p, s) * *w)
}

/// Accepted leaf cells of one panel for one field point.
struct PanelPlan {
    patch: Patch,
    leaves: Vec<Cell>,
    /// ∫ (r - r')/|r - r'|³ dA' at the point the plan was built for.
    integral: Vec3,
    error: f64,
    converged: bool,
}

fn build_plan(panel: &Panel, p: &Vec3, cfg: &QuadratureConfig) -> PanelPlan {
    let patch = Patch { c: panel.patch() };
    let mut plan = PanelPlan {
        patch,
        leaves: Vec::new(),
        integral: Vec3::zeros(),
        error: 0.0,
        converged: true,
    };
    let root = cell_integral(&patch, &Cell::UNIT, p);
    let mut stack = vec![(Cell::UNIT, root, 0u32)];
    while let Some((cell, coarse, depth)) = stack.pop() {
        let children = cell.split();
        let est = children.map(|c| cell_integral(&patch, &c, p));
        let fine = est.iter().fold(Vec3::zeros(), |a, e| a + e);
        let err = (fine - coarse).norm();
        let dist = (p - patch.centre(&cell)).norm() - 0.5 * patch.diameter(&cell);
        let near = dist < cfg.near_field_factor * patch.diameter(&cell);
        if !near && err <= cfg.rel_tol * fine.norm() {
            plan.leaves.extend_from_slice(&children);
            plan.integral += fine;
            plan.error += err;
        } else if depth + 1 >= cfg.max_depth {
            plan.leaves.extend_from_slice(&children);
            plan.integral += fine;
            plan.error += err;
            plan.converged = false;
        } else {
            for (c, e) in children.into_iter().zip(est) {
                stack.push((c, e, depth + 1));
            }
        }
    }
    plan
}

impl PanelPlan {
    fn apply(&self, points: &[Vec3], out: &mut [Vec3]) {
        out.iter_mut().for_each(|o| *o = Vec3::zeros());
        for leaf in &self.leaves {
            for (s, w) in self.patch.nodes(leaf) {
                for (o, p) in out.iter_mut().zip(points) {
                    *o += kernel(p, &s) * w;
                }
            }
        }
    }
}

const BS_PREFACTOR: f64 = MU0 / (4.0 * std::f64::consts::PI);

/// Field and Jacobian evaluator over a fixed geometry.
#[derive(Debug, Clone)]
pub struct FieldEvaluator {
    pub geometry: SgdGeometry,
    pub quadrature: QuadratureConfig,
}

impl FieldEvaluator {
    pub fn new(geometry: SgdGeometry, quadrature: QuadratureConfig) -> Self {
        Self {
            geometry,
            quadrature,
        }
    }

    fn plans(&self, p: &Vec3) -> Result<Vec<(Vec3, PanelPlan)>, FieldError> {
        if !crate::math::is_finite_vec(p) {
            return Err(FieldError::NonFinitePoint);
        }
        let mut plans = Vec::with_capacity(self.geometry.panels.len());
        let mut failed = false;
        for panel in self.geometry.panels.iter().filter(|pn| pn.carries_current()) {
            let plan = build_plan(panel, p, &self.quadrature);
            failed |= !plan.converged;
            plans.push((panel.surface_current, plan));
        }
        if failed {
            let estimate = plans
                .iter()
                .fold(Vec3::zeros(), |a, (k, pl)| a + k.cross(&pl.integral))
                * BS_PREFACTOR;
            let error_bound = plans
                .iter()
                .map(|(k, pl)| k.norm() * pl.error)
                .sum::<f64>()
                * BS_PREFACTOR;
            return Err(FieldError::QuadratureFailure {
                point: *p,
                estimate,
                error_bound,
            });
        }
        Ok(plans)
    }

    /// B at `p`, tesla.
    pub fn field(&self, p: &Vec3) -> Result<Vec3, FieldError> {
        let plans = self.plans(p)?;
        Ok(plans
            .iter()
            .fold(Vec3::zeros(), |a, (k, pl)| a + k.cross(&pl.integral))
            * BS_PREFACTOR)
    }

    /// Finite-difference step used at `p`.
    pub fn fd_step(&self, p: &Vec3) -> f64 {
        (1e-4 * self.geometry.distance_to_surface(p)).max(1e-6)
    }

    /// B and its Jacobian `[i][j] = dB_i/dx_j` with the default step.
    pub fn field_and_jacobian(&self, p: &Vec3) -> Result<(Vec3, Mat3), FieldError> {
        self.field_and_jacobian_with_step(p, self.fd_step(p))
    }

    pub fn field_and_jacobian_with_step(
        &self,
        p: &Vec3,
        step: f64,
    ) -> Result<(Vec3, Mat3), FieldError> {
        let plans = self.plans(p)?;
        let mut pts = [*p; 7];
        for j in 0..3 {
            pts[1 + 2 * j][j] += step;
            pts[2 + 2 * j][j] -= step;
        }
        let mut fields = [Vec3::zeros(); 7];
        let mut scratch = [Vec3::zeros(); 7];
        for (k, plan) in &plans {
            plan.apply(&pts, &mut scratch);
            for (f, s) in fields.iter_mut().zip(&scratch) {
                *f += k.cross(s);
            }
        }
        let fields = fields.map(|f| f * BS_PREFACTOR);
        let mut jac = Mat3::zeros();
        for j in 0..3 {
            let d = (fields[1 + 2 * j] - fields[2 + 2 * j]) / (2.0 * step);
            jac.set_column(j, &d);
        }
        Ok((fields[0], jac))
    }
}

/// B at `point` using the default quadrature settings.
pub fn biot_savart_field(geometry: &SgdGeometry, point: &Vec3) -> Result<Vec3, FieldError> {
    FieldEvaluator::new(geometry.clone(), QuadratureConfig::default()).field(point)
}

/// Jacobian of B at `point` using the default quadrature settings and step.
pub fn field_jacobian(geometry: &SgdGeometry, point: &Vec3) -> Result<Mat3, FieldError> {
    FieldEvaluator::new(geometry.clone(), QuadratureConfig::default())
        .field_and_jacobian(point)
        .map(|(_, j)| j)
}
