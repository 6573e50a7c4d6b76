//! Device geometry as uniformly magnetized prisms tiled by surface panels.
//!
//! Uniform magnetization has no bound volume current (curl M = 0), so each
//! body is fully described by the bound surface current `K = M x n` on its
//! boundary panels.

use super::{FieldError, SgdParams};
use crate::math::Vec3;

/// A planar triangle or quadrilateral on a body surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    /// Three or four coplanar vertices, ordered counter-clockwise about `normal`.
    pub vertices: Vec<Vec3>,
    /// Outward unit normal.
    pub normal: Vec3,
    /// Bound surface current density `M x n`, A/m.
    pub surface_current: Vec3,
    /// Index of the owning body in [`SgdGeometry::bodies`].
    pub body: usize,
}

impl Panel {
    pub fn area(&self) -> f64 {
        polygon_area_vector(&self.vertices).norm()
    }

    /// Corners of the bilinear patch used for quadrature; triangles repeat
    /// their last vertex.
    pub fn patch(&self) -> [Vec3; 4] {
        let v = &self.vertices;
        match v.len() {
            3 => [v[0], v[1], v[2], v[2]],
            _ => [v[0], v[1], v[2], v[3]],
        }
    }

    pub fn carries_current(&self) -> bool {
        self.surface_current.norm_squared() > 0.0
    }

    /// Distance from `p` to the closest point of the panel.
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        let v = &self.vertices;
        let n = self.normal;
        let h = (p - v[0]).dot(&n);
        let foot = p - n * h;
        let inside = (0..v.len()).all(|i| {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            (b - a).cross(&(foot - a)).dot(&n) >= 0.0
        });
        if inside {
            return h.abs();
        }
        (0..v.len())
            .map(|i| segment_distance(p, &v[i], &v[(i + 1) % v.len()]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn polygon_area_vector(v: &[Vec3]) -> Vec3 {
    let mut s = Vec3::zeros();
    for i in 1..v.len() - 1 {
        s += (v[i] - v[0]).cross(&(v[i + 1] - v[0]));
    }
    s * 0.5
}

/// A uniformly magnetized prism extruded along x from a polygonal profile in
/// the (y, z) plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PrismBody {
    /// Profile vertices `(y, z)`, counter-clockwise seen from +x.
    pub profile: Vec<(f64, f64)>,
    pub x_min: f64,
    pub x_max: f64,
    pub magnetization: Vec3,
}

impl PrismBody {
    pub fn contains(&self, p: &Vec3) -> bool {
        if p.x <= self.x_min || p.x >= self.x_max {
            return false;
        }
        // even-odd ray cast along +y
        let mut inside = false;
        let n = self.profile.len();
        for i in 0..n {
            let (y1, z1) = self.profile[i];
            let (y2, z2) = self.profile[(i + 1) % n];
            if (z1 > p.z) != (z2 > p.z) {
                let y_cross = y1 + (p.z - z1) * (y2 - y1) / (z2 - z1);
                if p.y < y_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn panels(&self, body: usize) -> Vec<Panel> {
        let m = self.magnetization;
        let make = |vertices: Vec<Vec3>, normal: Vec3| Panel {
            surface_current: m.cross(&normal),
            vertices,
            normal,
            body,
        };
        let mut out = Vec::new();
        let n = self.profile.len();
        for i in 0..n {
            let (y1, z1) = self.profile[i];
            let (y2, z2) = self.profile[(i + 1) % n];
            let len = ((y2 - y1).powi(2) + (z2 - z1).powi(2)).sqrt();
            // outward normal of a counter-clockwise edge
            let normal = Vec3::new(0.0, (z2 - z1) / len, -(y2 - y1) / len);
            let verts = vec![
                Vec3::new(self.x_min, y1, z1),
                Vec3::new(self.x_min, y2, z2),
                Vec3::new(self.x_max, y2, z2),
                Vec3::new(self.x_max, y1, z1),
            ];
            out.push(make(verts, normal));
        }
        // exit cap faces +x and keeps profile orientation; entry cap reversed
        let cap_pieces = if n == 4 && is_convex(&self.profile) {
            vec![vec![0, 1, 2, 3]]
        } else {
            triangulate(&self.profile)
                .into_iter()
                .map(|t| t.to_vec())
                .collect()
        };
        for piece in cap_pieces {
            let at = |x: f64, i: usize| Vec3::new(x, self.profile[i].0, self.profile[i].1);
            out.push(make(
                piece.iter().map(|&i| at(self.x_max, i)).collect(),
                Vec3::x(),
            ));
            out.push(make(
                piece.iter().rev().map(|&i| at(self.x_min, i)).collect(),
                -Vec3::x(),
            ));
        }
        out
    }
}

fn is_convex(poly: &[(f64, f64)]) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let (o, a, b) = (poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0) > 0.0
    })
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
fn triangulate(poly: &[(f64, f64)]) -> Vec<[usize; 3]> {
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::with_capacity(poly.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let ear = (0..n).find(|&i| {
            let (ip, ic, inx) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            let (a, b, c) = (poly[ip], poly[ic], poly[inx]);
            if cross(a, b, c) <= 0.0 {
                return false;
            }
            idx.iter().all(|&j| {
                if j == ip || j == ic || j == inx {
                    return true;
                }
                let p = poly[j];
                !(cross(a, b, p) > 0.0 && cross(b, c, p) > 0.0 && cross(c, a, p) > 0.0)
            })
        });
        let i = ear.expect("profile must be a simple counter-clockwise polygon");
        tris.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    tris.push([idx[0], idx[1], idx[2]]);
    tris
}

/// The assembled device: bodies plus their boundary panels.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdGeometry {
    pub bodies: Vec<PrismBody>,
    pub panels: Vec<Panel>,
    pub bounding_box: (Vec3, Vec3),
}

impl SgdGeometry {
    pub fn from_bodies(bodies: Vec<PrismBody>) -> Self {
        let panels: Vec<Panel> = bodies
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.panels(i))
            .collect();
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in panels.iter().flat_map(|p| p.vertices.iter()) {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        Self {
            bodies,
            panels,
            bounding_box: (lo, hi),
        }
    }

    /// Panels belonging to body `i`.
    pub fn body_panels(&self, i: usize) -> impl Iterator<Item = &Panel> {
        self.panels.iter().filter(move |p| p.body == i)
    }

    /// Geometry holding only the listed bodies (used for superposition checks).
    pub fn subset(&self, bodies: &[usize]) -> Self {
        Self::from_bodies(bodies.iter().map(|&i| self.bodies[i].clone()).collect())
    }

    pub fn inside_material(&self, p: &Vec3) -> bool {
        self.bodies.iter().any(|b| b.contains(p))
    }

    pub fn distance_to_surface(&self, p: &Vec3) -> f64 {
        self.panels
            .iter()
            .map(|panel| panel.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Σ area·n over the panels of body `i`; zero for a closed surface.
    pub fn closure_defect(&self, i: usize) -> (f64, f64) {
        let mut sum = Vec3::zeros();
        let mut area = 0.0;
        for p in self.body_panels(i) {
            let a = p.area();
            sum += p.normal * a;
            area += a;
        }
        (sum.norm(), area)
    }
}

/// Profile of the top piece: a box from `tip_length` to `top_height` with a
/// symmetric wedge hanging down to the apex at `z = tip`. When the wedge
/// flanks reach the full width below `tip_length` they are clipped there.
fn top_profile(p: &SgdParams) -> Vec<(f64, f64)> {
    let hw = 0.5 * p.width;
    if !p.with_tip {
        return vec![
            (-hw, p.tip_length),
            (hw, p.tip_length),
            (hw, p.top_height),
            (-hw, p.top_height),
        ];
    }
    let tan = p.tip_half_angle.tan();
    let flank = (p.tip_length - p.tip) * tan;
    if flank >= hw {
        let z_full = p.tip + hw / tan;
        vec![
            (0.0, p.tip),
            (hw, z_full),
            (hw, p.top_height),
            (-hw, p.top_height),
            (-hw, z_full),
        ]
    } else {
        vec![
            (0.0, p.tip),
            (flank, p.tip_length),
            (hw, p.tip_length),
            (hw, p.top_height),
            (-hw, p.top_height),
            (-hw, p.tip_length),
            (-flank, p.tip_length),
        ]
    }
}

/// Build the two-piece device described by `params`.
pub fn build_geometry(params: &SgdParams) -> Result<SgdGeometry, FieldError> {
    params.validate()?;
    let hw = 0.5 * params.width;
    let top = PrismBody {
        profile: top_profile(params),
        x_min: 0.0,
        x_max: params.length,
        magnetization: params.magnetization,
    };
    let bottom = PrismBody {
        profile: vec![
            (-hw, -params.bottom_height),
            (hw, -params.bottom_height),
            (hw, -params.bottom_top),
            (-hw, -params.bottom_top),
        ],
        x_min: 0.0,
        x_max: params.length,
        magnetization: params.magnetization,
    };
    Ok(SgdGeometry::from_bodies(vec![top, bottom]))
}

/// A single uniformly magnetized box centred at `center`.
pub fn magnetized_box(center: Vec3, size: Vec3, magnetization: Vec3) -> SgdGeometry {
    let h = size * 0.5;
    let body = PrismBody {
        profile: vec![
            (center.y - h.y, center.z - h.z),
            (center.y + h.y, center.z - h.z),
            (center.y + h.y, center.z + h.z),
            (center.y - h.y, center.z + h.z),
        ],
        x_min: center.x - h.x,
        x_max: center.x + h.x,
        magnetization,
    };
    SgdGeometry::from_bodies(vec![body])
}
