use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgspin::magnetostatics::*;
use sgspin::math::{curl, divergence};
use sgspin::{Vec3, MU0};

/// Field of a box `[lo, hi]` magnetized along z, from its two magnetic
/// charge sheets `σ = ±M` (the pole-density picture, independent of the
/// surface-current quadrature under test). Returns B in tesla.
fn prism_field_z(lo: Vec3, hi: Vec3, mz: f64, p: Vec3) -> Vec3 {
    // H of a sheet z = z0, [x1,x2]×[y1,y2], unit charge density
    let sheet = |z0: f64| -> Vec3 {
        let c = p.z - z0;
        let mut h = Vec3::zeros();
        for (i, xe) in [lo.x, hi.x].into_iter().enumerate() {
            for (j, ye) in [lo.y, hi.y].into_iter().enumerate() {
                let (a, b) = (xe - p.x, ye - p.y);
                let r = (a * a + b * b + c * c).sqrt();
                let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                h.x += s * (b + r).ln();
                h.y += s * (a + r).ln();
                h.z += s * (a * b / (c * r)).atan();
            }
        }
        h / (4.0 * std::f64::consts::PI)
    };
    let h = (sheet(hi.z) - sheet(lo.z)) * mz;
    let inside = (0..3).all(|k| p[k] > lo[k] && p[k] < hi[k]);
    let m = if inside { Vec3::new(0.0, 0.0, mz) } else { Vec3::zeros() };
    (h + m) * MU0
}

fn default_evaluator() -> FieldEvaluator {
    FieldEvaluator::new(build_geometry(&SgdParams::default()).unwrap(), QuadratureConfig::default())
}

fn random_gap_points(n: usize, seed: u64) -> Vec<Vec3> {
    let p = SgdParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-p.standoff..p.length),
                rng.random_range(-1.9e-3..1.9e-3),
                rng.random_range(-0.45e-3..0.45e-3),
            )
        })
        .collect()
}

#[test]
fn cube_centre_field_is_two_thirds_mu0_m() {
    let m = Vec3::new(0.0, 0.0, 1.0e6);
    let g = magnetized_box(Vec3::zeros(), Vec3::repeat(0.01), m);
    let b = biot_savart_field(&g, &Vec3::zeros()).unwrap();
    let expected = 2.0 / 3.0 * MU0 * m.z;
    // the charge-sheet oracle reproduces the same closed-form value
    let oracle = prism_field_z(Vec3::repeat(-0.005), Vec3::repeat(0.005), m.z, Vec3::zeros());
    assert!((oracle.z / expected - 1.0).abs() < 1e-12, "{oracle}");
    assert!((b.z / expected - 1.0).abs() < 5e-3, "{} vs {expected}", b.z);
    assert!(b.x.abs() + b.y.abs() < 1e-9 * b.z.abs());
}

#[test]
fn box_field_matches_charge_sheet_oracle_outside() {
    let (lo, hi) = (Vec3::new(-0.01, -0.004, -0.002), Vec3::new(0.01, 0.004, 0.002));
    let g = magnetized_box((lo + hi) * 0.5, hi - lo, Vec3::new(0.0, 0.0, 1.2e6));
    for p in [
        Vec3::new(0.003, 0.001, 0.0035),
        Vec3::new(-0.012, 0.002, 0.001),
        Vec3::new(0.0, -0.006, -0.003),
        Vec3::new(0.02, 0.01, 0.015),
    ] {
        let b = biot_savart_field(&g, &p).unwrap();
        let oracle = prism_field_z(lo, hi, 1.2e6, p);
        assert!((b - oracle).norm() <= 1e-5 * oracle.norm(), "{p}: {b} vs {oracle}");
    }
}

#[test]
fn far_field_decays_as_inverse_cube() {
    let ev = default_evaluator();
    let dir = Vec3::new(0.3, 0.5, 0.8).normalize();
    let centre = Vec3::new(0.0175, 0.0, 0.0);
    for r in [0.4, 0.8] {
        let b1 = ev.field(&(centre + dir * r)).unwrap().norm();
        let b2 = ev.field(&(centre + dir * 2.0 * r)).unwrap().norm();
        let exponent = (b1 / b2).log2();
        assert!((exponent - 3.0).abs() <= 0.15, "R = {r}: exponent {exponent}");
    }
}

#[test]
fn mirror_symmetry_in_y() {
    let ev = default_evaluator();
    for p in random_gap_points(20, 5) {
        let q = Vec3::new(p.x, -p.y, p.z);
        let (b, bm) = (ev.field(&p).unwrap(), ev.field(&q).unwrap());
        let tol = 1e-9 * b.norm().max(1e-6);
        assert!((b.y + bm.y).abs() <= tol, "{p}");
        assert!((b.x - bm.x).abs() <= tol && (b.z - bm.z).abs() <= tol, "{p}");
    }
    // on the plane y = 0 the lateral component vanishes
    let b = ev.field(&Vec3::new(0.01, 0.0, 0.0002)).unwrap();
    assert!(b.y.abs() <= 1e-9 * b.norm());
}

#[test]
fn two_body_field_is_the_sum_of_single_bodies() {
    let ev = default_evaluator();
    let top = FieldEvaluator::new(ev.geometry.subset(&[0]), QuadratureConfig::default());
    let bottom = FieldEvaluator::new(ev.geometry.subset(&[1]), QuadratureConfig::default());
    for p in random_gap_points(10, 6) {
        let b = ev.field(&p).unwrap();
        let sum = top.field(&p).unwrap() + bottom.field(&p).unwrap();
        assert!((b - sum).norm() <= 1e-12 * b.norm(), "{p}: {}", (b - sum).norm() / b.norm());
    }
}

#[test]
fn divergence_and_curl_vanish_in_the_gap() {
    let ev = default_evaluator();
    for p in random_gap_points(100, 7) {
        let (_, j) = ev.field_and_jacobian(&p).unwrap();
        let scale = (0..3).map(|i| j[(i, i)].abs()).fold(0.0, f64::max);
        let tol = 1e-3 * scale;
        assert!(divergence(&j).abs() <= tol, "{p}: div {} scale {scale}", divergence(&j));
        let c = curl(&j);
        assert!(c.iter().all(|v| v.abs() <= tol), "{p}: curl {c} scale {scale}");
    }
}

#[test]
fn jacobian_agrees_with_richardson_extrapolation() {
    let ev = default_evaluator();
    for p in random_gap_points(10, 8) {
        let h = ev.fd_step(&p);
        let (_, j) = ev.field_and_jacobian(&p).unwrap();
        let (_, j1) = ev.field_and_jacobian_with_step(&p, 8.0 * h).unwrap();
        let (_, j2) = ev.field_and_jacobian_with_step(&p, 4.0 * h).unwrap();
        let extrapolated = (j2 * 4.0 - j1) / 3.0;
        let scale = j.abs().max();
        let estimate = (j2 - j1).abs().max() + 1e-6 * scale;
        let diff = (j - extrapolated).abs().max();
        assert!(diff <= estimate, "{p}: {diff} > {estimate}");
    }
}

#[test]
fn gap_field_points_down_with_a_drive_region_upstream() {
    let p = SgdParams::default();
    let ev = default_evaluator();
    let b = ev.field(&Vec3::new(0.5 * p.length, 0.0, 0.0)).unwrap();
    assert!(b.z < 0.0 && b.z.abs() > b.x.abs(), "{b}");
    let profile = sgspin::experiment::drive_profile(&FieldSource::Direct(ev), &p, 101).unwrap();
    assert!(profile.iter().any(|&(x, r)| x < 0.0 && r > 1.0));
}

/// Grid over a slab of the gap centred at x = L/2 with target spacing `h`.
fn centre_grid(ev: &FieldEvaluator, h: f64) -> (FieldGrid, GridSpec) {
    let p = SgdParams::default();
    let mut spec = GridSpec::corridor(&p, h);
    spec.min = Vec3::new(0.5 * p.length - 4e-4, -8e-4, spec.min.z);
    spec.max = Vec3::new(0.5 * p.length + 4e-4, 8e-4, spec.max.z);
    spec.spacing.x = h;
    spec.spacing.y = h;
    (build_field_grid(ev, &spec).unwrap(), spec)
}

#[test]
fn grid_interpolation_converges_to_direct_quadrature() {
    let ev = default_evaluator();
    let (coarse, spec) = centre_grid(&ev, 2e-4);
    let (fine, _) = centre_grid(&ev, 1e-4);

    // identity at nodes and exact cache round trip
    let node = coarse.node_position(1, 2, 3);
    let s = FieldSource::Grid(coarse.clone()).sample(&node).unwrap();
    assert_eq!(pack(&s.b, &s.jacobian), *coarse.node(1, 2, 3));
    let mut bytes = Vec::new();
    coarse.write_to(&mut bytes).unwrap();
    assert_eq!(FieldGrid::read_from(bytes.as_slice()).unwrap(), coarse);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points: Vec<Vec3> = (0..50)
        .map(|_| {
            Vec3::new(
                rng.random_range(spec.min.x..spec.max.x),
                rng.random_range(spec.min.y..spec.max.y),
                rng.random_range(spec.min.z..spec.max.z),
            )
        })
        .collect();
    let direct: Vec<Vec3> = points.iter().map(|q| ev.field(q).unwrap()).collect();
    let errors = |g: &FieldGrid| -> (f64, f64) {
        let src = FieldSource::Grid(g.clone());
        let e: Vec<f64> = points
            .iter()
            .zip(&direct)
            .map(|(q, b)| (src.sample(q).unwrap().b - b).norm() / b.norm())
            .collect();
        let rms = (e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64).sqrt();
        (e.into_iter().fold(0.0, f64::max), rms)
    };
    let (worst_c, rms_c) = errors(&coarse);
    let (worst_f, rms_f) = errors(&fine);
    // bounds for the two spacings; the apex at 0.05 mm above the slab dominates
    assert!(worst_c <= 3e-2, "0.2 mm: worst {worst_c:e}");
    assert!(worst_f <= 1e-2, "0.1 mm: worst {worst_f:e}");
    // trilinear blending is second order in the spacing
    let order = (rms_c / rms_f).log2();
    assert!((1.6..=2.4).contains(&order), "observed order {order} ({rms_c:e} -> {rms_f:e})");
}

#[test]
fn geometry_panels_are_consistent() {
    let g = build_geometry(&SgdParams::default()).unwrap();
    for panel in &g.panels {
        assert!((panel.normal.norm() - 1.0).abs() <= 1e-12);
        let k = panel.surface_current;
        assert!(k.dot(&panel.normal).abs() <= 1e-12 * k.norm().max(1.0));
    }
    for i in 0..g.bodies.len() {
        let (defect, area) = g.closure_defect(i);
        assert!(defect <= 1e-9 * area);
    }
    let plain = build_geometry(&SgdParams { with_tip: false, ..SgdParams::default() }).unwrap();
    assert_eq!(plain.body_panels(1).count(), 6);
    let zero = SgdParams { magnetization: Vec3::zeros(), ..SgdParams::default() };
    assert!(matches!(build_geometry(&zero), Err(FieldError::InvalidGeometry(_))));
}
