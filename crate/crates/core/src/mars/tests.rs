use super::*;
use crate::brep::Orientation;
use crate::verify::mesh_volume;
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::new(1e-9).unwrap()
}

fn solid(mesh: TriMesh) -> GElement {
    GElement::from_surfaces(vec![GluedSurface::new(mesh, Orientation::Positive)], tol()).unwrap()
}

fn only_mesh(g: &GElement) -> TriMesh {
    g.surfaces()[0].mesh.clone()
}

fn edge_lengths(m: &TriMesh) -> Vec<f64> {
    let mut out = Vec::new();
    for f in &m.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a < b {
                out.push(m.vertices[a as usize].distance(m.vertices[b as usize]));
            }
        }
    }
    out
}

#[test]
fn params_are_checked() {
    assert!(MarsParams::new(0.1, 0.1, 0.2, 0.1).is_ok());
    for (h, r, a, dt) in [(0.0, 0.1, 0.2, 0.1), (0.1, 1.0, 0.2, 0.1), (0.1, 0.1, 1.1, 0.1), (0.1, 0.1, 0.2, -1.0)] {
        assert!(matches!(MarsParams::new(h, r, a, dt), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn zero_field_keeps_vertices() {
    let g = solid(shapes::icosphere(Point3::ZERO, 1.0, 1));
    let out = advect(&g, &VelocityField::Zero, 0.0, 1.0, 0.1, tol()).unwrap();
    assert_eq!(only_mesh(&out).vertices, only_mesh(&g).vertices);
}

#[test]
fn translation_is_exact() {
    let g = solid(shapes::icosphere(Point3::ZERO, 1.0, 1));
    let out = advect(&g, &VelocityField::Translation(Vec3::new(1.0, 0.0, 0.0)), 0.0, 2.0, 0.1, tol()).unwrap();
    for (p, q) in only_mesh(&g).vertices.iter().zip(&only_mesh(&out).vertices) {
        assert!((*q - *p - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn rotation_converges_at_fourth_order() {
    let u = VelocityField::Rotation { center: Point3::ZERO, omega: Vec3::new(0.0, 0.0, 1.0) };
    let x = Point3::new(1.0, 0.5, 0.25);
    let err = |dt: f64| {
        let n = (2.0 * PI / dt).round() as usize;
        rk4(&u, x, 0.0, 2.0 * PI / n as f64, n).distance(x)
    };
    let (e1, e2) = (err(0.2), err(0.1));
    let order = (e1 / e2).log2();
    assert!((3.7..4.3).contains(&order), "observed order {order}");
}

#[test]
fn deformation_stops_at_half_period() {
    for p in [Point3::new(0.3, 0.6, 0.1), Point3::new(0.9, 0.2, 0.7)] {
        assert!(deformation_field(p, 1.5, 3.0).norm() < 1e-15);
    }
}

/// Partial derivatives of the deformation field, differentiated by hand.
fn divergence_by_hand(x: Point3, t: f64, period: f64) -> f64 {
    let c = (PI * t / period).cos();
    let s2 = |a: f64| (2.0 * PI * a).sin();
    let du_dx = 2.0 * PI * s2(x.x) * s2(x.y) * s2(x.z) * c;
    let dv_dy = -PI * s2(x.x) * s2(x.y) * s2(x.z) * c;
    let dw_dz = -PI * s2(x.x) * s2(x.y) * s2(x.z) * c;
    du_dx + dv_dy + dw_dz
}

proptest! {
    #[test]
    fn deformation_is_divergence_free(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64, t in 0.0..3.0f64) {
        let p = Point3::new(x, y, z);
        prop_assert!(divergence_by_hand(p, t, 3.0).abs() < 1e-10);
        // The hand-derived partials agree with central differences of the field.
        let h = 1e-6;
        let d = |e: Vec3, k: usize| {
            let f = |q: Point3| { let v = deformation_field(q, t, 3.0); [v.x, v.y, v.z][k] };
            (f(p + e * h) - f(p - e * h)) / (2.0 * h)
        };
        let fd = d(Vec3::new(1.0, 0.0, 0.0), 0) + d(Vec3::new(0.0, 1.0, 0.0), 1) + d(Vec3::new(0.0, 0.0, 1.0), 2);
        prop_assert!(fd.abs() < 1e-7, "{}", fd);
    }

    #[test]
    fn deformation_reverses(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64, t in 0.0..3.0f64) {
        let p = Point3::new(x, y, z);
        prop_assert!((deformation_field(p, t, 3.0) + deformation_field(p, 3.0 - t, 3.0)).norm() < 1e-12);
    }
}

#[test]
fn regular_mesh_is_untouched() {
    let g = solid(shapes::icosphere(Point3::ZERO, 1.0, 2));
    let p = MarsParams::new(1.0, 0.05, 0.2, 0.1).unwrap();
    let (out, stats) = regularize_edges(&g, &p, tol()).unwrap();
    assert_eq!(stats, RegularizeStats::default());
    assert_eq!(only_mesh(&out), only_mesh(&g));
}

#[test]
fn long_edges_are_split() {
    // Unit cube: sides 1, face diagonals √2 ≈ 1.29·h_L.
    let g = solid(shapes::cube(Point3::ZERO, Point3::new(1.0, 1.0, 1.0)));
    let p = MarsParams::new(1.1, 0.1, 0.2, 0.1).unwrap();
    let (out, stats) = regularize_edges(&g, &p, tol()).unwrap();
    let m = only_mesh(&out);
    assert_eq!(stats.splits, 6);
    assert_eq!(m.vertices.len(), 14);
    assert!(m.is_closed());
    assert!(edge_lengths(&m).iter().all(|&l| l <= p.h_l && l >= p.r_tiny * p.h_l));
    assert_eq!(out.topology(), g.topology());
}

#[test]
fn short_edge_is_collapsed() {
    let mut mesh = shapes::icosphere(Point3::ZERO, 1.0, 2);
    let longest = edge_lengths(&mesh).into_iter().fold(0.0, f64::max);
    let h_l = 2.0 * longest;
    let [a, b, _] = mesh.faces[0];
    let (pa, pb) = (mesh.vertices[a as usize], mesh.vertices[b as usize]);
    mesh.vertices[a as usize] = pb + (pa - pb).normalized() * (0.05 * h_l);
    let before = mesh.vertices.len();
    let g = solid(mesh);
    let p = MarsParams::new(h_l, 0.1, 0.2, 0.1).unwrap();
    let (out, stats) = regularize_edges(&g, &p, tol()).unwrap();
    let m = only_mesh(&out);
    assert_eq!(stats.collapses, 1);
    assert_eq!(m.vertices.len(), before - 1);
    assert!(m.is_closed());
    assert_eq!(surface_shape(&m).euler, 2);
}

#[test]
fn equilateral_mesh_keeps_its_shape() {
    // Regular octahedron: every angle is 60°.
    let v = vec![
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(0.0, 0.0, -1.0),
    ];
    let f = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    let g = solid(TriMesh::new(v, f));
    let p = MarsParams::new(2.0, 0.1, 20f64.to_radians(), 0.1).unwrap();
    let (out, q) = improve_quality(&g, &p, tol()).unwrap();
    assert!(q.reached);
    assert_eq!((q.flips, q.smoothed), (0, 0));
    assert_eq!(only_mesh(&out), only_mesh(&g));
}

/// A rhombus split along its long diagonal, closed by a pyramid underneath.
fn sliver_pillow() -> TriMesh {
    let v = vec![
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 0.2, 0.0),
        Point3::new(0.0, -0.2, 0.0),
        Point3::new(0.0, 0.0, -1.0),
    ];
    let f = vec![[0, 1, 2], [1, 0, 3], [2, 1, 4], [0, 2, 4], [3, 0, 4], [1, 3, 4]];
    TriMesh::new(v, f)
}

#[test]
fn sliver_pair_is_flipped() {
    let mesh = sliver_pillow();
    let angle = |m: &TriMesh, f: [u32; 3]| crate::geom::Triangle::new(m.vertices[f[0] as usize], m.vertices[f[1] as usize], m.vertices[f[2] as usize]).min_angle();
    let before = angle(&mesh, [0, 1, 2]).min(angle(&mesh, [1, 0, 3]));
    let mut s = Surgery::new(&mesh);
    assert!(s.flip_within(0, 1, 0.0, 10.0));
    let m = s.into_mesh();
    assert!(m.is_closed());
    let after = angle(&m, [0, 3, 2]).min(angle(&m, [3, 1, 2]));
    assert!(after > before, "{before} -> {after}");
    // Vertex order survives compaction here since every vertex stays in use.
    assert!(m.faces.iter().any(|f| f.contains(&2) && f.contains(&3) && !f.contains(&4)));
}

#[test]
fn hopeless_mesh_reports_unreached() {
    // A needle tetrahedron: no flip is legal and smoothing is capped.
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(10.0, 0.0, 0.0),
        Point3::new(0.0, 0.1, 0.0),
        Point3::new(0.0, 0.0, 0.1),
    ];
    let g = solid(TriMesh::new(v, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]));
    let p = MarsParams::new(20.0, 0.001, 20f64.to_radians(), 0.1).unwrap();
    let (out, q) = improve_quality(&g, &p, tol()).unwrap();
    assert!(!q.reached);
    assert!(q.iterations <= QUALITY_ITERATION_CAP);
    assert!(q.max_displacement <= p.h_l / 10.0 + 1e-12);
    assert_eq!(out.topology(), g.topology());
}

#[test]
fn ball_inside_one_huge_cell() {
    let g = solid(shapes::icosphere(Point3::new(5.0, 5.0, 5.0), 1.0, 2));
    let cells = local_solutions(&g, 10.0, tol(), 7).unwrap();
    assert_eq!(cells.keys().copied().collect::<Vec<_>>(), vec![[0, 0, 0]]);
    let v = mesh_volume(&cells[&[0, 0, 0]]).unwrap();
    assert!((v - mesh_volume(&g).unwrap()).abs() < 1e-12);
}

#[test]
fn aligned_box_gives_full_cells() {
    let g = solid(shapes::cube(Point3::ZERO, Point3::new(2.0, 1.0, 1.0)));
    let cells = local_solutions(&g, 1.0, tol(), 7).unwrap();
    assert_eq!(cells.keys().copied().collect::<Vec<_>>(), vec![[0, 0, 0], [1, 0, 0]]);
    for c in cells.values() {
        assert!((mesh_volume(c).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn cells_partition_the_sphere_volume() {
    let g = solid(shapes::icosphere(Point3::new(0.13, 0.07, 0.21), 1.0, 2));
    let cells = local_solutions(&g, 0.5, tol(), 7).unwrap();
    let total: f64 = cells.values().map(|c| mesh_volume(c).unwrap()).sum();
    let exact = mesh_volume(&g).unwrap();
    assert!((total - exact).abs() / exact < 1e-6, "{total} vs {exact}");
}

#[test]
fn tracking_a_still_sphere() {
    let g = deformation_sphere(1.0 / 8.0);
    let p = MarsParams::with_h(1.0 / 8.0).unwrap();
    let r = track(&g, &VelocityField::Zero, &p, 1.0, &standard_checkpoints(1.0), tol()).unwrap();
    assert_eq!(r.checkpoints.len(), 6);
    assert!(r.topology_preserved());
    assert_eq!(r.steps, 8);
}
