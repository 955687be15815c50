//! Geometry fixtures shared by the integration tests.

#![allow(dead_code)]

use yinset::boolean::complement;
use yinset::shapes::{self, Frame};
use yinset::{GElement, GluedSurface, Orientation, Point3, Tolerance, TriMesh};

pub fn tol() -> Tolerance {
    Tolerance::new(1e-9).unwrap()
}

pub fn element(parts: Vec<(TriMesh, Orientation)>) -> GElement {
    let surfaces = parts.into_iter().map(|(m, o)| GluedSurface::new(m, o)).collect();
    GElement::from_surfaces(surfaces, tol()).unwrap()
}

pub fn solid(m: TriMesh) -> GElement {
    element(vec![(m, Orientation::Positive)])
}

pub fn ball(c: Point3, r: f64, level: u32) -> GElement {
    solid(shapes::icosphere(c, r, level))
}

pub fn boxed(lo: [f64; 3], hi: [f64; 3]) -> GElement {
    solid(shapes::cube(Point3::new(lo[0], lo[1], lo[2]), Point3::new(hi[0], hi[1], hi[2])))
}

pub fn shell(c: Point3, outer: f64, inner: f64) -> GElement {
    element(vec![
        (shapes::icosphere(c, outer, 2), Orientation::Positive),
        (shapes::icosphere(c, inner, 2), Orientation::Negative),
    ])
}

pub fn exterior_of_ball(c: Point3, r: f64) -> GElement {
    complement(&ball(c, r, 2), tol()).unwrap()
}

/// Two solid tori, the first with a spherical and a toroidal cavity, the
/// second with one toroidal cavity: surfaces S1+, S2-, S3+, S4-, S5-.
pub fn hasse_figure() -> GElement {
    let a = Point3::ZERO;
    let b = Point3::new(5.1, 0.0, 0.0);
    element(vec![
        (shapes::torus(a, 1.6, 0.9, 40, 20), Orientation::Positive),
        (shapes::icosphere(Point3::new(1.6, 0.0, 0.0), 0.35, 2), Orientation::Negative),
        (shapes::torus(b, 1.5, 0.8, 40, 20), Orientation::Positive),
        (shapes::torus(Point3::new(-1.6, 0.0, 0.0), 0.3, 0.2, 16, 10), Orientation::Negative),
        (shapes::torus(Point3::new(6.6, 0.0, 0.0), 0.3, 0.2, 16, 10), Orientation::Negative),
    ])
}

/// Outer ellipsoid with an inner one removed; they share the equator ring,
/// so the boundaries touch along a circle.
pub fn tangent_ellipsoids() -> GElement {
    element(vec![
        (shapes::ellipsoid(Point3::ZERO, 2.0, 1.0, 16, 32), Orientation::Positive),
        (shapes::ellipsoid(Point3::ZERO, 2.0, 0.5, 16, 32), Orientation::Negative),
    ])
}

pub const TORUS_MAJOR: usize = 32;
pub const TORUS_MINOR: usize = 16;

/// Solid torus about the z axis, core radius 2, tube radius 0.5.
pub fn big_torus() -> GElement {
    solid(shapes::torus(Point3::ZERO, 2.0, 0.5, TORUS_MAJOR, TORUS_MINOR))
}

/// Exterior of two balls sitting in the tube of [`big_torus`] at opposite
/// meridians; each ball's equator is the torus's meridian ring, so each
/// touches the torus along a circle.
pub fn two_tangent_cavities() -> GElement {
    let ball_at = |i: usize| {
        let f = Frame::meridian(i, TORUS_MAJOR);
        let c = Point3::ZERO + f.u * 2.0;
        shapes::uv_surface(c, 0.5, 0.5, f, &shapes::uniform_latitudes(8), TORUS_MINOR)
    };
    element(vec![(ball_at(0), Orientation::Negative), (ball_at(TORUS_MAJOR / 2), Orientation::Negative)])
}

/// Named operand pairs for the law checks.
pub fn pairs() -> Vec<(&'static str, GElement, GElement)> {
    let o = Point3::ZERO;
    let p = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
    vec![
        ("nested balls", ball(o, 2.0, 2), ball(p(0.1, 0.05, 0.0), 1.0, 2)),
        (
            "tangent spheres",
            solid(shapes::uv_sphere(o, 1.0, 8, 16)),
            solid(shapes::uv_sphere(p(0.0, 0.0, 2.0), 1.0, 8, 16)),
        ),
        ("cube/cube offset", boxed([0.0; 3], [1.0; 3]), boxed([0.3, 0.2, 0.1], [1.3, 1.2, 1.1])),
        ("cube/cube coplanar", boxed([0.0; 3], [1.0; 3]), boxed([0.5, 0.25, 0.0], [1.5, 0.75, 1.0])),
        ("torus/ball", solid(shapes::torus(o, 1.0, 0.4, 32, 16)), ball(p(1.0, 0.1, 0.05), 0.5, 2)),
        ("shell/ball", shell(o, 2.0, 1.0), ball(p(1.5, 0.1, 0.0), 0.8, 2)),
        ("exterior/ball", exterior_of_ball(o, 1.0), ball(p(0.9, 0.1, 0.0), 0.7, 2)),
        ("ball/exterior", ball(o, 1.0, 2), exterior_of_ball(p(0.8, 0.0, 0.1), 0.6)),
        ("disjoint balls", ball(o, 1.0, 2), ball(p(3.0, 0.0, 0.0), 1.0, 2)),
        ("ball/cube", ball(o, 1.0, 2), boxed([0.2, -0.5, -0.6], [1.4, 0.7, 0.5])),
        ("shell/shell", shell(o, 2.0, 1.0), shell(p(0.7, 0.2, 0.1), 1.8, 0.9)),
        ("hasse figure/ball", hasse_figure(), ball(p(0.0, 1.6, 0.0), 0.6, 2)),
        (
            "linked tori",
            solid(shapes::torus(o, 1.0, 0.25, 32, 12)),
            solid(rotate_x(shapes::torus(o, 1.0, 0.25, 32, 12), p(1.0, 0.0, 0.0))),
        ),
        ("ball/itself", ball(o, 1.0, 2), ball(o, 1.0, 2)),
    ]
}

/// Rotates a z-axis mesh so its axis becomes y, then moves it to `c`.
fn rotate_x(mut m: TriMesh, c: Point3) -> TriMesh {
    for v in &mut m.vertices {
        *v = Point3::new(v.x, -v.z, v.y) + (c - Point3::ZERO);
    }
    m
}

/// Every operand of [`pairs`], plus the figure fixtures that are valid
/// representations on their own. The tangent ellipsoids are left out: as
/// given, one atom stands for a region with two components.
pub fn all_fixtures() -> Vec<(String, GElement)> {
    let mut out: Vec<(String, GElement)> = Vec::new();
    for (name, a, b) in pairs() {
        out.push((format!("{name} (A)"), a));
        out.push((format!("{name} (B)"), b));
    }
    out.push(("hasse figure".into(), hasse_figure()));
    out.push(("big torus".into(), big_torus()));
    out.push(("two tangent cavities".into(), two_tangent_cavities()));
    out
}

