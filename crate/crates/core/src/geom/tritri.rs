//! ε-classified triangle–triangle intersection.

use super::{Point3, Tolerance, Triangle, Vec3};
use crate::error::{Error, Result};

/// Result of intersecting two triangles.
#[derive(Debug, Clone, PartialEq)]
pub enum TriTriIntersection {
    None,
    Point(Point3),
    Segment(Point3, Point3),
    /// ε-coplanar overlap with positive area; the polygon is counterclockwise
    /// about the first triangle's normal.
    CoplanarRegion(Vec<Point3>),
}

impl TriTriIntersection {
    pub fn is_none(&self) -> bool {
        matches!(self, TriTriIntersection::None)
    }

    /// Segments contributed to an intersection set: the segment itself, or
    /// the boundary edges of a coplanar overlap.
    pub fn segments(&self) -> Vec<(Point3, Point3)> {
        match self {
            TriTriIntersection::Segment(a, b) => vec![(*a, *b)],
            TriTriIntersection::CoplanarRegion(poly) => {
                let n = poly.len();
                (0..n).map(|i| (poly[i], poly[(i + 1) % n])).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Intersects two non-degenerate triangles under tolerance `tol`.
///
/// Shared edges and vertices come back as `Segment`/`Point`; coplanar overlap
/// with area above the degeneracy floor comes back as `CoplanarRegion`.
pub fn tri_tri_intersect(t1: &Triangle, t2: &Triangle, tol: Tolerance) -> Result<TriTriIntersection> {
    if t1.is_degenerate(tol) || t2.is_degenerate(tol) {
        return Err(Error::DegenerateInput);
    }
    Ok(intersect_unchecked(t1, t2, tol))
}

pub(crate) fn intersect_unchecked(t1: &Triangle, t2: &Triangle, tol: Tolerance) -> TriTriIntersection {
    let eps = tol.eps();
    if !t1.bounds().inflated(eps).overlaps(&t2.bounds()) {
        return TriTriIntersection::None;
    }
    let n1 = t1.unit_normal();
    let n2 = t2.unit_normal();
    let v1 = t1.vertices();
    let v2 = t2.vertices();

    let d2 = v2.map(|q| snap((q - t1.a).dot(n1), eps));
    let d1 = v1.map(|p| snap((p - t2.a).dot(n2), eps));
    if same_strict_sign(&d2) || same_strict_sign(&d1) {
        return TriTriIntersection::None;
    }
    if d2.iter().all(|&d| d == 0.0) || d1.iter().all(|&d| d == 0.0) {
        return coplanar(t1, t2, tol);
    }

    let s1 = plane_section(&v1, &d1);
    let s2 = plane_section(&v2, &d2);
    let mut dir = n1.cross(n2);
    if dir.norm() < 1e-300 {
        return TriTriIntersection::None;
    }
    dir = dir.normalized();

    let interval = |pts: &[Point3]| {
        let mut lo = (f64::INFINITY, Point3::ZERO);
        let mut hi = (f64::NEG_INFINITY, Point3::ZERO);
        for &p in pts {
            let t = p.dot(dir);
            if t < lo.0 {
                lo = (t, p);
            }
            if t > hi.0 {
                hi = (t, p);
            }
        }
        (lo, hi)
    };
    let (lo1, hi1) = interval(&s1);
    let (lo2, hi2) = interval(&s2);
    let lo = if lo1.0 >= lo2.0 { lo1 } else { lo2 };
    let hi = if hi1.0 <= hi2.0 { hi1 } else { hi2 };
    if hi.0 < lo.0 - eps {
        return TriTriIntersection::None;
    }
    if hi.1.distance(lo.1) < eps || hi.0 - lo.0 <= eps {
        return TriTriIntersection::Point(lo.1);
    }
    TriTriIntersection::Segment(lo.1, hi.1)
}

fn snap(d: f64, eps: f64) -> f64 {
    if d.abs() < eps {
        0.0
    } else {
        d
    }
}

fn same_strict_sign(d: &[f64; 3]) -> bool {
    (d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0) || (d[0] < 0.0 && d[1] < 0.0 && d[2] < 0.0)
}

/// Points where a triangle meets the other triangle's plane.
fn plane_section(v: &[Point3; 3], d: &[f64; 3]) -> Vec<Point3> {
    let mut pts = Vec::with_capacity(3);
    for i in 0..3 {
        let j = (i + 1) % 3;
        if d[i] == 0.0 {
            pts.push(v[i]);
        }
        if (d[i] > 0.0 && d[j] < 0.0) || (d[i] < 0.0 && d[j] > 0.0) {
            let t = d[i] / (d[i] - d[j]);
            pts.push(v[i].lerp(v[j], t));
        }
    }
    pts
}

/// Local 2D frame on a plane through `origin` with normal `n`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PlaneFrame {
    pub origin: Point3,
    pub u: Vec3,
    pub v: Vec3,
}

impl PlaneFrame {
    pub fn new(origin: Point3, n: Vec3) -> Self {
        let u = n.any_orthogonal();
        let v = n.normalized().cross(u);
        PlaneFrame { origin, u, v }
    }

    pub fn project(&self, p: Point3) -> [f64; 2] {
        let d = p - self.origin;
        [d.dot(self.u), d.dot(self.v)]
    }

    pub fn lift(&self, q: [f64; 2]) -> Point3 {
        self.origin + self.u * q[0] + self.v * q[1]
    }
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn coplanar(t1: &Triangle, t2: &Triangle, tol: Tolerance) -> TriTriIntersection {
    let eps = tol.eps();
    let n1 = t1.unit_normal();
    let frame = PlaneFrame::new(t1.a, n1);
    let p1: Vec<[f64; 2]> = t1.vertices().iter().map(|&p| frame.project(p)).collect();
    let mut p2: Vec<[f64; 2]> = t2.vertices().iter().map(|&p| frame.project(p)).collect();
    if cross2(p2[0], p2[1], p2[2]) < 0.0 {
        p2.reverse();
    }

    // Sutherland–Hodgman: clip t2 by the three edge half-planes of t1.
    let mut poly = p2;
    for i in 0..3 {
        let a = p1[i];
        let b = p1[(i + 1) % 3];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let side = |p: [f64; 2]| cross2(a, b, p) / len;
        let mut out = Vec::with_capacity(poly.len() + 2);
        for k in 0..poly.len() {
            let cur = poly[k];
            let nxt = poly[(k + 1) % poly.len()];
            let sc = side(cur);
            let sn = side(nxt);
            let cin = sc >= -eps;
            let nin = sn >= -eps;
            if cin {
                out.push(cur);
            }
            if cin != nin && (sc - sn).abs() > 0.0 {
                let t = sc / (sc - sn);
                if t > 0.0 && t < 1.0 {
                    out.push([cur[0] + (nxt[0] - cur[0]) * t, cur[1] + (nxt[1] - cur[1]) * t]);
                }
            }
        }
        poly = out;
        if poly.is_empty() {
            return TriTriIntersection::None;
        }
    }

    // Merge ε-coincident consecutive vertices.
    let mut clean: Vec<[f64; 2]> = Vec::with_capacity(poly.len());
    for p in poly {
        if let Some(q) = clean.last() {
            if ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() < eps {
                continue;
            }
        }
        clean.push(p);
    }
    while clean.len() > 1 {
        let (f, l) = (clean[0], clean[clean.len() - 1]);
        if ((f[0] - l[0]).powi(2) + (f[1] - l[1]).powi(2)).sqrt() < eps {
            clean.pop();
        } else {
            break;
        }
    }

    let lifted: Vec<Point3> = clean.iter().map(|&q| frame.lift(q)).collect();
    match lifted.len() {
        0 => TriTriIntersection::None,
        1 => TriTriIntersection::Point(lifted[0]),
        _ => {
            let mut area = 0.0;
            for i in 1..clean.len().saturating_sub(1) {
                area += 0.5 * cross2(clean[0], clean[i], clean[i + 1]);
            }
            if area.abs() >= tol.area_floor() && clean.len() >= 3 && !thin(&lifted, eps) {
                TriTriIntersection::CoplanarRegion(lifted)
            } else {
                // Zero-area contact: report its extent as a segment.
                let (mut best, mut bi, mut bj) = (0.0, 0, 0);
                for i in 0..lifted.len() {
                    for j in i + 1..lifted.len() {
                        let d = lifted[i].distance(lifted[j]);
                        if d > best {
                            best = d;
                            bi = i;
                            bj = j;
                        }
                    }
                }
                if best < eps {
                    TriTriIntersection::Point(lifted[0])
                } else {
                    TriTriIntersection::Segment(lifted[bi], lifted[bj])
                }
            }
        }
    }
}

/// A polygon whose every vertex is within `eps` of the line through its two
/// farthest vertices.
fn thin(poly: &[Point3], eps: f64) -> bool {
    let (mut best, mut bi, mut bj) = (0.0, 0, 0);
    for i in 0..poly.len() {
        for j in i + 1..poly.len() {
            let d = poly[i].distance(poly[j]);
            if d > best {
                best = d;
                bi = i;
                bj = j;
            }
        }
    }
    if best == 0.0 {
        return true;
    }
    let dir = (poly[bj] - poly[bi]) / best;
    poly.iter().all(|&p| {
        let w = p - poly[bi];
        (w - dir * w.dot(dir)).norm() < eps
    })
}
