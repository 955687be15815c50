//! Tolerance-aware geometric primitives.
//!
//! Every predicate in the crate is phrased against a single [`Tolerance`]:
//! two points closer than `eps` are the same point, a triangle with area
//! below `eps²` is degenerate, and a vertex within `eps` of a plane lies on it.

mod mesh;
mod triangulate;
mod tritri;
mod vec;

pub mod bvh;

pub use mesh::{closure_defect, signed_volume, TriMesh};
pub use triangulate::{retriangulate, triangulate_pslg, Pslg, PslgTriangulation};
pub(crate) use triangulate::{subdivide, Subdivision};
pub use tritri::{tri_tri_intersect, TriTriIntersection};
pub(crate) use tritri::intersect_unchecked;
pub use vec::{Aabb, Point3, Vec3};

use crate::error::{Error, Result};

/// The world-length tolerance fixed for one Boolean computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    eps: f64,
}

impl Tolerance {
    /// Relative factor applied to the bounding-box diagonal by [`Tolerance::for_bounds`].
    pub const RELATIVE: f64 = 1e-9;

    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 {
            Ok(Tolerance { eps })
        } else {
            Err(Error::InvalidTolerance(eps))
        }
    }

    /// `1e-9 ×` the diagonal of `bounds`, falling back to `1e-9` for empty or flat boxes.
    pub fn for_bounds(bounds: &Aabb) -> Self {
        let d = bounds.diagonal();
        let eps = if d.is_finite() && d > 0.0 { d * Self::RELATIVE } else { Self::RELATIVE };
        Tolerance { eps }
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Triangles with less area than this are degenerate.
    #[inline]
    pub fn area_floor(&self) -> f64 {
        self.eps * self.eps
    }

    /// `true` when `|n1 × n2| < eps·|n1||n2|`.
    pub fn parallel(&self, n1: Vec3, n2: Vec3) -> bool {
        n1.cross(n2).norm() < self.eps * n1.norm() * n2.norm()
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: Self::RELATIVE }
    }
}

/// ε-equality of points: `|p − q| < eps`. Symmetric and reflexive, not transitive.
pub fn eps_eq(p: Point3, q: Point3, tol: Tolerance) -> bool {
    p.distance(q) < tol.eps()
}

/// A triangle whose counterclockwise winding defines its normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub a: Point3,
    pub b: Point3,
    pub c: Point3,
}

impl Triangle {
    pub const fn new(a: Point3, b: Point3, c: Point3) -> Self {
        Triangle { a, b, c }
    }

    pub fn vertices(&self) -> [Point3; 3] {
        [self.a, self.b, self.c]
    }

    /// Area-weighted normal (twice the area in magnitude).
    pub fn normal(&self) -> Vec3 {
        (self.b - self.a).cross(self.c - self.a)
    }

    pub fn unit_normal(&self) -> Vec3 {
        self.normal().normalized()
    }

    pub fn area(&self) -> f64 {
        0.5 * self.normal().norm()
    }

    pub fn centroid(&self) -> Point3 {
        (self.a + self.b + self.c) / 3.0
    }

    pub fn flipped(&self) -> Triangle {
        Triangle::new(self.a, self.c, self.b)
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points([self.a, self.b, self.c])
    }

    pub fn is_degenerate(&self, tol: Tolerance) -> bool {
        !(self.area() >= tol.area_floor())
    }

    /// Closest point on the triangle to `p`.
    pub fn closest_point(&self, p: Point3) -> Point3 {
        closest_point_on_triangle(p, self.a, self.b, self.c)
    }

    pub fn distance(&self, p: Point3) -> f64 {
        self.closest_point(p).distance(p)
    }

    /// Smallest interior angle in radians.
    pub fn min_angle(&self) -> f64 {
        let [a, b, c] = self.vertices();
        angle_at(a, b, c).min(angle_at(b, c, a)).min(angle_at(c, a, b))
    }
}

/// Interior angle at `p` of the corner `q - p - r`.
pub fn angle_at(p: Point3, q: Point3, r: Point3) -> f64 {
    let u = q - p;
    let v = r - p;
    let c = u.cross(v).norm();
    let d = u.dot(v);
    c.atan2(d)
}

/// Closest point on triangle `abc` to `p` (Ericson's region classification).
pub fn closest_point_on_triangle(p: Point3, a: Point3, b: Point3, c: Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Distance from `p` to the segment `ab`.
pub fn point_segment_distance(p: Point3, a: Point3, b: Point3) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// An ordered polyline; when `closed`, the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolyCurve {
    pub vertices: Vec<Point3>,
    pub closed: bool,
}

impl PolyCurve {
    pub fn new(vertices: Vec<Point3>, closed: bool) -> Self {
        PolyCurve { vertices, closed }
    }

    pub fn segment_count(&self) -> usize {
        match self.vertices.len() {
            0 | 1 => 0,
            n if self.closed => n,
            n => n - 1,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point3, Point3)> + '_ {
        let n = self.vertices.len();
        (0..self.segment_count()).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn distance(&self, p: Point3) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_eq_cases() {
        let tol = Tolerance::new(1e-9).unwrap();
        let o = Point3::ZERO;
        assert!(eps_eq(o, o, tol));
        assert!(!eps_eq(o, Point3::new(0.0, 0.0, 2e-9), tol));
        assert!(eps_eq(o, Point3::new(0.0, 0.0, 0.4e-9), tol));
    }

    #[test]
    fn tolerance_rejects_nonpositive() {
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(-1.0).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
    }

    #[test]
    fn closest_point_regions() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let t = Triangle::new(a, b, c);
        assert_eq!(t.closest_point(Point3::new(-1.0, -1.0, 0.0)), a);
        let q = t.closest_point(Point3::new(0.25, 0.25, 3.0));
        assert!((q - Point3::new(0.25, 0.25, 0.0)).norm() < 1e-15);
        let e = t.closest_point(Point3::new(1.0, 1.0, 0.0));
        assert!((e - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn degeneracy_floor_is_eps_squared() {
        let tol = Tolerance::new(1e-3).unwrap();
        let thin = Triangle::new(Point3::ZERO, Point3::new(1.0, 0.0, 0.0), Point3::new(0.5, 1e-7, 0.0));
        assert!(thin.is_degenerate(tol));
        let fat = Triangle::new(Point3::ZERO, Point3::new(1.0, 0.0, 0.0), Point3::new(0.5, 1e-3, 0.0));
        assert!(!fat.is_degenerate(tol));
    }
}
