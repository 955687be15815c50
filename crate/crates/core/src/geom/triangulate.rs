//! Constrained retriangulation of a single triangle.
//!
//! The heavy lifting is a constrained Delaunay triangulation from `spade`,
//! which splits crossing constraints for us. Around it sits the bookkeeping
//! that matters for mesh Booleans: points within ε of an edge become
//! boundary vertices so neighbouring triangles conform, constraints running
//! along an edge mark boundary pieces instead of entering the CDT, and
//! triangles outside the boundary loop are flood-filled away.

use std::collections::{HashSet, VecDeque};

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2, Triangulation};

use super::{point_segment_distance, Point3, Tolerance, Triangle, Vec3};
use crate::error::{Error, Result};

/// A planar straight-line graph bounded by a counterclockwise outer loop.
#[derive(Debug, Clone, Default)]
pub struct Pslg {
    pub points: Vec<[f64; 2]>,
    /// Counterclockwise loop of point indices.
    pub boundary: Vec<usize>,
    /// Interior constraint segments; they may cross each other.
    pub segments: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Default)]
pub struct PslgTriangulation {
    /// Input points followed by any points created at constraint crossings.
    pub points: Vec<[f64; 2]>,
    /// Counterclockwise triangles covering the region inside the boundary.
    pub triangles: Vec<[usize; 3]>,
    /// Sub-edges of interior constraints, as sorted index pairs.
    pub constraint_edges: Vec<[usize; 2]>,
}

#[derive(Clone, Copy)]
struct CdtVertex {
    pos: Point2<f64>,
    id: usize,
}

impl HasPosition for CdtVertex {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

const FRESH: usize = usize::MAX;

/// Triangulates the inside of `pslg.boundary`, honouring every segment.
pub fn triangulate_pslg(pslg: &Pslg) -> PslgTriangulation {
    let mut cdt: ConstrainedDelaunayTriangulation<CdtVertex> = ConstrainedDelaunayTriangulation::new();
    let mut handle: Vec<Option<FixedVertexHandle>> = vec![None; pslg.points.len()];
    let mut insert = |cdt: &mut ConstrainedDelaunayTriangulation<CdtVertex>, i: usize| -> Option<FixedVertexHandle> {
        if handle[i].is_none() {
            let [x, y] = pslg.points[i];
            let h = cdt.insert(CdtVertex { pos: Point2::new(x, y), id: i }).ok()?;
            handle[i] = Some(h);
        }
        handle[i]
    };

    let n = pslg.boundary.len();
    let bverts: Vec<Option<FixedVertexHandle>> = pslg.boundary.iter().map(|&i| insert(&mut cdt, i)).collect();
    let mut interior = Vec::new();
    for s in &pslg.segments {
        if let (Some(a), Some(b)) = (insert(&mut cdt, s[0]), insert(&mut cdt, s[1])) {
            interior.push((a, b));
        }
    }
    for k in 0..n {
        if let (Some(a), Some(b)) = (bverts[k], bverts[(k + 1) % n]) {
            if a != b {
                cdt.add_constraint_and_split(a, b, |pos| CdtVertex { pos, id: FRESH });
            }
        }
    }
    for (a, b) in interior {
        if a != b {
            cdt.add_constraint_and_split(a, b, |pos| CdtVertex { pos, id: FRESH });
        }
    }

    // Stable ids: inputs keep theirs, crossings are appended in handle order.
    let mut points = pslg.points.clone();
    let mut id_of = vec![0usize; cdt.num_vertices()];
    for v in cdt.vertices() {
        let d = v.data();
        id_of[v.fix().index()] = if d.id == FRESH {
            points.push([d.pos.x, d.pos.y]);
            points.len() - 1
        } else {
            d.id
        };
    }

    // Faces reachable from the hull without crossing a constraint lie outside.
    let mut outside: HashSet<usize> = HashSet::new();
    let mut queue = VecDeque::new();
    for f in cdt.inner_faces() {
        for e in f.adjacent_edges() {
            if e.rev().face().is_outer() && !e.is_constraint_edge() && outside.insert(f.fix().index()) {
                queue.push_back(f.fix());
            }
        }
    }
    while let Some(fh) = queue.pop_front() {
        for e in cdt.face(fh).adjacent_edges() {
            if e.is_constraint_edge() {
                continue;
            }
            if let Some(g) = e.rev().face().as_inner() {
                if outside.insert(g.fix().index()) {
                    queue.push_back(g.fix());
                }
            }
        }
    }

    let mut triangles = Vec::new();
    let mut inside_face: HashSet<usize> = HashSet::new();
    for f in cdt.inner_faces() {
        if outside.contains(&f.fix().index()) {
            continue;
        }
        inside_face.insert(f.fix().index());
        let [a, b, c] = f.vertices().map(|v| id_of[v.fix().index()]);
        triangles.push([a, b, c]);
    }

    let mut constraint_edges = Vec::new();
    for e in cdt.undirected_edges() {
        if !e.is_constraint_edge() {
            continue;
        }
        let d = e.as_directed();
        let both_inside = [d.face(), d.rev().face()]
            .iter()
            .all(|f| f.as_inner().is_some_and(|g| inside_face.contains(&g.fix().index())));
        if both_inside {
            let [a, b] = e.vertices().map(|v| id_of[v.fix().index()]);
            constraint_edges.push([a.min(b), a.max(b)]);
        }
    }
    constraint_edges.sort_unstable();
    PslgTriangulation { points, triangles, constraint_edges }
}

/// Orientation-preserving projection of a plane onto two coordinate axes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisProjection {
    i: usize,
    j: usize,
    k: usize,
    origin: Point3,
    normal: Vec3,
}

impl AxisProjection {
    pub fn new(origin: Point3, normal: Vec3) -> Self {
        let k = normal.dominant_axis();
        let (mut i, mut j) = ((k + 1) % 3, (k + 2) % 3);
        if normal[k] < 0.0 {
            std::mem::swap(&mut i, &mut j);
        }
        AxisProjection { i, j, k, origin, normal }
    }

    pub fn project(&self, p: Point3) -> [f64; 2] {
        [p[self.i], p[self.j]]
    }

    /// Inverse of `project` onto the plane.
    pub fn lift(&self, q: [f64; 2]) -> Point3 {
        let n = self.normal;
        let o = self.origin;
        let pk = o[self.k] - (n[self.i] * (q[0] - o[self.i]) + n[self.j] * (q[1] - o[self.j])) / n[self.k];
        let mut c = [0.0; 3];
        c[self.i] = q[0];
        c[self.j] = q[1];
        c[self.k] = pk;
        Point3::new(c[0], c[1], c[2])
    }
}

/// A triangle subdivided by constraints.
#[derive(Debug, Clone, Default)]
pub(crate) struct Subdivision {
    /// The corners, then the caller's extra points, then crossing points.
    pub points: Vec<Point3>,
    /// Triangles wound like the source triangle.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted index pairs of every edge that carries a constraint, including
    /// boundary pieces covered by constraints running along an edge.
    pub cut_edges: Vec<[usize; 2]>,
}

/// Subdivides `t` by `segments`, whose endpoints index `[a, b, c] ++ extra`.
///
/// Extra points within ε of an edge are treated as lying on it; all extra
/// points must be further than ε from the corners (callers snap first).
pub(crate) fn subdivide(t: &Triangle, extra: &[Point3], segments: &[[usize; 2]], tol: Tolerance) -> Subdivision {
    let eps = tol.eps();
    let corners = t.vertices();
    let mut points: Vec<Point3> = corners.to_vec();
    points.extend_from_slice(extra);

    // Place every point: Some((edge, param)) on the boundary, None inside.
    let mut place: Vec<Option<(usize, f64)>> = vec![Some((0, 0.0)), Some((1, 0.0)), Some((2, 0.0))];
    for &p in extra {
        let mut best: Option<(usize, f64, f64)> = None;
        for e in 0..3 {
            let (a, b) = (corners[e], corners[(e + 1) % 3]);
            let d = point_segment_distance(p, a, b);
            if d < eps && best.is_none_or(|(_, _, bd)| d < bd) {
                let ab = b - a;
                let s = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
                best = Some((e, s, d));
            }
        }
        place.push(best.map(|(e, s, _)| (e, s)));
    }

    // Boundary loop: each corner followed by the points on its outgoing edge.
    let mut on_edge: [Vec<(f64, usize)>; 3] = Default::default();
    for (idx, pl) in place.iter().enumerate().skip(3) {
        if let Some((e, s)) = pl {
            on_edge[*e].push((*s, idx));
        }
    }
    let mut boundary = Vec::new();
    for (e, list) in on_edge.iter_mut().enumerate() {
        list.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        boundary.push(e);
        boundary.extend(list.iter().map(|&(_, i)| i));
    }

    // Edge memberships: corners sit on two edges, at param 0 of one and 1 of the other.
    let edge_param = |idx: usize, e: usize| -> Option<f64> {
        if idx < 3 {
            if idx == e {
                Some(0.0)
            } else if idx == (e + 1) % 3 {
                Some(1.0)
            } else {
                None
            }
        } else {
            match place[idx] {
                Some((pe, s)) if pe == e => Some(s),
                _ => None,
            }
        }
    };

    let mut cut: HashSet<[usize; 2]> = HashSet::new();
    let mut interior = Vec::new();
    let mut seen = HashSet::new();
    for &[a, b] in segments {
        if a == b || !seen.insert([a.min(b), a.max(b)]) {
            continue;
        }
        let shared = (0..3).find_map(|e| Some((e, edge_param(a, e)?, edge_param(b, e)?)));
        if let Some((e, sa, sb)) = shared {
            // Along an edge: mark the boundary pieces between the endpoints.
            let (lo, hi) = (sa.min(sb), sa.max(sb));
            let mut chain: Vec<(f64, usize)> = vec![(0.0, e), (1.0, (e + 1) % 3)];
            chain.extend(on_edge[e].iter().copied());
            chain.sort_by(|x, y| x.0.total_cmp(&y.0));
            for w in chain.windows(2) {
                if w[0].0 >= lo && w[1].0 <= hi && w[0].1 != w[1].1 {
                    cut.insert([w[0].1.min(w[1].1), w[0].1.max(w[1].1)]);
                }
            }
        } else {
            // Split at interior points lying on the segment so that the
            // pieces conform with neighbours that carry those points.
            let (pa, pb) = (points[a], points[b]);
            let ab = pb - pa;
            let mut chain: Vec<(f64, usize)> = (3..points.len())
                .filter(|&k| k != a && k != b && place[k].is_none())
                .filter(|&k| point_segment_distance(points[k], pa, pb) < eps)
                .map(|k| ((points[k] - pa).dot(ab) / ab.norm_squared(), k))
                .filter(|&(s, _)| s > 0.0 && s < 1.0)
                .collect();
            chain.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut prev = a;
            for (_, k) in chain {
                interior.push([prev, k]);
                prev = k;
            }
            interior.push([prev, b]);
        }
    }

    if interior.is_empty() && boundary.len() == 3 {
        return Subdivision { points, triangles: vec![[0, 1, 2]], cut_edges: cut.into_iter().collect() };
    }

    let proj = AxisProjection::new(t.a, t.normal());
    let pslg = Pslg { points: points.iter().map(|&p| proj.project(p)).collect(), boundary, segments: interior };
    let tri = triangulate_pslg(&pslg);
    for &q in &tri.points[points.len()..] {
        points.push(proj.lift(q));
    }
    cut.extend(tri.constraint_edges.iter().copied());
    let mut cut_edges: Vec<[usize; 2]> = cut.into_iter().collect();
    cut_edges.sort_unstable();
    Subdivision { points, triangles: tri.triangles, cut_edges }
}

/// Retriangulates `t` so that every constraint segment becomes a union of
/// output edges.
///
/// Constraint endpoints must lie within ε of `t`. Endpoints within ε of a
/// corner are snapped onto it and ε-coincident endpoints are merged.
pub fn retriangulate(t: &Triangle, constraints: &[(Point3, Point3)], tol: Tolerance) -> Result<Vec<Triangle>> {
    if t.is_degenerate(tol) {
        return Err(Error::DegenerateInput);
    }
    let eps = tol.eps();
    let corners = t.vertices();
    let mut extra: Vec<Point3> = Vec::new();
    let mut index = |p: Point3| -> Result<usize> {
        let d = t.distance(p);
        if d > eps {
            return Err(Error::ConstraintOutsideTriangle { distance: d });
        }
        if let Some(c) = corners.iter().position(|&c| c.distance(p) < eps) {
            return Ok(c);
        }
        if let Some(k) = extra.iter().position(|&q| q.distance(p) < eps) {
            return Ok(3 + k);
        }
        extra.push(p);
        Ok(2 + extra.len())
    };
    let mut segments = Vec::with_capacity(constraints.len());
    for &(a, b) in constraints {
        segments.push([index(a)?, index(b)?]);
    }
    let sub = subdivide(t, &extra, &segments, tol);
    Ok(sub
        .triangles
        .iter()
        .map(|&[a, b, c]| Triangle::new(sub.points[a], sub.points[b], sub.points[c]))
        .collect())
}

/// Undirected edge multiset of a triangle list keyed by exact coordinates.
#[cfg(test)]
pub(crate) fn edge_keys(tris: &[Triangle]) -> std::collections::HashMap<([u64; 3], [u64; 3]), usize> {
    let key = |p: Point3| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
    let mut m = std::collections::HashMap::new();
    for t in tris {
        for (u, v) in [(t.a, t.b), (t.b, t.c), (t.c, t.a)] {
            let (ku, kv) = (key(u), key(v));
            *m.entry(if ku < kv { (ku, kv) } else { (kv, ku) }).or_insert(0) += 1;
        }
    }
    m
}
