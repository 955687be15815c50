//! Detection of surface–surface intersections and cutting of surfaces into
//! patches along them.
//!
//! All geometry of one cut lives in a single vertex pool with ε snap
//! rounding, so patches coming from different surfaces share vertex ids
//! wherever they meet and can be glued by id.

mod octree;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

pub use octree::{build_octree, OctCell, Octree, DEFAULT_LEAF_CAP, DEFAULT_MAX_DEPTH};

use crate::brep::{GluedSurface, Orientation, RealizableSpadopag};
use crate::error::{Error, Result};
use crate::geom::{intersect_unchecked, point_segment_distance, subdivide, Point3, PolyCurve, Tolerance, Triangle, TriTriIntersection, Vec3};

/// A triangle of a surface in an input list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriRef {
    pub surface: usize,
    pub triangle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionSegment {
    pub a: Point3,
    pub b: Point3,
    /// The two triangles whose intersection produced the segment.
    pub sources: [TriRef; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolatedPoint {
    pub p: Point3,
    pub sources: [TriRef; 2],
}

/// Pairwise intersections of a list of surfaces.
#[derive(Debug, Clone, Default)]
pub struct IntersectionSet {
    pub segments: Vec<IntersectionSegment>,
    /// Contact points not lying on any segment; they do not cut.
    pub isolated_points: Vec<IsolatedPoint>,
    /// Segments chained into polylines, split at junctions.
    pub curves: Vec<PolyCurve>,
    /// Segment indices making up each curve.
    pub curve_segments: Vec<Vec<usize>>,
}

impl IntersectionSet {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Chains segments into curves and drops contact points that lie on a segment.
    pub fn from_parts(segments: Vec<IntersectionSegment>, points: Vec<IsolatedPoint>, tol: Tolerance) -> IntersectionSet {
        let eps = tol.eps();
        let mut pool = VertexPool::new(eps);
        let ends: Vec<(u32, u32)> = segments.iter().map(|s| (pool.insert(s.a), pool.insert(s.b))).collect();
        let mut edge_segs: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (k, &(a, b)) in ends.iter().enumerate() {
            if a != b {
                edge_segs.entry((a.min(b), a.max(b))).or_default().push(k);
            }
        }
        let mut edges: Vec<(u32, u32)> = edge_segs.keys().copied().collect();
        edges.sort_unstable();
        let chains = chain_edges(&edges);
        let mut curves = Vec::with_capacity(chains.len());
        let mut curve_segments = Vec::with_capacity(chains.len());
        for (verts, closed) in chains {
            let mut segs = Vec::new();
            let n = verts.len();
            let m = if closed { n } else { n - 1 };
            for i in 0..m {
                let (a, b) = (verts[i], verts[(i + 1) % n]);
                segs.extend_from_slice(&edge_segs[&(a.min(b), a.max(b))]);
            }
            segs.sort_unstable();
            curves.push(PolyCurve::new(verts.iter().map(|&v| pool.points[v as usize]).collect(), closed));
            curve_segments.push(segs);
        }

        let mut isolated: Vec<IsolatedPoint> = Vec::new();
        for pt in points {
            let on_segment = segments.iter().any(|s| point_segment_distance(pt.p, s.a, s.b) < eps);
            if !on_segment && !isolated.iter().any(|q| q.p.distance(pt.p) < eps) {
                isolated.push(pt);
            }
        }
        IntersectionSet { segments, isolated_points: isolated, curves, curve_segments }
    }
}

/// Splits an undirected edge set into maximal chains between vertices of
/// degree other than two, then the remaining cycles.
fn chain_edges(edges: &[(u32, u32)]) -> Vec<(Vec<u32>, bool)> {
    let mut adj: HashMap<u32, Vec<(u32, usize)>> = HashMap::new();
    for (k, &(a, b)) in edges.iter().enumerate() {
        adj.entry(a).or_default().push((b, k));
        adj.entry(b).or_default().push((a, k));
    }
    let mut used = vec![false; edges.len()];
    let mut out = Vec::new();
    let mut starts: Vec<u32> = adj.iter().filter(|(_, v)| v.len() != 2).map(|(&k, _)| k).collect();
    starts.sort_unstable();
    let walk = |start: u32, first: (u32, usize), used: &mut Vec<bool>| -> Vec<u32> {
        let mut verts = vec![start];
        let (mut cur, mut e) = first;
        loop {
            used[e] = true;
            verts.push(cur);
            if adj[&cur].len() != 2 {
                break;
            }
            match adj[&cur].iter().find(|&&(_, k)| !used[k]) {
                Some(&next) => {
                    e = next.1;
                    cur = next.0;
                }
                None => break,
            }
        }
        verts
    };
    for s in starts {
        for &(nb, k) in &adj[&s] {
            if !used[k] {
                out.push((walk(s, (nb, k), &mut used), false));
            }
        }
    }
    for k in 0..edges.len() {
        if !used[k] {
            let (a, b) = edges[k];
            let mut verts = walk(a, (b, k), &mut used);
            if verts.last() == Some(&a) {
                verts.pop();
            }
            out.push((verts, true));
        }
    }
    out
}

/// Point pool with ε snap rounding: a point within ε of an existing one
/// reuses the earliest such id.
#[derive(Debug, Clone)]
pub(crate) struct VertexPool {
    eps: f64,
    pub points: Vec<Point3>,
    grid: HashMap<[i64; 3], Vec<u32>>,
}

impl VertexPool {
    pub fn new(eps: f64) -> Self {
        VertexPool { eps, points: Vec::new(), grid: HashMap::new() }
    }

    fn key(&self, p: Point3) -> [i64; 3] {
        [(p.x / self.eps).floor() as i64, (p.y / self.eps).floor() as i64, (p.z / self.eps).floor() as i64]
    }

    pub fn find(&self, p: Point3) -> Option<u32> {
        let k = self.key(p);
        let mut best: Option<u32> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &i in ids {
                            if self.points[i as usize].distance(p) < self.eps && best.is_none_or(|b| i < b) {
                                best = Some(i);
                            }
                        }
                    }
                }
            }
        }
        best
    }

    pub fn insert(&mut self, p: Point3) -> u32 {
        if let Some(i) = self.find(p) {
            return i;
        }
        let id = self.points.len() as u32;
        self.points.push(p);
        let k = self.key(p);
        self.grid.entry(k).or_default().push(id);
        id
    }
}

/// Finds every pairwise intersection among the triangles of `surfaces`.
///
/// Triangles of one surface sharing a mesh vertex are not tested against
/// each other; degenerate triangles are skipped.
pub fn detect_intersections(surfaces: &[GluedSurface], tol: Tolerance) -> Result<IntersectionSet> {
    let mut refs = Vec::new();
    let mut tris = Vec::new();
    let mut locals = Vec::new();
    for (s, surf) in surfaces.iter().enumerate() {
        for (f, face) in surf.mesh.faces.iter().enumerate() {
            let t = surf.mesh.triangle(f);
            if t.is_degenerate(tol) {
                continue;
            }
            refs.push(TriRef { surface: s, triangle: f });
            tris.push(t);
            locals.push(*face);
        }
    }
    let tree = build_octree(&tris, DEFAULT_LEAF_CAP, DEFAULT_MAX_DEPTH, tol);
    let pairs = tree.candidate_pairs();
    let hits: Vec<(usize, usize, TriTriIntersection)> = pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let (i, j) = (i as usize, j as usize);
            if refs[i].surface == refs[j].surface && locals[i].iter().any(|v| locals[j].contains(v)) {
                return None;
            }
            let r = intersect_unchecked(&tris[i], &tris[j], tol);
            (!r.is_none()).then_some((i, j, r))
        })
        .collect();

    let mut segments = Vec::new();
    let mut points = Vec::new();
    for (i, j, r) in hits {
        let sources = [refs[i], refs[j]];
        match r {
            TriTriIntersection::Point(p) => points.push(IsolatedPoint { p, sources }),
            TriTriIntersection::Segment(a, b) if a.distance(b) < tol.eps() => points.push(IsolatedPoint { p: a, sources }),
            other => {
                for (a, b) in other.segments() {
                    if a.distance(b) >= tol.eps() {
                        segments.push(IntersectionSegment { a, b, sources });
                    }
                }
            }
        }
    }
    Ok(IntersectionSet::from_parts(segments, points, tol))
}

/// Intersections among all surfaces of a spadopag, in atom order.
pub fn detect(g: &RealizableSpadopag, tol: Tolerance) -> Result<IntersectionSet> {
    let surfaces: Vec<GluedSurface> = g.surfaces().cloned().collect();
    detect_intersections(&surfaces, tol)
}

/// A connected piece of a cut surface.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    /// Faces over the shared vertex pool, wound with normals pointing away from the interior.
    pub faces: Vec<[u32; 3]>,
    /// Unit normal of the original facet each face came from, in the same sense.
    pub normals: Vec<Vec3>,
    pub source_surface: usize,
    pub orientation: Orientation,
    /// Chained boundary half-edges (vertex ids, implicitly closed).
    pub boundary_loops: Vec<Vec<u32>>,
}

/// Patches and untouched closed surfaces over one vertex pool.
#[derive(Debug, Clone, Default)]
pub struct SegmentedSpadopag {
    pub vertices: Vec<Point3>,
    pub patches: Vec<SurfacePatch>,
    /// Surfaces no curve touches; `id` holds their index in the cut input.
    pub closed_surfaces: Vec<GluedSurface>,
}

impl SegmentedSpadopag {
    pub fn triangle(&self, face: [u32; 3]) -> Triangle {
        let v = |i: u32| self.vertices[i as usize];
        Triangle::new(v(face[0]), v(face[1]), v(face[2]))
    }

    pub fn patch_triangles(&self, p: usize) -> Vec<Triangle> {
        self.patches[p].faces.iter().map(|&f| self.triangle(f)).collect()
    }

    pub fn patch_area(&self, p: usize) -> f64 {
        self.patch_triangles(p).iter().map(|t| t.area()).sum()
    }

    /// Centroid of the largest face of patch `p`, with its parent normal.
    pub fn patch_sample(&self, p: usize) -> (Point3, Vec3) {
        let patch = &self.patches[p];
        let (k, t) = patch
            .faces
            .iter()
            .map(|&f| self.triangle(f))
            .enumerate()
            .max_by(|a, b| a.1.area().total_cmp(&b.1.area()))
            .expect("patches are nonempty");
        (t.centroid(), patch.normals[k])
    }

    pub fn boundary_curves(&self, p: usize) -> Vec<PolyCurve> {
        self.patches[p]
            .boundary_loops
            .iter()
            .map(|l| PolyCurve::new(l.iter().map(|&v| self.vertices[v as usize]).collect(), true))
            .collect()
    }

    /// Reverses every patch and closed surface.
    pub fn reversed(&self) -> SegmentedSpadopag {
        let patches = self
            .patches
            .iter()
            .map(|p| SurfacePatch {
                faces: p.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
                normals: p.normals.iter().map(|&n| -n).collect(),
                source_surface: p.source_surface,
                orientation: p.orientation.flipped(),
                boundary_loops: p.boundary_loops.iter().map(|l| l.iter().rev().copied().collect()).collect(),
            })
            .collect();
        SegmentedSpadopag {
            vertices: self.vertices.clone(),
            patches,
            closed_surfaces: self.closed_surfaces.iter().map(|s| s.reversed()).collect(),
        }
    }

    /// Keeps the listed patches and closed surfaces.
    pub fn select(&self, patches: &[usize], closed: &[usize]) -> SegmentedSpadopag {
        SegmentedSpadopag {
            vertices: self.vertices.clone(),
            patches: patches.iter().map(|&p| self.patches[p].clone()).collect(),
            closed_surfaces: closed.iter().map(|&c| self.closed_surfaces[c].clone()).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty() && self.closed_surfaces.is_empty()
    }
}

/// Cuts the surfaces of `g` along `isect`, which must come from the same surface order.
pub fn cut(g: &RealizableSpadopag, isect: &IntersectionSet, tol: Tolerance) -> Result<SegmentedSpadopag> {
    let surfaces: Vec<GluedSurface> = g.surfaces().cloned().collect();
    cut_surfaces(&surfaces, isect, tol)
}

enum Job {
    Keep,
    Split { extra: Vec<u32>, segments: Vec<[usize; 2]> },
}

/// Cuts `surfaces` along the segments of `isect` into conforming patches.
pub fn cut_surfaces(surfaces: &[GluedSurface], isect: &IntersectionSet, tol: Tolerance) -> Result<SegmentedSpadopag> {
    let eps = tol.eps();
    for seg in &isect.segments {
        for r in &seg.sources {
            let ok = surfaces.get(r.surface).is_some_and(|s| r.triangle < s.mesh.faces.len());
            if !ok {
                return Err(Error::InconsistentProvenance {
                    what: format!("surface {} triangle {}", r.surface, r.triangle),
                });
            }
        }
    }

    // Pool: original vertices in lexicographic order, then curve vertices.
    let mut pool = VertexPool::new(eps);
    let mut order: Vec<(usize, usize)> =
        surfaces.iter().enumerate().flat_map(|(s, g)| (0..g.mesh.vertices.len()).map(move |v| (s, v))).collect();
    order.sort_by(|x, y| {
        surfaces[x.0].mesh.vertices[x.1].lex_cmp(&surfaces[y.0].mesh.vertices[y.1]).then(x.cmp(y))
    });
    let mut vid: Vec<Vec<u32>> = surfaces.iter().map(|s| vec![0; s.mesh.vertices.len()]).collect();
    for (s, v) in order {
        vid[s][v] = pool.insert(surfaces[s].mesh.vertices[v]);
    }
    let seg_ids: Vec<(u32, u32)> = isect.segments.iter().map(|s| (pool.insert(s.a), pool.insert(s.b))).collect();

    let mut touched: Vec<bool> = vec![false; surfaces.len()];
    let mut per_tri: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (k, seg) in isect.segments.iter().enumerate() {
        if seg_ids[k].0 == seg_ids[k].1 {
            continue;
        }
        for r in &seg.sources {
            touched[r.surface] = true;
            per_tri.entry((r.surface, r.triangle)).or_default().push(k);
        }
    }
    for v in per_tri.values_mut() {
        v.sort_unstable();
        v.dedup();
    }

    // Curve vertices, hashed for lookup near each triangle.
    let mut cut_pts: Vec<u32> = seg_ids.iter().flat_map(|&(a, b)| [a, b]).collect();
    cut_pts.sort_unstable();
    cut_pts.dedup();
    let cell = {
        let (mut sum, mut n) = (0.0, 0usize);
        for (s, g) in surfaces.iter().enumerate().filter(|(s, _)| touched[*s]) {
            for f in 0..g.mesh.faces.len() {
                let t = surfaces[s].mesh.triangle(f);
                sum += t.a.distance(t.b) + t.b.distance(t.c) + t.c.distance(t.a);
                n += 3;
            }
        }
        if n > 0 { (sum / n as f64).max(eps * 1e3) } else { 1.0 }
    };
    let gkey = |p: Point3| [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64];
    let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    for &i in &cut_pts {
        grid.entry(gkey(pool.points[i as usize])).or_default().push(i);
    }

    // Per-triangle work lists.
    struct Item {
        surface: usize,
        corners: [u32; 3],
        normal: Vec3,
        job: Job,
    }
    let mut items: Vec<Item> = Vec::new();
    for (s, g) in surfaces.iter().enumerate().filter(|(s, _)| touched[*s]) {
        for (f, face) in g.mesh.faces.iter().enumerate() {
            let mut corners = face.map(|v| vid[s][v as usize]);
            if g.orientation == Orientation::Negative {
                corners.swap(1, 2);
            }
            if corners[0] == corners[1] || corners[1] == corners[2] || corners[0] == corners[2] {
                continue;
            }
            let normal = g.oriented_triangle(f).unit_normal();
            let t = Triangle::new(pool.points[corners[0] as usize], pool.points[corners[1] as usize], pool.points[corners[2] as usize]);
            let mut extra: Vec<u32> = Vec::new();
            let local = |id: u32, extra: &mut Vec<u32>| -> usize {
                if let Some(c) = corners.iter().position(|&c| c == id) {
                    return c;
                }
                if let Some(k) = extra.iter().position(|&e| e == id) {
                    return 3 + k;
                }
                extra.push(id);
                2 + extra.len()
            };
            let mut segments = Vec::new();
            if let Some(list) = per_tri.get(&(s, f)) {
                for &k in list {
                    let (a, b) = seg_ids[k];
                    segments.push([local(a, &mut extra), local(b, &mut extra)]);
                }
            }
            let b = t.bounds().inflated(eps);
            let (lo, hi) = (gkey(b.min), gkey(b.max));
            let mut near: Vec<u32> = Vec::new();
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        if let Some(ids) = grid.get(&[x, y, z]) {
                            near.extend(ids.iter().copied().filter(|&i| t.distance(pool.points[i as usize]) < eps));
                        }
                    }
                }
            }
            near.sort_unstable();
            for i in near {
                local(i, &mut extra);
            }
            let job = if segments.is_empty() && extra.is_empty() { Job::Keep } else { Job::Split { extra, segments } };
            items.push(Item { surface: s, corners, normal, job });
        }
    }

    let subs: Vec<Option<crate::geom::Subdivision>> = items
        .par_iter()
        .map(|it| match &it.job {
            Job::Keep => None,
            Job::Split { extra, segments } => {
                let p = |i: u32| pool.points[i as usize];
                let t = Triangle::new(p(it.corners[0]), p(it.corners[1]), p(it.corners[2]));
                let ex: Vec<Point3> = extra.iter().map(|&i| p(i)).collect();
                Some(subdivide(&t, &ex, segments, tol))
            }
        })
        .collect();

    // Map sub-triangles into the pool, in item order.
    let mut cut_set: HashSet<(u32, u32)> = HashSet::new();
    let mut faces_of: Vec<Vec<([u32; 3], Vec3)>> = vec![Vec::new(); surfaces.len()];
    for (it, sub) in items.iter().zip(subs) {
        match sub {
            None => faces_of[it.surface].push((it.corners, it.normal)),
            Some(sub) => {
                let Job::Split { extra, .. } = &it.job else { unreachable!() };
                let mut ids: Vec<u32> = it.corners.to_vec();
                ids.extend_from_slice(extra);
                for &q in &sub.points[ids.len()..] {
                    ids.push(pool.insert(q));
                }
                for tri in &sub.triangles {
                    let f = tri.map(|k| ids[k]);
                    if f[0] != f[1] && f[1] != f[2] && f[0] != f[2] {
                        faces_of[it.surface].push((f, it.normal));
                    }
                }
                for &[a, b] in &sub.cut_edges {
                    let (a, b) = (ids[a], ids[b]);
                    if a != b {
                        cut_set.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    for &(a, b) in &seg_ids {
        if a != b {
            cut_set.insert((a.min(b), a.max(b)));
        }
    }

    let mut patches = Vec::new();
    let mut closed_surfaces = Vec::new();
    for (s, g) in surfaces.iter().enumerate() {
        if !touched[s] {
            closed_surfaces.push(g.clone().with_id(s));
            continue;
        }
        for (faces, normals) in split_patches(&faces_of[s], &cut_set) {
            let boundary_loops = boundary_loops(&faces);
            patches.push(SurfacePatch { faces, normals, source_surface: s, orientation: g.orientation, boundary_loops });
        }
    }
    Ok(SegmentedSpadopag { vertices: pool.points, patches, closed_surfaces })
}

/// Connected components across edges that are not cut and carry exactly two faces.
pub(crate) fn split_patches(faces: &[([u32; 3], Vec3)], cut: &HashSet<(u32, u32)>) -> Vec<(Vec<[u32; 3]>, Vec<Vec3>)> {
    let mut edge_faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (i, (f, _)) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(i);
        }
    }
    let mut uf = UnionFind::new(faces.len());
    for (e, fs) in &edge_faces {
        if fs.len() == 2 && !cut.contains(e) {
            uf.union(fs[0], fs[1]);
        }
    }
    let mut comp: HashMap<usize, usize> = HashMap::new();
    let mut out: Vec<(Vec<[u32; 3]>, Vec<Vec3>)> = Vec::new();
    for (i, (f, n)) in faces.iter().enumerate() {
        let r = uf.find(i);
        let k = *comp.entry(r).or_insert_with(|| {
            out.push((Vec::new(), Vec::new()));
            out.len() - 1
        });
        out[k].0.push(*f);
        out[k].1.push(*n);
    }
    out
}

/// Boundary half-edges of a face set, chained into loops.
pub(crate) fn boundary_loops(faces: &[[u32; 3]]) -> Vec<Vec<u32>> {
    let mut count: HashMap<(u32, u32), i32> = HashMap::new();
    for f in faces {
        for k in 0..3 {
            *count.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut next: HashMap<u32, Vec<u32>> = HashMap::new();
    let mut keys: Vec<(u32, u32)> = count.keys().copied().collect();
    keys.sort_unstable();
    for (a, b) in keys {
        let surplus = count[&(a, b)] - count.get(&(b, a)).copied().unwrap_or(0);
        for _ in 0..surplus.max(0) {
            next.entry(a).or_default().push(b);
        }
    }
    let mut starts: Vec<u32> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut loops = Vec::new();
    for s in starts {
        while next.get(&s).is_some_and(|v| !v.is_empty()) {
            let mut lp = vec![s];
            let mut cur = s;
            while let Some(n) = next.get_mut(&cur).and_then(|v| v.pop()) {
                if n == s {
                    break;
                }
                lp.push(n);
                cur = n;
            }
            loops.push(lp);
        }
    }
    loops
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins, which keeps representatives deterministic.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}
