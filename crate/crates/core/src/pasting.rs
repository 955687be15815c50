//! Gluing surface patches back into closed surfaces.
//!
//! Along every boundary curve each patch is matched to the opposite-running
//! patch that makes the smallest directed angle with it, measured through
//! the interior. Matched patches form closures; a closure that still meets
//! itself along a curve is divided by rematching that curve with the patch
//! orientations reversed.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::brep::{decompose_atoms, GluedSurface, RealizableSpadopag};
use crate::cutting::{SegmentedSpadopag, SurfacePatch, UnionFind, VertexPool};
use crate::error::{Error, Result};
use crate::geom::{Point3, Tolerance, TriMesh, Vec3};

/// Angular tolerance for ties and fold-backs, in radians.
pub const ANGLE_TOL: f64 = 1e-7;

/// Angle of the wedge between patch `A` and a candidate `B` on the interior
/// side, in `[0, 2π)`.
///
/// `na` and `nb` are the patches' normals (pointing away from the interior)
/// at the shared edge and `r` is the direction of `A`'s boundary half-edge.
/// Antiparallel normals mean `B` folds straight back onto `A`, which has no
/// well-defined wedge.
pub fn directed_angle(na: Vec3, nb: Vec3, r: Vec3) -> Result<f64> {
    let r = r.normalized();
    let s = na.cross(nb).dot(r);
    let c = na.dot(nb);
    if s.abs() < ANGLE_TOL && c < 0.0 {
        return Err(Error::ParallelDegeneracy);
    }
    Ok(PI - s.atan2(c))
}

#[derive(Debug, Clone, Copy)]
struct Side {
    patch: usize,
    face: usize,
    from: u32,
    to: u32,
}

impl Side {
    fn forward(&self) -> bool {
        self.from < self.to
    }
}

struct Gluing<'a> {
    seg: &'a SegmentedSpadopag,
    sides: Vec<Side>,
    /// Sides of each boundary edge, keyed by the sorted vertex pair.
    groups: Vec<((u32, u32), Vec<usize>)>,
    /// Groups of each curve, and the group used to decide the curve.
    curves: Vec<(Vec<usize>, usize)>,
}

fn point_str(p: Point3) -> String {
    format!("({:.6}, {:.6}, {:.6})", p.x, p.y, p.z)
}

impl<'a> Gluing<'a> {
    fn new(seg: &'a SegmentedSpadopag) -> Result<Self> {
        let mut sides = Vec::new();
        for (p, patch) in seg.patches.iter().enumerate() {
            let mut directed: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
            for (f, face) in patch.faces.iter().enumerate() {
                for k in 0..3 {
                    directed.entry((face[k], face[(k + 1) % 3])).or_default().push(f);
                }
            }
            let mut keys: Vec<(u32, u32)> = directed.keys().copied().collect();
            keys.sort_unstable();
            for (a, b) in keys {
                let fs = &directed[&(a, b)];
                let back = directed.get(&(b, a)).map_or(0, |v| v.len());
                for &f in fs.iter().skip(back) {
                    sides.push(Side { patch: p, face: f, from: a, to: b });
                }
            }
        }
        let mut by_edge: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (i, s) in sides.iter().enumerate() {
            by_edge.entry((s.from.min(s.to), s.from.max(s.to))).or_default().push(i);
        }
        let mut groups: Vec<((u32, u32), Vec<usize>)> = by_edge.into_iter().collect();
        groups.sort_unstable_by_key(|g| g.0);

        let mut signatures = Vec::with_capacity(groups.len());
        for (key, members) in &groups {
            let fwd = members.iter().filter(|&&i| sides[i].forward()).count();
            let bwd = members.len() - fwd;
            let at = point_str(seg.vertices[key.0 as usize]);
            if fwd == 0 || bwd == 0 {
                return Err(Error::NoCandidate { at });
            }
            if fwd != bwd {
                return Err(Error::GluingStuck(format!("{fwd} patches run one way and {bwd} the other near {at}")));
            }
            let mut sig: Vec<(usize, bool)> = members.iter().map(|&i| (sides[i].patch, sides[i].forward())).collect();
            sig.sort_unstable();
            if sig.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::GluingStuck(format!("a patch meets itself along an edge near {at}")));
            }
            signatures.push(sig);
        }

        // Curves: edges with identical side signatures chained through shared vertices.
        let mut at_vertex: HashMap<u32, Vec<usize>> = HashMap::new();
        for (g, (key, _)) in groups.iter().enumerate() {
            at_vertex.entry(key.0).or_default().push(g);
            at_vertex.entry(key.1).or_default().push(g);
        }
        let mut uf = UnionFind::new(groups.len());
        for gs in at_vertex.values() {
            for (i, &g) in gs.iter().enumerate() {
                for &h in &gs[i + 1..] {
                    if signatures[g] == signatures[h] {
                        uf.union(g, h);
                    }
                }
            }
        }
        let mut curve_of: HashMap<usize, usize> = HashMap::new();
        let mut curves: Vec<(Vec<usize>, usize)> = Vec::new();
        for g in 0..groups.len() {
            let r = uf.find(g);
            let c = *curve_of.entry(r).or_insert_with(|| {
                curves.push((Vec::new(), g));
                curves.len() - 1
            });
            curves[c].0.push(g);
        }
        let len = |g: usize| {
            let (a, b) = groups[g].0;
            seg.vertices[a as usize].distance(seg.vertices[b as usize])
        };
        for (gs, rep) in &mut curves {
            *rep = *gs.iter().max_by(|&&x, &&y| len(x).total_cmp(&len(y)).then(y.cmp(&x))).unwrap();
        }
        Ok(Gluing { seg, sides, groups, curves })
    }

    fn normal(&self, s: &Side) -> Vec3 {
        self.seg.patches[s.patch].normals[s.face]
    }

    fn dir(&self, s: &Side) -> Vec3 {
        self.seg.vertices[s.to as usize] - self.seg.vertices[s.from as usize]
    }

    fn third_vertex(&self, s: &Side) -> u32 {
        let f = self.seg.patches[s.patch].faces[s.face];
        f.into_iter().find(|&v| v != s.from && v != s.to).unwrap_or(f[0])
    }

    /// Matches forward sides to backward sides of one edge by minimal
    /// directed angle. `reversed` measures angles as if every patch were
    /// flipped.
    fn match_group(&self, members: &[usize], reversed: bool) -> Result<Vec<(usize, usize)>> {
        let sgn = if reversed { -1.0 } else { 1.0 };
        let (fwd, bwd): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| self.sides[i].forward());
        // In reversed mode the backward sides run forward; measure from them.
        let (from_set, to_set) = if reversed { (bwd, fwd) } else { (fwd, bwd) };
        let at = || point_str(self.seg.vertices[self.sides[members[0]].from as usize]);
        let mut out = Vec::with_capacity(from_set.len());
        let mut taken = vec![false; to_set.len()];
        for &h in &from_set {
            let sh = &self.sides[h];
            let (na, r) = (self.normal(sh) * sgn, self.dir(sh) * sgn);
            let mut scored = Vec::with_capacity(to_set.len());
            for (k, &m) in to_set.iter().enumerate() {
                let sm = &self.sides[m];
                scored.push((directed_angle(na, self.normal(sm) * sgn, r)?, k));
            }
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (best, k) = scored[0];
            if let Some(&(second, k2)) = scored.get(1) {
                if second - best < ANGLE_TOL {
                    let (s1, s2) = (&self.sides[to_set[k]], &self.sides[to_set[k2]]);
                    let duplicate = self.third_vertex(s1) == self.third_vertex(s2);
                    if !duplicate {
                        return Err(Error::AmbiguousTie { theta: best, at: at() });
                    }
                }
            }
            if taken[k] {
                return Err(Error::GluingStuck(format!("two patches claim the same mate near {}", at())));
            }
            taken[k] = true;
            out.push((h, to_set[k]));
        }
        Ok(out)
    }

    /// Side pairs for every edge of `curve`, given the pairs decided on its representative edge.
    fn spread(&self, curve: usize, decided: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let key = |i: usize| (self.sides[i].patch, self.sides[i].forward());
        let pairs: Vec<((usize, bool), (usize, bool))> = decided.iter().map(|&(h, m)| (key(h), key(m))).collect();
        let mut out = Vec::new();
        for &g in &self.curves[curve].0 {
            let members = &self.groups[g].1;
            let find = |k: (usize, bool)| members.iter().copied().find(|&i| key(i) == k);
            for &(a, b) in &pairs {
                if let (Some(x), Some(y)) = (find(a), find(b)) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    fn closures(&self, matches: &[Vec<(usize, usize)>]) -> UnionFind {
        let mut uf = UnionFind::new(self.seg.patches.len());
        for pairs in matches {
            for &(h, m) in pairs {
                uf.union(self.sides[h].patch, self.sides[m].patch);
            }
        }
        uf
    }

    fn glue(&self) -> Result<Vec<TriMesh>> {
        let mut decided: Vec<Vec<(usize, usize)>> = Vec::with_capacity(self.curves.len());
        for (_, rep) in &self.curves {
            decided.push(self.match_group(&self.groups[*rep].1, false)?);
        }

        // Divide closures that meet themselves along a curve.
        for _round in 0..4 {
            let mut uf = self.closures(&decided);
            let mut changed = false;
            for (c, (_, rep)) in self.curves.iter().enumerate() {
                let members = &self.groups[*rep].1;
                let mut by_closure: HashMap<usize, Vec<usize>> = HashMap::new();
                for &i in members {
                    by_closure.entry(uf.find(self.sides[i].patch)).or_default().push(i);
                }
                let mut roots: Vec<usize> = by_closure.keys().copied().collect();
                roots.sort_unstable();
                if !roots.iter().any(|r| by_closure[r].len() > 2) {
                    continue;
                }
                let mut rematch = Vec::new();
                for r in roots {
                    let part = &by_closure[&r];
                    if part.len() > 2 {
                        rematch.extend(self.match_group(part, true)?);
                    } else {
                        rematch.extend(decided[c].iter().copied().filter(|&(h, _)| part.contains(&h)));
                    }
                }
                rematch.sort_unstable();
                let mut old = decided[c].clone();
                old.sort_unstable();
                if rematch != old {
                    decided[c] = rematch;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let all: Vec<Vec<(usize, usize)>> = (0..self.curves.len()).map(|c| self.spread(c, &decided[c])).collect();
        let mut patch_uf = self.closures(&all);

        // Vertex copies: one per (patch, pool vertex), merged across matched edges.
        let mut copy: HashMap<(usize, u32), usize> = HashMap::new();
        for (p, patch) in self.seg.patches.iter().enumerate() {
            for f in &patch.faces {
                for &v in f {
                    let n = copy.len();
                    copy.entry((p, v)).or_insert(n);
                }
            }
        }
        let mut vuf = UnionFind::new(copy.len());
        for pairs in &all {
            for &(h, m) in pairs {
                let (sh, sm) = (&self.sides[h], &self.sides[m]);
                vuf.union(copy[&(sh.patch, sh.from)], copy[&(sm.patch, sm.to)]);
                vuf.union(copy[&(sh.patch, sh.to)], copy[&(sm.patch, sm.from)]);
            }
        }

        let mut closure_index: HashMap<usize, usize> = HashMap::new();
        let mut meshes: Vec<(HashMap<usize, u32>, TriMesh)> = Vec::new();
        for (p, patch) in self.seg.patches.iter().enumerate() {
            let r = patch_uf.find(p);
            let k = *closure_index.entry(r).or_insert_with(|| {
                meshes.push((HashMap::new(), TriMesh::default()));
                meshes.len() - 1
            });
            let (ids, mesh) = &mut meshes[k];
            for f in &patch.faces {
                let face = f.map(|v| {
                    let class = vuf.find(copy[&(p, v)]);
                    *ids.entry(class).or_insert_with(|| {
                        mesh.vertices.push(self.seg.vertices[v as usize]);
                        (mesh.vertices.len() - 1) as u32
                    })
                });
                mesh.faces.push(face);
            }
        }
        let mut out = Vec::with_capacity(meshes.len());
        for (_, mesh) in meshes {
            let open = mesh.unpaired_edges().len();
            if open > 0 {
                return Err(Error::GluingStuck(format!("glued closure has {open} unpaired edges")));
            }
            out.push(mesh);
        }
        Ok(out)
    }
}

/// Glues patches into closed surfaces; untouched closed surfaces pass through.
pub fn paste_surfaces(seg: &SegmentedSpadopag, _tol: Tolerance) -> Result<Vec<GluedSurface>> {
    let mut out = Vec::new();
    if !seg.patches.is_empty() {
        let gluing = Gluing::new(seg)?;
        for mesh in gluing.glue()? {
            out.push(GluedSurface::from_oriented(mesh));
        }
    }
    out.extend(seg.closed_surfaces.iter().cloned());
    Ok(out)
}

/// Glues the patches and groups the resulting surfaces into atoms.
pub fn paste(seg: &SegmentedSpadopag, tol: Tolerance) -> Result<RealizableSpadopag> {
    decompose_atoms(paste_surfaces(seg, tol)?, tol)
}

/// Splits a closed, possibly self-touching surface (edges shared by more
/// than two faces) into closed surfaces that meet only along curves.
pub fn divide(c: &TriMesh, tol: Tolerance) -> Result<Vec<TriMesh>> {
    let mut pool = VertexPool::new(tol.eps());
    let ids: Vec<u32> = c.vertices.iter().map(|&p| pool.insert(p)).collect();
    let faces: Vec<[u32; 3]> = c.faces.iter().map(|f| f.map(|v| ids[v as usize])).collect();
    let mut edge_count: HashMap<(u32, u32), usize> = HashMap::new();
    for f in &faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let cut: std::collections::HashSet<(u32, u32)> = edge_count.into_iter().filter(|&(_, n)| n > 2).map(|(e, _)| e).collect();
    let vertices = pool.points;
    let tagged: Vec<([u32; 3], Vec3)> = faces
        .iter()
        .map(|f| {
            let p = |i: u32| vertices[i as usize];
            (*f, (p(f[1]) - p(f[0])).cross(p(f[2]) - p(f[0])).normalized())
        })
        .collect();
    let patches = crate::cutting::split_patches(&tagged, &cut)
        .into_iter()
        .map(|(faces, normals)| SurfacePatch {
            boundary_loops: crate::cutting::boundary_loops(&faces),
            faces,
            normals,
            source_surface: 0,
            orientation: crate::brep::Orientation::Positive,
        })
        .collect();
    let seg = SegmentedSpadopag { vertices, patches, closed_surfaces: Vec::new() };
    if seg.patches.len() == 1 && seg.patches[0].boundary_loops.is_empty() {
        return Ok(vec![c.clone()]);
    }
    Gluing::new(&seg)?.glue()
}
