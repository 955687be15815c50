//! Local mesh surgery on one closed surface: edge split, edge collapse,
//! edge flip and tangential smoothing.

use std::collections::{HashMap, HashSet};

use crate::geom::{angle_at, Point3, TriMesh, Vec3};

pub(crate) struct Surgery {
    pub v: Vec<Point3>,
    pub f: Vec<[u32; 3]>,
    alive: Vec<bool>,
    /// Directed edge to the face that contains it.
    dir: HashMap<(u32, u32), usize>,
    /// Faces touching each vertex; may hold stale entries, filtered on read.
    vf: Vec<Vec<usize>>,
}

fn third(face: [u32; 3], a: u32, b: u32) -> u32 {
    face.into_iter().find(|&x| x != a && x != b).unwrap_or(face[0])
}

fn normal(p: Point3, q: Point3, r: Point3) -> Vec3 {
    (q - p).cross(r - p)
}

fn min_angle(p: Point3, q: Point3, r: Point3) -> f64 {
    angle_at(p, q, r).min(angle_at(q, r, p)).min(angle_at(r, p, q))
}

impl Surgery {
    pub fn new(m: &TriMesh) -> Self {
        let mut s = Surgery {
            v: m.vertices.clone(),
            f: Vec::with_capacity(m.faces.len()),
            alive: Vec::new(),
            dir: HashMap::new(),
            vf: vec![Vec::new(); m.vertices.len()],
        };
        for &face in &m.faces {
            s.add_face(face);
        }
        s
    }

    /// Live faces over the used vertices, which keep their relative order.
    pub fn into_mesh(self) -> TriMesh {
        let faces: Vec<[u32; 3]> = self.f.iter().zip(&self.alive).filter(|(_, &a)| a).map(|(f, _)| *f).collect();
        let mut remap = vec![u32::MAX; self.v.len()];
        for f in &faces {
            for &x in f {
                remap[x as usize] = 0;
            }
        }
        let mut vertices = Vec::new();
        for (i, slot) in remap.iter_mut().enumerate() {
            if *slot == 0 {
                *slot = vertices.len() as u32;
                vertices.push(self.v[i]);
            }
        }
        let faces = faces.into_iter().map(|f| f.map(|x| remap[x as usize])).collect();
        TriMesh::new(vertices, faces)
    }

    fn add_face(&mut self, face: [u32; 3]) -> usize {
        let i = self.f.len();
        self.f.push(face);
        self.alive.push(true);
        self.link(i);
        i
    }

    fn link(&mut self, i: usize) {
        let face = self.f[i];
        for k in 0..3 {
            self.dir.insert((face[k], face[(k + 1) % 3]), i);
            self.vf[face[k] as usize].push(i);
        }
    }

    fn unlink(&mut self, i: usize) {
        let face = self.f[i];
        for k in 0..3 {
            let e = (face[k], face[(k + 1) % 3]);
            if self.dir.get(&e) == Some(&i) {
                self.dir.remove(&e);
            }
        }
    }

    fn set_face(&mut self, i: usize, face: [u32; 3]) {
        self.unlink(i);
        self.f[i] = face;
        self.link(i);
    }

    fn kill_face(&mut self, i: usize) {
        self.unlink(i);
        self.alive[i] = false;
    }

    pub fn faces_of(&self, v: u32) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.vf[v as usize].iter().copied().filter(|&i| self.alive[i] && self.f[i].contains(&v)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn neighbours(&self, v: u32) -> HashSet<u32> {
        self.faces_of(v).iter().flat_map(|&i| self.f[i]).filter(|&x| x != v).collect()
    }

    pub fn len(&self, a: u32, b: u32) -> f64 {
        self.v[a as usize].distance(self.v[b as usize])
    }

    /// Undirected edges, each once.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut e: Vec<(u32, u32)> = self.dir.keys().filter(|(a, b)| a < b).copied().collect();
        e.sort_unstable();
        e
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.dir.contains_key(&(a, b))
    }

    pub fn live_vertex_count(&self) -> usize {
        let mut seen = vec![false; self.v.len()];
        for (f, &a) in self.f.iter().zip(&self.alive) {
            if a {
                for &x in f {
                    seen[x as usize] = true;
                }
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    fn pos(&self, face: [u32; 3]) -> [Point3; 3] {
        face.map(|x| self.v[x as usize])
    }

    pub fn face_min_angle(&self, i: usize) -> f64 {
        let [p, q, r] = self.pos(self.f[i]);
        min_angle(p, q, r)
    }

    pub fn live_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.f.len()).filter(|&i| self.alive[i])
    }

    /// Splits edge `a–b` at its midpoint.
    pub fn split(&mut self, a: u32, b: u32) -> bool {
        let (Some(&fa), Some(&fb)) = (self.dir.get(&(a, b)), self.dir.get(&(b, a))) else {
            return false;
        };
        let c = third(self.f[fa], a, b);
        let d = third(self.f[fb], a, b);
        let m = self.v.len() as u32;
        self.v.push(self.v[a as usize].lerp(self.v[b as usize], 0.5));
        self.vf.push(Vec::new());
        self.set_face(fa, [a, m, c]);
        self.add_face([m, b, c]);
        self.set_face(fb, [b, m, d]);
        self.add_face([m, a, d]);
        true
    }

    /// Collapses `a–b` if the link condition holds and no surviving face
    /// turns by π/2 or more. The merged vertex goes to the midpoint, or to an
    /// endpoint when only that avoids a fold.
    pub fn try_collapse(&mut self, a: u32, b: u32) -> bool {
        let (Some(&fa), Some(&fb)) = (self.dir.get(&(a, b)), self.dir.get(&(b, a))) else {
            return false;
        };
        if self.live_vertex_count() <= 4 {
            return false;
        }
        let c = third(self.f[fa], a, b);
        let d = third(self.f[fb], a, b);
        let common: HashSet<u32> = self.neighbours(a).intersection(&self.neighbours(b)).copied().collect();
        if common != HashSet::from([c, d]) {
            // A valence-3 apex next to the edge fails the link test; dissolving
            // it first leaves a legal collapse.
            let dissolved = [c, d].into_iter().any(|x| self.dissolve_valence3(x));
            return dissolved && self.try_collapse(a, b);
        }
        let mut touched: Vec<usize> = self.faces_of(a);
        touched.extend(self.faces_of(b));
        touched.sort_unstable();
        touched.dedup();
        touched.retain(|&i| i != fa && i != fb);
        let (pa, pb) = (self.v[a as usize], self.v[b as usize]);
        // The midpoint first; an endpoint when the midpoint folds a face over.
        let folds = |m: Point3| {
            touched.iter().any(|&i| {
                let face = self.f[i];
                let [p, q, r] = self.pos(face);
                let before = normal(p, q, r);
                let moved = face.map(|x| if x == a || x == b { m } else { self.v[x as usize] });
                let after = normal(moved[0], moved[1], moved[2]);
                before.dot(after) <= 0.0 || after.norm() <= 1e-14 * before.norm()
            })
        };
        let Some(m) = [pa.lerp(pb, 0.5), pa, pb].into_iter().find(|&m| !folds(m)) else {
            return false;
        };
        self.kill_face(fa);
        self.kill_face(fb);
        for i in touched {
            let face = self.f[i].map(|x| if x == b { a } else { x });
            self.set_face(i, face);
        }
        self.v[a as usize] = m;
        true
    }

    /// Replaces the three faces around a valence-3 vertex by one face.
    pub fn dissolve_valence3(&mut self, x: u32) -> bool {
        let fs = self.faces_of(x);
        if fs.len() != 3 || self.live_vertex_count() <= 4 {
            return false;
        }
        let rim = |f: [u32; 3]| {
            let k = f.iter().position(|&y| y == x).unwrap_or(0);
            (f[(k + 1) % 3], f[(k + 2) % 3])
        };
        let (p, q) = rim(self.f[fs[0]]);
        let Some(&next) = fs[1..].iter().find(|&&i| rim(self.f[i]).0 == q) else {
            return false;
        };
        let r = rim(self.f[next]).1;
        if let Some(&g) = self.dir.get(&(q, p)) {
            if third(self.f[g], p, q) == r {
                return false;
            }
        }
        for &i in &fs[1..] {
            self.kill_face(i);
        }
        self.set_face(fs[0], [p, q, r]);
        true
    }

    /// Flips `a–b` if that raises the smaller of the two faces' minimum angles,
    /// the two faces are nearly coplanar and the new diagonal's length lies
    /// in `[lo, hi]`.
    pub fn flip_within(&mut self, a: u32, b: u32, lo: f64, hi: f64) -> bool {
        let (Some(&fa), Some(&fb)) = (self.dir.get(&(a, b)), self.dir.get(&(b, a))) else {
            return false;
        };
        let c = third(self.f[fa], a, b);
        let d = third(self.f[fb], a, b);
        if c == d || self.has_edge(c, d) || self.has_edge(d, c) || !(lo..=hi).contains(&self.len(c, d)) {
            return false;
        }
        let p = |x: u32| self.v[x as usize];
        let (n1, n2) = (normal(p(a), p(b), p(c)), normal(p(b), p(a), p(d)));
        if n1.normalized().dot(n2.normalized()) < 0.95 {
            return false;
        }
        let (m1, m2) = (normal(p(a), p(d), p(c)), normal(p(d), p(b), p(c)));
        let avg = n1.normalized() + n2.normalized();
        if m1.dot(avg) <= 0.0 || m2.dot(avg) <= 0.0 {
            return false;
        }
        let old = min_angle(p(a), p(b), p(c)).min(min_angle(p(b), p(a), p(d)));
        let new = min_angle(p(a), p(d), p(c)).min(min_angle(p(d), p(b), p(c)));
        if new <= old + 1e-12 {
            return false;
        }
        self.set_face(fa, [a, d, c]);
        self.set_face(fb, [d, b, c]);
        true
    }

    /// Area-weighted vertex normal.
    fn vertex_normal(&self, v: u32) -> Vec3 {
        self.faces_of(v).iter().fold(Vec3::ZERO, |acc, &i| {
            let [p, q, r] = self.pos(self.f[i]);
            acc + normal(p, q, r)
        })
    }

    /// Moves `v` toward its neighbours' centroid within the tangent plane,
    /// by at most `budget`; returns the distance moved.
    pub fn smooth(&mut self, v: u32, budget: f64) -> f64 {
        if budget <= 0.0 {
            return 0.0;
        }
        let nb = self.neighbours(v);
        if nb.is_empty() {
            return 0.0;
        }
        let c = nb.iter().fold(Vec3::ZERO, |acc, &x| acc + self.v[x as usize]) / nb.len() as f64;
        let n = self.vertex_normal(v).normalized();
        let mut delta = c - self.v[v as usize];
        delta = delta - n * delta.dot(n);
        let len = delta.norm();
        if len == 0.0 {
            return 0.0;
        }
        if len > budget {
            delta = delta * (budget / len);
        }
        let target = self.v[v as usize] + delta;
        for i in self.faces_of(v) {
            let face = self.f[i];
            let [p, q, r] = self.pos(face);
            let moved = face.map(|x| if x == v { target } else { self.v[x as usize] });
            if normal(p, q, r).dot(normal(moved[0], moved[1], moved[2])) <= 0.0 {
                return 0.0;
            }
        }
        self.v[v as usize] = target;
        delta.norm()
    }
}
