use std::collections::HashMap;

use super::{Aabb, Point3, Triangle, Vec3};
use crate::error::{Error, Result};

/// Indexed triangle mesh. Vertex identity is by index, so geometrically
/// coincident vertices may stay distinct (the seams of a glued surface).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[u32; 3]>) -> Self {
        TriMesh { vertices, faces }
    }

    pub fn triangle(&self, f: usize) -> Triangle {
        let [a, b, c] = self.faces[f];
        Triangle::new(
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        )
    }

    pub fn triangles(&self) -> impl Iterator<Item = Triangle> + '_ {
        (0..self.faces.len()).map(move |f| self.triangle(f))
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.faces.iter().flatten().map(|&v| self.vertices[v as usize]))
    }

    pub fn area(&self) -> f64 {
        self.triangles().map(|t| t.area()).sum()
    }

    /// Divergence-theorem volume; positive for outward windings.
    pub fn signed_volume(&self) -> f64 {
        self.triangles().map(|t| t.a.dot(t.b.cross(t.c))).sum::<f64>() / 6.0
    }

    /// Same surface with every winding reversed.
    pub fn flipped(&self) -> TriMesh {
        TriMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
        }
    }

    pub fn flip_in_place(&mut self) {
        for f in &mut self.faces {
            f.swap(1, 2);
        }
    }

    /// Directed edges that do not pair with exactly one opposite edge.
    ///
    /// An empty result means every undirected edge is used by exactly two
    /// faces with opposite directions.
    pub fn unpaired_edges(&self) -> Vec<(u32, u32)> {
        let mut count: HashMap<(u32, u32), i32> = HashMap::new();
        for &[a, b, c] in &self.faces {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *count.entry((u, v)).or_insert(0) += 1;
            }
        }
        let mut bad: Vec<(u32, u32)> = count
            .iter()
            .filter(|(&(u, v), &n)| n != 1 || count.get(&(v, u)).copied() != Some(1))
            .map(|(&e, _)| e)
            .collect();
        bad.sort_unstable();
        bad
    }

    pub fn is_closed(&self) -> bool {
        self.unpaired_edges().is_empty()
    }

    /// Drops vertices not referenced by any face and renumbers.
    pub fn compacted(&self) -> TriMesh {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let faces = self
            .faces
            .iter()
            .map(|f| {
                f.map(|v| {
                    let slot = &mut remap[v as usize];
                    if *slot == u32::MAX {
                        *slot = vertices.len() as u32;
                        vertices.push(self.vertices[v as usize]);
                    }
                    *slot
                })
            })
            .collect();
        TriMesh { vertices, faces }
    }

    /// Merges vertices with bitwise-identical coordinates.
    pub fn welded(&self) -> TriMesh {
        let mut seen: HashMap<[u64; 3], u32> = HashMap::new();
        let mut vertices = Vec::new();
        let remap: Vec<u32> = self
            .vertices
            .iter()
            .map(|p| {
                let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
                *seen.entry(key).or_insert_with(|| {
                    vertices.push(*p);
                    (vertices.len() - 1) as u32
                })
            })
            .collect();
        let faces = self.faces.iter().map(|f| f.map(|v| remap[v as usize])).collect();
        TriMesh { vertices, faces }
    }

    /// Sum of area-weighted facet normals; zero for a closed surface.
    pub fn closure_vector(&self) -> Vec3 {
        self.triangles().fold(Vec3::ZERO, |acc, t| acc + t.normal() * 0.5)
    }
}

/// `(1/6) Σ det(a, b, c)` over a closed triangle soup.
///
/// Edges are paired by exact coordinates; any edge not matched by exactly one
/// oppositely directed edge makes the soup open.
pub fn signed_volume(tris: &[Triangle]) -> Result<f64> {
    let mut count: HashMap<([u64; 3], [u64; 3]), i32> = HashMap::new();
    let key = |p: Point3| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
    for t in tris {
        for (u, v) in [(t.a, t.b), (t.b, t.c), (t.c, t.a)] {
            *count.entry((key(u), key(v))).or_insert(0) += 1;
        }
    }
    let open = count
        .iter()
        .filter(|(&(u, v), &n)| n != 1 || count.get(&(v, u)).copied() != Some(1))
        .count();
    if open > 0 {
        return Err(Error::NotClosed { object: "triangle soup".into(), open_edges: open, edges: Vec::new() });
    }
    Ok(tris.iter().map(|t| t.a.dot(t.b.cross(t.c))).sum::<f64>() / 6.0)
}

/// Relative closure defect `|Σ n_f A_f| / Σ A_f`.
pub fn closure_defect(mesh: &TriMesh) -> f64 {
    let area = mesh.area();
    if area == 0.0 {
        return 0.0;
    }
    mesh.closure_vector().norm() / area
}
