//! Closed, outward-wound primitive meshes used as fixtures and control volumes.
//!
//! The UV generators place vertex rings with one shared formula, so two
//! shapes built from the same ring parameters have bitwise-identical rings
//! and can touch along a whole curve.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::geom::{Point3, TriMesh, Vec3};

/// Flips the windings if they enclose negative volume.
pub fn orient_outward(mut mesh: TriMesh) -> TriMesh {
    if mesh.signed_volume() < 0.0 {
        mesh.flip_in_place();
    }
    mesh
}

/// Axis-aligned box `[lo, hi]`, two triangles per face.
pub fn cube(lo: Point3, hi: Point3) -> TriMesh {
    let v = |i: usize| {
        Point3::new(
            if i & 1 == 0 { lo.x } else { hi.x },
            if i & 2 == 0 { lo.y } else { hi.y },
            if i & 4 == 0 { lo.z } else { hi.z },
        )
    };
    let vertices = (0..8).map(v).collect();
    let faces = vec![
        [0, 2, 1], [1, 2, 3], // z = lo
        [4, 5, 6], [5, 7, 6], // z = hi
        [0, 1, 4], [1, 5, 4], // y = lo
        [2, 6, 3], [3, 6, 7], // y = hi
        [0, 4, 2], [2, 4, 6], // x = lo
        [1, 3, 5], [3, 7, 5], // x = hi
    ];
    TriMesh::new(vertices, faces)
}

/// Subdivided icosahedron projected onto a sphere; level `k` has `20·4^k` faces.
pub fn icosphere(center: Point3, radius: f64, level: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut dirs: Vec<Vec3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: u32, b: u32, dirs: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                dirs.push(((dirs[a as usize] + dirs[b as usize]) * 0.5).normalized());
                (dirs.len() - 1) as u32
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut dirs);
            let bc = midpoint(b, c, &mut dirs);
            let ca = midpoint(c, a, &mut dirs);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = dirs.iter().map(|&d| center + d * radius).collect();
    orient_outward(TriMesh::new(vertices, faces))
}

/// Orthonormal frame for UV parametrisations: rings live in the `(u, w)`
/// plane and `pole` points at the north pole.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub u: Vec3,
    pub w: Vec3,
    pub pole: Vec3,
}

impl Frame {
    pub const STANDARD: Frame = Frame {
        u: Vec3::new(1.0, 0.0, 0.0),
        w: Vec3::new(0.0, 1.0, 0.0),
        pole: Vec3::new(0.0, 0.0, 1.0),
    };
}

/// Ellipsoid-like UV surface. `lats` are the ring latitudes strictly between
/// the poles (ascending); each ring has `n_lon` vertices at longitudes
/// `2πj/n_lon`. The ring point is `center + ring_r·cos(lat)·(cos λ u + sin λ w) + pole_r·sin(lat)·pole`.
pub fn uv_surface(center: Point3, ring_r: f64, pole_r: f64, frame: Frame, lats: &[f64], n_lon: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity(lats.len() * n_lon + 2);
    let south = vertices.len() as u32;
    vertices.push(center - frame.pole * pole_r);
    for &lat in lats {
        let (sl, cl) = lat.sin_cos();
        for j in 0..n_lon {
            let lon = 2.0 * PI * j as f64 / n_lon as f64;
            let (so, co) = lon.sin_cos();
            vertices.push(center + frame.u * (ring_r * cl * co) + frame.w * (ring_r * cl * so) + frame.pole * (pole_r * sl));
        }
    }
    let north = vertices.len() as u32;
    vertices.push(center + frame.pole * pole_r);
    let ring = |i: usize, j: usize| (1 + i * n_lon + j % n_lon) as u32;
    let mut faces = Vec::new();
    for j in 0..n_lon {
        faces.push([south, ring(0, j + 1), ring(0, j)]);
    }
    for i in 0..lats.len() - 1 {
        for j in 0..n_lon {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    let top = lats.len() - 1;
    for j in 0..n_lon {
        faces.push([north, ring(top, j), ring(top, j + 1)]);
    }
    orient_outward(TriMesh::new(vertices, faces))
}

/// `n_lat − 1` uniformly spaced latitudes; even `n_lat` puts a ring on the equator.
pub fn uniform_latitudes(n_lat: usize) -> Vec<f64> {
    (1..n_lat).map(|i| -PI / 2.0 + PI * i as f64 / n_lat as f64).collect()
}

/// Axis-aligned ellipsoid with semi-axes `(a, a, c)` about the z axis.
pub fn ellipsoid(center: Point3, a: f64, c: f64, n_lat: usize, n_lon: usize) -> TriMesh {
    uv_surface(center, a, c, Frame::STANDARD, &uniform_latitudes(n_lat), n_lon)
}

pub fn uv_sphere(center: Point3, r: f64, n_lat: usize, n_lon: usize) -> TriMesh {
    ellipsoid(center, r, r, n_lat, n_lon)
}

/// Torus about the z axis through `center`: core radius `big_r`, tube radius `small_r`.
///
/// Vertex `(i, j)` sits at toroidal angle `2πi/n_major` and poloidal angle
/// `2πj/n_minor`, so each meridian ring is a circle of radius `small_r`
/// centred on the core circle.
pub fn torus(center: Point3, big_r: f64, small_r: f64, n_major: usize, n_minor: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let f = Frame::meridian(i, n_major);
        let c = center + f.u * big_r;
        for j in 0..n_minor {
            let lon = 2.0 * PI * j as f64 / n_minor as f64;
            let (so, co) = lon.sin_cos();
            vertices.push(c + f.u * (small_r * co) + f.w * (small_r * so));
        }
    }
    let id = |i: usize, j: usize| ((i % n_major) * n_minor + j % n_minor) as u32;
    let mut faces = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    orient_outward(TriMesh::new(vertices, faces))
}

impl Frame {
    /// Frame of the `i`-th of `n` meridian planes of a z-axis torus: `u` is
    /// radial, `w` is `+z`, `pole` is the toroidal direction.
    pub fn meridian(i: usize, n: usize) -> Frame {
        let phi = 2.0 * PI * i as f64 / n as f64;
        let (s, c) = phi.sin_cos();
        Frame { u: Vec3::new(c, s, 0.0), w: Vec3::new(0.0, 0.0, 1.0), pole: Vec3::new(-s, c, 0.0) }
    }
}

/// Translates every vertex.
pub fn translated(mut mesh: TriMesh, d: Vec3) -> TriMesh {
    for v in &mut mesh.vertices {
        *v += d;
    }
    mesh
}
