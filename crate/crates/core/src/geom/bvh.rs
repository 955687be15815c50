//! Bounding-volume hierarchy over a triangle list, for distance, ray and box queries.

use super::{Aabb, Point3, TriMesh, Triangle, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle slot; interior: index of the left child (right is +1).
    first: u32,
    /// Number of triangles for a leaf, zero for an interior node.
    count: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<Triangle>,
    /// Original index of each stored triangle.
    ids: Vec<u32>,
}

impl Bvh {
    pub fn new(tris: &[Triangle]) -> Self {
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let centroids: Vec<Point3> = tris.iter().map(|t| t.centroid()).collect();
        let boxes: Vec<Aabb> = tris.iter().map(|t| t.bounds()).collect();
        let mut nodes = vec![Node { bounds: Aabb::empty(), first: 0, count: 0 }];
        if !tris.is_empty() {
            build(&mut nodes, 0, &mut order, 0, &centroids, &boxes);
        }
        let stored = order.iter().map(|&i| tris[i as usize]).collect();
        Bvh { nodes, tris: stored, ids: order }
    }

    pub fn from_mesh(mesh: &TriMesh) -> Self {
        let tris: Vec<Triangle> = mesh.triangles().collect();
        Bvh::new(&tris)
    }

    pub fn len(&self) -> usize {
        self.tris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Closest triangle to `p`: (distance, original triangle index, closest point).
    pub fn nearest(&self, p: Point3) -> Option<(f64, u32, Point3)> {
        if self.tris.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, 0u32, p);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.distance_squared(p) >= best.0 * best.0 {
                continue;
            }
            if node.count > 0 {
                for s in node.first..node.first + node.count {
                    let q = self.tris[s as usize].closest_point(p);
                    let d = q.distance(p);
                    if d < best.0 {
                        best = (d, self.ids[s as usize], q);
                    }
                }
            } else {
                let (l, r) = (node.first as usize, node.first as usize + 1);
                let (dl, dr) = (self.nodes[l].bounds.distance_squared(p), self.nodes[r].bounds.distance_squared(p));
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some(best)
    }

    pub fn distance(&self, p: Point3) -> f64 {
        self.nearest(p).map_or(f64::INFINITY, |b| b.0)
    }

    /// Whether some triangle lies strictly closer than `r` to `p`.
    pub fn within(&self, p: Point3, r: f64) -> bool {
        if self.tris.is_empty() {
            return false;
        }
        let r2 = r * r;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.distance_squared(p) >= r2 {
                continue;
            }
            if node.count > 0 {
                for s in node.first..node.first + node.count {
                    if self.tris[s as usize].closest_point(p).distance(p) < r {
                        return true;
                    }
                }
            } else {
                stack.push(node.first as usize);
                stack.push(node.first as usize + 1);
            }
        }
        false
    }

    /// Visits every triangle whose box the ray `origin + t·dir`, `0 ≤ t ≤ t_max`, meets.
    pub fn for_each_ray_candidate(&self, origin: Point3, dir: Vec3, t_max: f64, mut f: impl FnMut(u32, &Triangle)) {
        if self.tris.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.ray_hit(origin, inv, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                for s in node.first..node.first + node.count {
                    f(self.ids[s as usize], &self.tris[s as usize]);
                }
            } else {
                stack.push(node.first as usize);
                stack.push(node.first as usize + 1);
            }
        }
    }

    /// Visits every triangle whose box overlaps `b`.
    pub fn for_each_overlap(&self, b: &Aabb, mut f: impl FnMut(u32, &Triangle)) {
        if self.tris.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bounds.overlaps(b) {
                continue;
            }
            if node.count > 0 {
                for s in node.first..node.first + node.count {
                    let t = &self.tris[s as usize];
                    if t.bounds().overlaps(b) {
                        f(self.ids[s as usize], t);
                    }
                }
            } else {
                stack.push(node.first as usize);
                stack.push(node.first as usize + 1);
            }
        }
    }
}

fn build(nodes: &mut Vec<Node>, n: usize, order: &mut [u32], offset: usize, centroids: &[Point3], boxes: &[Aabb]) {
    let bounds = order.iter().fold(Aabb::empty(), |b, &i| b.union(&boxes[i as usize]));
    nodes[n].bounds = bounds;
    if order.len() <= LEAF_SIZE {
        nodes[n].first = offset as u32;
        nodes[n].count = order.len() as u32;
        return;
    }
    let cb = Aabb::from_points(order.iter().map(|&i| centroids[i as usize]));
    let axis = cb.extent().dominant_axis();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis]));
    let left = nodes.len();
    nodes.push(Node { bounds: Aabb::empty(), first: 0, count: 0 });
    nodes.push(Node { bounds: Aabb::empty(), first: 0, count: 0 });
    nodes[n].first = left as u32;
    nodes[n].count = 0;
    let (lo, hi) = order.split_at_mut(mid);
    build(nodes, left, lo, offset, centroids, boxes);
    build(nodes, left + 1, hi, offset + mid, centroids, boxes);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force() {
        let mesh = shapes::torus(Point3::ZERO, 2.0, 0.7, 20, 10);
        let tris: Vec<Triangle> = mesh.triangles().collect();
        let bvh = Bvh::new(&tris);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = Point3::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-2.0..2.0));
            let brute = tris.iter().map(|t| t.distance(p)).fold(f64::INFINITY, f64::min);
            assert!((bvh.distance(p) - brute).abs() < 1e-12);
            assert!(bvh.within(p, brute + 1e-9));
            assert!(!bvh.within(p, brute - 1e-9));
        }
    }

    #[test]
    fn ray_candidates_include_every_hit() {
        let mesh = shapes::icosphere(Point3::ZERO, 1.0, 2);
        let tris: Vec<Triangle> = mesh.triangles().collect();
        let bvh = Bvh::new(&tris);
        let dir = Vec3::new(0.3, 0.5, 0.81).normalized();
        let mut seen = Vec::new();
        bvh.for_each_ray_candidate(Point3::ZERO, dir, f64::INFINITY, |i, _| seen.push(i));
        // The ray must leave the sphere through some candidate facet.
        let hit = tris.iter().enumerate().find(|(_, t)| {
            let n = t.normal();
            let s = (t.a).dot(n) / dir.dot(n);
            let x = dir * s;
            s > 0.0 && (0..3).all(|k| {
                let v = t.vertices();
                (v[(k + 1) % 3] - v[k]).cross(x - v[k]).dot(n) >= 0.0
            })
        });
        assert!(seen.contains(&(hit.unwrap().0 as u32)));
    }
}
