//! Point membership: ray-crossing parity against glued surfaces, with
//! resampling of degenerate rays, and the three-way classification against
//! a G-space element.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;

use crate::brep::{GElement, GluedSurface};
use crate::error::{Error, Result};
use crate::geom::{Point3, Tolerance, Vec3};

/// Where a query point lies relative to a Yin set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    Inside,
    Outside,
    /// Within ε of some surface.
    OnBoundary,
}

/// Rays tried before giving up.
pub const MAX_ATTEMPTS: usize = 64;

/// Rays closer than this to grazing a facet (as `|cos|` of the angle to the
/// facet normal) are rejected.
const GRAZING: f64 = 1e-7;

/// Outcome of a parity test, with the number of rays it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RayCast {
    pub inside: bool,
    pub attempts: usize,
}

/// Deterministic stream of ray directions for query `q` under `seed`.
pub fn ray_directions(q: Point3, seed: u64) -> impl Iterator<Item = Vec3> {
    let mut key = seed ^ 0x9e37_79b9_7f4a_7c15;
    for c in [q.x, q.y, q.z] {
        key = (key ^ c.to_bits()).wrapping_mul(0x1000_0000_01b3).rotate_left(29);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    std::iter::repeat_with(move || {
        let [x, y, z]: [f64; 3] = UnitSphere.sample(&mut rng);
        Vec3::new(x, y, z)
    })
}

/// Counts crossings of the ray `q + t·dir` with `s`; `None` if the ray is degenerate.
fn crossings(q: Point3, dir: Vec3, s: &GluedSurface, tol: Tolerance) -> Option<usize> {
    let eps = tol.eps();
    let mut count = 0usize;
    let mut degenerate = false;
    s.bvh().for_each_ray_candidate(q, dir, f64::INFINITY, |_, t| {
        if degenerate {
            return;
        }
        let n = t.normal();
        let nn = n.norm();
        if nn == 0.0 {
            return;
        }
        let n = n / nn;
        let denom = dir.dot(n);
        let s_plane = (t.a - q).dot(n);
        if denom.abs() < GRAZING {
            if s_plane.abs() < eps {
                degenerate = true;
            }
            return;
        }
        let tt = s_plane / denom;
        if tt <= 0.0 {
            return;
        }
        let x = q + dir * tt;
        let v = t.vertices();
        let mut min_d = f64::INFINITY;
        for k in 0..3 {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            let e = b - a;
            let d = e.cross(x - a).dot(n) / e.norm();
            min_d = min_d.min(d);
        }
        if min_d > eps {
            count += 1;
        } else if min_d >= -eps {
            degenerate = true;
        }
    });
    (!degenerate).then_some(count)
}

/// Parity test with the attempt count exposed.
///
/// `q` must lie further than ε from `s`. Rays that pass within ε of a facet
/// boundary or graze a facet plane are discarded and resampled.
pub fn ray_cast(q: Point3, s: &GluedSurface, seed: u64, tol: Tolerance) -> Result<RayCast> {
    for (attempt, dir) in ray_directions(q, seed).take(MAX_ATTEMPTS).enumerate() {
        if let Some(c) = crossings(q, dir, s, tol) {
            return Ok(RayCast { inside: c % 2 == 1, attempts: attempt + 1 });
        }
    }
    Err(Error::RetryExhausted(MAX_ATTEMPTS))
}

/// Whether `q` lies in the bounded complement of `s`.
pub fn ray_crossing_inside(q: Point3, s: &GluedSurface, seed: u64, tol: Tolerance) -> Result<bool> {
    ray_cast(q, s, seed, tol).map(|r| r.inside)
}

/// Classifies `q` against `g`.
pub fn classify_point(q: Point3, g: &GElement, seed: u64, tol: Tolerance) -> Result<PointClass> {
    let sp = match g {
        GElement::Bottom => return Ok(PointClass::Outside),
        GElement::Top => return Ok(PointClass::Inside),
        GElement::Spadopag(sp) => sp,
    };
    if sp.surfaces().any(|s| s.bvh().within(q, tol.eps())) {
        return Ok(PointClass::OnBoundary);
    }
    for atom in &sp.atoms {
        let mut inside = true;
        for s in atom.surfaces() {
            if !s.interior_contains(q, seed, tol)? {
                inside = false;
                break;
            }
        }
        if inside {
            return Ok(PointClass::Inside);
        }
    }
    Ok(PointClass::Outside)
}

/// Classifies many points in parallel; results follow the input order.
pub fn classify_points(qs: &[Point3], g: &GElement, seed: u64, tol: Tolerance) -> Result<Vec<PointClass>> {
    qs.par_iter().map(|&q| classify_point(q, g, seed, tol)).collect()
}

/// Distance from `q` to the nearest surface of `g` (infinite for 0̂ and 1̂).
pub fn boundary_distance(q: Point3, g: &GElement) -> f64 {
    g.surfaces().iter().map(|s| s.distance(q)).fold(f64::INFINITY, f64::min)
}
