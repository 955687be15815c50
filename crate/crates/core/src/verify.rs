//! Independent oracles: Monte-Carlo membership agreement for the Boolean
//! laws, divergence-theorem volume, sampled Hausdorff distance and voxel
//! flood-fill topology.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boolean::Op;
use crate::brep::{GElement, GluedSurface, RealizableSpadopag, TopologyReport};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Point3, Tolerance, TriMesh, Vec3};
use crate::membership::{boundary_distance, classify_point, PointClass};

pub const DEFAULT_RESOLUTION: usize = 64;
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Outcome of a pointwise law check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    pub samples: usize,
    pub agreements: usize,
    pub boundary_excluded: usize,
    /// Largest distance to any operand boundary among disagreeing points.
    pub max_disagreement_distance: f64,
    /// Far-field probes (used when some operand is unbounded) and how many agreed.
    pub far_probes: usize,
    pub far_agreements: usize,
}

impl OracleReport {
    pub fn disagreements(&self) -> usize {
        self.samples - self.agreements - self.boundary_excluded
    }

    /// Agreement among tested (non-excluded) samples; 1 when nothing was tested.
    pub fn agreement(&self) -> f64 {
        let tested = self.samples - self.boundary_excluded;
        if tested == 0 {
            1.0
        } else {
            self.agreements as f64 / tested as f64
        }
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.agreement() >= threshold && self.far_agreements == self.far_probes
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples={}", self.samples)?;
        writeln!(f, "agreements={}", self.agreements)?;
        writeln!(f, "disagreements={}", self.disagreements())?;
        writeln!(f, "boundary_excluded={}", self.boundary_excluded)?;
        writeln!(f, "agreement={:.6}", self.agreement())?;
        writeln!(f, "max_disagreement_distance={:e}", self.max_disagreement_distance)?;
        writeln!(f, "far_probes={}", self.far_probes)?;
        write!(f, "far_agreements={}", self.far_agreements)
    }
}

fn truth(law: Op, a: bool, b: bool) -> bool {
    match law {
        Op::Complement => !a,
        Op::Meet => a && b,
        Op::Join => a || b,
        Op::Difference => a && !b,
    }
}

fn member(q: Point3, g: &GElement, seed: u64, tol: Tolerance) -> Result<Option<bool>> {
    Ok(match classify_point(q, g, seed, tol)? {
        PointClass::Inside => Some(true),
        PointClass::Outside => Some(false),
        PointClass::OnBoundary => None,
    })
}

/// Checks `result = law(lhs, rhs)` at `n` uniform points of the joint
/// bounding box inflated by 10%, skipping points within `band` of any
/// operand's boundary. Unary laws ignore `rhs`.
#[allow(clippy::too_many_arguments)]
pub fn pointwise_law_check(
    result: &GElement,
    lhs: &GElement,
    rhs: &GElement,
    law: Op,
    n: usize,
    band: f64,
    seed: u64,
    tol: Tolerance,
) -> Result<OracleReport> {
    let operands: Vec<&GElement> = if law == Op::Complement { vec![result, lhs] } else { vec![result, lhs, rhs] };
    let mut bounds = operands.iter().fold(Aabb::empty(), |b, g| b.union(&g.bounds()));
    if bounds.is_empty() {
        bounds = Aabb { min: Point3::new(-1.0, -1.0, -1.0), max: Point3::new(1.0, 1.0, 1.0) };
    }
    let d = bounds.extent();
    let bounds = Aabb { min: bounds.min - d * 0.1, max: bounds.max + d * 0.1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point3> = (0..n)
        .map(|_| {
            let (u, v, w): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            bounds.min + Vec3::new(u * (bounds.max.x - bounds.min.x), v * (bounds.max.y - bounds.min.y), w * (bounds.max.z - bounds.min.z))
        })
        .collect();

    let eval = |q: Point3| -> Result<(u8, f64)> {
        let dist = operands.iter().map(|g| boundary_distance(q, g)).fold(f64::INFINITY, f64::min);
        if dist < band {
            return Ok((2, dist));
        }
        let a = member(q, lhs, seed, tol)?.unwrap_or(false);
        let b = if law == Op::Complement { false } else { member(q, rhs, seed, tol)?.unwrap_or(false) };
        let r = member(q, result, seed, tol)?.unwrap_or(false);
        Ok((u8::from(r == truth(law, a, b)), dist))
    };
    let outcomes: Vec<(u8, f64)> = points.par_iter().map(|&q| eval(q)).collect::<Result<_>>()?;

    let mut rep = OracleReport { samples: n, ..Default::default() };
    for (o, dist) in outcomes {
        match o {
            1 => rep.agreements += 1,
            2 => rep.boundary_excluded += 1,
            _ => rep.max_disagreement_distance = rep.max_disagreement_distance.max(dist),
        }
    }

    let unbounded = operands.iter().any(|g| match g {
        GElement::Top => true,
        GElement::Spadopag(sp) => sp.atoms.iter().any(|a| a.is_unbounded()),
        GElement::Bottom => false,
    });
    if unbounded {
        let c = bounds.center();
        let r = 10.0 * bounds.diagonal();
        for axis in 0..3 {
            for s in [-1.0, 1.0] {
                let mut off = [0.0; 3];
                off[axis] = s * r;
                let (o, _) = eval(c + Vec3::new(off[0], off[1], off[2]))?;
                rep.far_probes += 1;
                rep.far_agreements += usize::from(o == 1);
            }
        }
    }
    Ok(rep)
}

/// Volume of the represented region.
pub fn mesh_volume(g: &GElement) -> Result<f64> {
    match g {
        GElement::Bottom => Ok(0.0),
        GElement::Top => Err(Error::InfiniteVolume),
        GElement::Spadopag(sp) => spadopag_volume(sp),
    }
}

fn spadopag_volume(sp: &RealizableSpadopag) -> Result<f64> {
    let mut v = 0.0;
    for atom in &sp.atoms {
        let Some(p) = &atom.positive else {
            return Err(Error::InfiniteVolume);
        };
        v += p.bounded_volume();
        v -= atom.negatives.iter().map(|s| s.bounded_volume()).sum::<f64>();
    }
    Ok(v)
}

/// All surfaces of `g` as one triangle soup.
pub fn merged_mesh(g: &GElement) -> TriMesh {
    let mut m = TriMesh::default();
    for s in g.surfaces() {
        let off = m.vertices.len() as u32;
        m.vertices.extend(s.mesh.vertices.iter().copied());
        m.faces.extend(s.mesh.faces.iter().map(|f| f.map(|v| v + off)));
    }
    m
}

fn sample_surface(m: &TriMesh, n: usize, seed: u64) -> Vec<Point3> {
    let mut pts: Vec<Point3> = m.vertices.clone();
    let areas: Vec<f64> = m.triangles().map(|t| t.area()).collect();
    let total: f64 = areas.iter().sum();
    if total <= 0.0 || n == 0 {
        return pts;
    }
    let mut cum = Vec::with_capacity(areas.len());
    let mut acc = 0.0;
    for a in &areas {
        acc += a;
        cum.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let x = rng.random::<f64>() * total;
        let f = cum.partition_point(|&c| c < x).min(areas.len() - 1);
        let t = m.triangle(f);
        let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        pts.push(t.a + (t.b - t.a) * u + (t.c - t.a) * v);
    }
    pts
}

/// Symmetric sampled Hausdorff distance: all vertices plus `n` area-weighted
/// samples per side, with exact point-to-triangle distances.
pub fn hausdorff(a: &TriMesh, b: &TriMesh, n: usize) -> f64 {
    let one_sided = |x: &TriMesh, y: &TriMesh, seed: u64| -> f64 {
        let bvh = crate::geom::bvh::Bvh::from_mesh(y);
        sample_surface(x, n, seed).par_iter().map(|&p| bvh.distance(p)).reduce(|| 0.0, f64::max)
    };
    one_sided(a, b, 1).max(one_sided(b, a, 2))
}

/// Axis-aligned grid of cubic voxels.
#[derive(Debug, Clone, Copy)]
pub struct VoxelGrid {
    pub origin: Point3,
    pub h: f64,
    pub dims: [usize; 3],
}

impl VoxelGrid {
    /// `res` voxels across the longest side of `bounds`, plus a two-voxel margin.
    pub fn over(bounds: &Aabb, res: usize) -> VoxelGrid {
        let e = bounds.extent();
        let h = e.x.max(e.y).max(e.z) / res.max(1) as f64;
        let dim = |len: f64| (len / h).ceil() as usize + 4;
        VoxelGrid { origin: bounds.min - Vec3::new(2.0 * h, 2.0 * h, 2.0 * h), h, dims: [dim(e.x), dim(e.y), dim(e.z)] }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Point3 {
        self.origin + Vec3::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h, (k as f64 + 0.5) * self.h)
    }
}

/// Voxel centers in the bounded complement of `s`, by z-scanline parity.
pub fn voxelize_surface(s: &GluedSurface, grid: &VoxelGrid) -> Vec<bool> {
    voxelize_surface_at(s, grid, Vec3::ZERO)
}

/// As [`voxelize_surface`], sampling at each center plus `shift` voxels.
///
/// Column positions are nudged by a small irrational fraction of a voxel so
/// that fixture vertices and edges never sit exactly on a scanline.
fn voxelize_surface_at(s: &GluedSurface, grid: &VoxelGrid, shift: Vec3) -> Vec<bool> {
    let [nx, ny, nz] = grid.dims;
    let (dx, dy) = (grid.h * (shift.x + 1.234_567e-4), grid.h * (shift.y + 2.718_281e-4));
    let col_x = |i: usize| grid.origin.x + (i as f64 + 0.5) * grid.h + dx;
    let col_y = |j: usize| grid.origin.y + (j as f64 + 0.5) * grid.h + dy;
    let mut hits: Vec<Vec<f64>> = vec![Vec::new(); nx * ny];
    for t in s.mesh.triangles() {
        let n = t.normal();
        if n.z.abs() < 1e-300 {
            continue;
        }
        let b = t.bounds();
        let lo_i = (((b.min.x - grid.origin.x - dx) / grid.h - 0.5).ceil().max(0.0)) as usize;
        let hi_i = (((b.max.x - grid.origin.x - dx) / grid.h - 0.5).floor().min(nx as f64 - 1.0)) as isize;
        let lo_j = (((b.min.y - grid.origin.y - dy) / grid.h - 0.5).ceil().max(0.0)) as usize;
        let hi_j = (((b.max.y - grid.origin.y - dy) / grid.h - 0.5).floor().min(ny as f64 - 1.0)) as isize;
        if hi_i < 0 || hi_j < 0 {
            continue;
        }
        let v = t.vertices();
        for i in lo_i..=hi_i as usize {
            for j in lo_j..=hi_j as usize {
                let (x, y) = (col_x(i), col_y(j));
                let e = |a: Point3, c: Point3| (c.x - a.x) * (y - a.y) - (c.y - a.y) * (x - a.x);
                let (e0, e1, e2) = (e(v[0], v[1]), e(v[1], v[2]), e(v[2], v[0]));
                let inside = (e0 > 0.0 && e1 > 0.0 && e2 > 0.0) || (e0 < 0.0 && e1 < 0.0 && e2 < 0.0);
                if inside {
                    let z = t.a.z - (n.x * (x - t.a.x) + n.y * (y - t.a.y)) / n.z;
                    hits[j * nx + i].push(z);
                }
            }
        }
    }
    let mut occ = vec![false; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            let col = &mut hits[j * nx + i];
            if col.is_empty() {
                continue;
            }
            col.sort_by(f64::total_cmp);
            let mut c = 0;
            for k in 0..nz {
                let z = grid.origin.z + (k as f64 + 0.5 + shift.z) * grid.h;
                while c < col.len() && col[c] < z {
                    c += 1;
                }
                occ[grid.index(i, j, k)] = c % 2 == 1;
            }
        }
    }
    occ
}

fn voxelize_atom_at(atom: &crate::brep::AtomSpadopag, grid: &VoxelGrid, shift: Vec3) -> Vec<bool> {
    let mut occ = vec![true; grid.len()];
    for s in atom.surfaces() {
        let inside = voxelize_surface_at(s, grid, shift);
        let positive = s.is_positive();
        for (o, i) in occ.iter_mut().zip(inside) {
            *o &= i == positive;
        }
    }
    occ
}

fn voxelize_atom(atom: &crate::brep::AtomSpadopag, grid: &VoxelGrid) -> Vec<bool> {
    voxelize_atom_at(atom, grid, Vec3::ZERO)
}

/// Voxel centers inside the region represented by `g`.
pub fn voxelize(g: &GElement, grid: &VoxelGrid) -> Vec<bool> {
    voxelize_at(g, grid, Vec3::ZERO)
}

fn voxelize_at(g: &GElement, grid: &VoxelGrid, shift: Vec3) -> Vec<bool> {
    match g {
        GElement::Bottom => vec![false; grid.len()],
        GElement::Top => vec![true; grid.len()],
        GElement::Spadopag(sp) => {
            let mut occ = vec![false; grid.len()];
            for atom in &sp.atoms {
                for (o, a) in occ.iter_mut().zip(voxelize_atom_at(atom, grid, shift)) {
                    *o |= a;
                }
            }
            occ
        }
    }
}

const FACE_STEPS: [[i64; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

/// One of each opposite pair of the 26 neighbour steps.
const ALL_STEPS: [[i64; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, -1, 0],
    [1, 0, 1],
    [1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

/// Labels of `mask` (`usize::MAX` for unset voxels) and the label count.
/// Voxel `v` links to `v + step` when both are set and, if `gates` is
/// given, `gates[s][v]` holds for that step.
fn label(mask: &[bool], grid: &VoxelGrid, steps: &[[i64; 3]], gates: Option<&[Vec<bool>]>) -> (Vec<usize>, usize) {
    let [nx, ny, nz] = grid.dims.map(|d| d as i64);
    let mut lab = vec![usize::MAX; mask.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    let at = |i: i64, j: i64, k: i64| ((k * ny + j) * nx + i) as usize;
    for start in 0..mask.len() {
        if !mask[start] || lab[start] != usize::MAX {
            continue;
        }
        lab[start] = count;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            let ci = c as i64;
            let (i, j, k) = (ci % nx, (ci / nx) % ny, ci / (nx * ny));
            for (si, d) in steps.iter().enumerate() {
                for sign in [1i64, -1] {
                    let (a, b, e) = (i + sign * d[0], j + sign * d[1], k + sign * d[2]);
                    if a < 0 || b < 0 || e < 0 || a >= nx || b >= ny || e >= nz {
                        continue;
                    }
                    let n = at(a, b, e);
                    if !mask[n] || lab[n] != usize::MAX {
                        continue;
                    }
                    // The gate of a step is stored at its lower endpoint.
                    if gates.is_some_and(|g| !g[si][if sign > 0 { c } else { n }]) {
                        continue;
                    }
                    lab[n] = count;
                    queue.push_back(n);
                }
            }
        }
        count += 1;
    }
    (lab, count)
}

/// For each of [`ALL_STEPS`], occupancy at the midpoint of every step.
fn midpoint_gates(grid: &VoxelGrid, sample: impl Fn(Vec3) -> Vec<bool> + Sync) -> Vec<Vec<bool>> {
    ALL_STEPS
        .par_iter()
        .map(|d| sample(Vec3::new(d[0] as f64, d[1] as f64, d[2] as f64) * 0.5))
        .inspect(|g| debug_assert_eq!(g.len(), grid.len()))
        .collect()
}

/// Components of the region: 26-connected, but two voxels only link when
/// the midpoint between their centers is inside too, so regions that merely
/// touch stay apart.
fn region_label(occ: &[bool], gates: &[Vec<bool>], grid: &VoxelGrid) -> (Vec<usize>, usize) {
    label(occ, grid, &ALL_STEPS, Some(gates))
}

fn touches_border(c: usize, grid: &VoxelGrid) -> bool {
    let [nx, ny, nz] = grid.dims;
    let (i, j, k) = (c % nx, (c / nx) % ny, c / (nx * ny));
    i == 0 || j == 0 || k == 0 || i + 1 == nx || j + 1 == ny || k + 1 == nz
}

/// Components of `occ` with the number of enclosed cavities of each. The
/// complement is 6-connected, the usual partner of 26-connected regions.
fn topology_of(occ: &[bool], gates: &[Vec<bool>], grid: &VoxelGrid) -> TopologyReport {
    let (lab, count) = region_label(occ, gates, grid);
    let mut holes = Vec::with_capacity(count);
    for c in 0..count {
        // Cavities of component c: regions of its complement cut off from the border.
        let free: Vec<bool> = lab.iter().map(|&l| l != c).collect();
        let (flab, fcount) = label(&free, grid, &FACE_STEPS, None);
        let mut outer = vec![false; fcount];
        for (v, &l) in flab.iter().enumerate() {
            if l != usize::MAX && touches_border(v, grid) {
                outer[l] = true;
            }
        }
        holes.push(outer.iter().filter(|&&o| !o).count());
    }
    TopologyReport { components: count, holes_per_component: holes }
}

/// Component and cavity counts from a voxel flood fill of the region.
pub fn voxel_topology(g: &GElement, res: usize) -> TopologyReport {
    match g {
        GElement::Bottom => TopologyReport { components: 0, holes_per_component: Vec::new() },
        GElement::Top => TopologyReport { components: 1, holes_per_component: vec![0] },
        GElement::Spadopag(_) => {
            let grid = VoxelGrid::over(&g.bounds(), res);
            let gates = midpoint_gates(&grid, |shift| voxelize_at(g, &grid, shift));
            topology_of(&voxelize(g, &grid), &gates, &grid)
        }
    }
}

/// Voxel approximations of atom connectedness and pairwise disjointness.
pub(crate) fn voxel_atom_checks(sp: &RealizableSpadopag, res: usize, _tol: Tolerance) -> Vec<String> {
    let mut out = Vec::new();
    let grid = VoxelGrid::over(&sp.bounds(), res);
    let occs: Vec<Vec<bool>> = sp.atoms.par_iter().map(|a| voxelize_atom(a, &grid)).collect();
    for (i, (atom, occ)) in sp.atoms.iter().zip(&occs).enumerate() {
        let gates = midpoint_gates(&grid, |shift| voxelize_atom_at(atom, &grid, shift));
        let (_, count) = region_label(occ, &gates, &grid);
        if count > 1 {
            out.push(format!("atom {i}: interior is disconnected (voxel approximation)"));
        }
    }
    for i in 0..occs.len() {
        for j in i + 1..occs.len() {
            if occs[i].iter().zip(&occs[j]).any(|(a, b)| *a && *b) {
                out.push(format!("atoms {i} and {j}: atom interiors intersect (voxel approximation)"));
            }
        }
    }
    out
}
