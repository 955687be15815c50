//! Linear MARS interface tracking: advect the vertices of every surface,
//! keep edge lengths within `[r_tiny·h_L, h_L]`, push the minimum angle above
//! `α`, and recover local solutions by meeting with fixed control volumes.

mod surgery;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::boolean::meet;
use crate::brep::{GElement, GluedSurface};
use crate::error::{Error, Result};
use crate::geom::{Point3, Tolerance, TriMesh, Vec3};
use crate::membership::{classify_point, PointClass};
use crate::shapes;
use surgery::Surgery;

/// Velocity `u(x, t)`, continuous in `t` and Lipschitz in `x`.
#[derive(Clone)]
pub enum VelocityField {
    Zero,
    Translation(Vec3),
    /// Rigid rotation with angular velocity `omega` about the axis through `center`.
    Rotation { center: Point3, omega: Vec3 },
    /// The time-reversing deformation test on the unit cube.
    Deformation { period: f64 },
    /// User-supplied field; Lipschitz continuity is the caller's responsibility.
    Custom(Arc<dyn Fn(Point3, f64) -> Vec3 + Send + Sync>),
}

impl fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityField::Zero => write!(f, "Zero"),
            VelocityField::Translation(v) => write!(f, "Translation({v:?})"),
            VelocityField::Rotation { center, omega } => write!(f, "Rotation {{ center: {center:?}, omega: {omega:?} }}"),
            VelocityField::Deformation { period } => write!(f, "Deformation {{ period: {period} }}"),
            VelocityField::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl VelocityField {
    pub fn eval(&self, x: Point3, t: f64) -> Vec3 {
        match self {
            VelocityField::Zero => Vec3::ZERO,
            VelocityField::Translation(v) => *v,
            VelocityField::Rotation { center, omega } => omega.cross(x - *center),
            VelocityField::Deformation { period } => deformation_field(x, t, *period),
            VelocityField::Custom(f) => f(x, t),
        }
    }

    /// Built-in fields by name: `zero`, `translation` (unit speed along x),
    /// `rotation` (unit rate about the vertical axis through the origin) and
    /// `deformation` (with the given period).
    pub fn from_name(name: &str, period: f64) -> Result<VelocityField> {
        match name {
            "zero" => Ok(VelocityField::Zero),
            "translation" => Ok(VelocityField::Translation(Vec3::new(1.0, 0.0, 0.0))),
            "rotation" => Ok(VelocityField::Rotation { center: Point3::ZERO, omega: Vec3::new(0.0, 0.0, 1.0) }),
            "deformation" if period > 0.0 => Ok(VelocityField::Deformation { period }),
            "deformation" => Err(Error::InvalidParameter(format!("period must be positive, got {period}"))),
            _ => Err(Error::InvalidParameter(format!("unknown velocity field {name:?}"))),
        }
    }
}

/// The divergence-free 3D deformation field; reverses itself at `t = period/2`.
pub fn deformation_field(x: Point3, t: f64, period: f64) -> Vec3 {
    let s = |a: f64| (PI * a).sin();
    let s2 = |a: f64| (2.0 * PI * a).sin();
    let c = (PI * t / period).cos();
    Vec3::new(
        2.0 * s(x.x).powi(2) * s2(x.y) * s2(x.z) * c,
        -s2(x.x) * s(x.y).powi(2) * s2(x.z) * c,
        -s2(x.x) * s2(x.y) * s(x.z).powi(2) * c,
    )
}

/// Resolution parameters of the tracking loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarsParams {
    pub h_l: f64,
    pub r_tiny: f64,
    /// Minimum interior angle, radians.
    pub alpha: f64,
    pub dt: f64,
}

impl MarsParams {
    pub const DEFAULT_ALPHA_DEGREES: f64 = 15.0;

    pub fn new(h_l: f64, r_tiny: f64, alpha: f64, dt: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(h_l.is_finite() && h_l > 0.0) {
            return bad(format!("h_L must be positive, got {h_l}"));
        }
        if !(r_tiny > 0.0 && r_tiny < 1.0) {
            return bad(format!("r_tiny must lie in (0, 1), got {r_tiny}"));
        }
        if !(alpha > 0.0 && alpha < PI / 3.0) {
            return bad(format!("alpha must lie in (0, pi/3), got {alpha}"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return bad(format!("dt must be positive, got {dt}"));
        }
        Ok(MarsParams { h_l, r_tiny, alpha, dt })
    }

    /// `dt = h_L`, `r_tiny = 0.1`, `α = 15°`.
    pub fn with_h(h_l: f64) -> Result<Self> {
        MarsParams::new(h_l, 0.1, Self::DEFAULT_ALPHA_DEGREES.to_radians(), h_l)
    }

    fn min_len(&self) -> f64 {
        self.r_tiny * self.h_l
    }
}

/// Rebuilds `g` with every surface mesh replaced by `f(surface)`.
fn map_surfaces<F>(g: &GElement, tol: Tolerance, f: F) -> Result<GElement>
where
    F: Fn(&GluedSurface) -> Result<TriMesh> + Sync,
{
    let GElement::Spadopag(_) = g else {
        return Ok(g.clone());
    };
    let surfaces: Vec<GluedSurface> = g
        .surfaces()
        .par_iter()
        .map(|s| Ok(GluedSurface::new(f(s)?, s.orientation).with_id(s.id)))
        .collect::<Result<_>>()?;
    GElement::from_surfaces(surfaces, tol)
}

fn rk4(u: &VelocityField, mut x: Point3, t0: f64, h: f64, steps: usize) -> Point3 {
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = u.eval(x, t);
        let k2 = u.eval(x + k1 * (h / 2.0), t + h / 2.0);
        let k3 = u.eval(x + k2 * (h / 2.0), t + h / 2.0);
        let k4 = u.eval(x + k3 * h, t + h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

/// Integrates every vertex from `t0` to `t1` with classical RK4, using the
/// largest uniform step not exceeding `dt`. Connectivity is kept; the result
/// is re-decomposed into atoms.
pub fn advect(g: &GElement, u: &VelocityField, t0: f64, t1: f64, dt: f64, tol: Tolerance) -> Result<GElement> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let span = t1 - t0;
    let steps = ((span.abs() / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    map_surfaces(g, tol, |s| {
        let vertices: Vec<Point3> = s.mesh.vertices.par_iter().map(|&x| rk4(u, x, t0, h, steps)).collect();
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::BlowUp);
        }
        Ok(TriMesh::new(vertices, s.mesh.faces.clone()))
    })
}

/// Counts from one edge-regularization pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegularizeStats {
    pub splits: usize,
    pub collapses: usize,
}

impl std::ops::AddAssign for RegularizeStats {
    fn add_assign(&mut self, o: Self) {
        self.splits += o.splits;
        self.collapses += o.collapses;
    }
}

const REGULARIZE_ROUNDS: usize = 8;

fn regularize_mesh(m: &TriMesh, p: &MarsParams) -> Result<(TriMesh, RegularizeStats)> {
    let mut s = Surgery::new(m);
    let mut stats = RegularizeStats::default();
    for _ in 0..REGULARIZE_ROUNDS {
        let mut short: Vec<(f64, u32, u32)> =
            s.edges().into_iter().map(|(a, b)| (s.len(a, b), a, b)).filter(|e| e.0 < p.min_len()).collect();
        short.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (_, a, b) in short {
            if s.has_edge(a, b) && s.len(a, b) < p.min_len() && s.try_collapse(a, b) {
                stats.collapses += 1;
            }
        }
        loop {
            let mut long: Vec<(f64, u32, u32)> =
                s.edges().into_iter().map(|(a, b)| (s.len(a, b), a, b)).filter(|e| e.0 > p.h_l).collect();
            if long.is_empty() {
                break;
            }
            long.sort_by(|x, y| y.0.total_cmp(&x.0));
            for (_, a, b) in long {
                if s.has_edge(a, b) && s.len(a, b) > p.h_l && s.split(a, b) {
                    stats.splits += 1;
                }
            }
        }
        if s.edges().iter().all(|&(a, b)| s.len(a, b) >= p.min_len()) {
            return Ok((s.into_mesh(), stats));
        }
    }
    let left = s.edges().iter().filter(|&&(a, b)| s.len(a, b) < p.min_len()).count();
    Err(Error::CannotRegularize(format!("{left} edges shorter than r_tiny*h_L cannot be collapsed safely")))
}

/// Splits edges longer than `h_L` at their midpoints and collapses edges
/// shorter than `r_tiny·h_L` to their midpoints where that is safe.
pub fn regularize_edges(g: &GElement, p: &MarsParams, tol: Tolerance) -> Result<(GElement, RegularizeStats)> {
    let stats = std::sync::Mutex::new(RegularizeStats::default());
    let out = map_surfaces(g, tol, |s| {
        let (m, st) = regularize_mesh(&s.mesh, p)?;
        *stats.lock().expect("stats lock") += st;
        Ok(m)
    })?;
    Ok((out, stats.into_inner().expect("stats lock")))
}

/// Outcome of a quality pass; `reached == false` is the non-fatal
/// "quality unreached" report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub reached: bool,
    pub iterations: usize,
    pub flips: usize,
    pub smoothed: usize,
    /// Smallest interior angle afterwards, radians.
    pub min_angle: f64,
    /// Largest distance any vertex moved.
    pub max_displacement: f64,
}

impl QualityReport {
    fn merge(self, o: QualityReport) -> QualityReport {
        QualityReport {
            reached: self.reached && o.reached,
            iterations: self.iterations.max(o.iterations),
            flips: self.flips + o.flips,
            smoothed: self.smoothed + o.smoothed,
            min_angle: self.min_angle.min(o.min_angle),
            max_displacement: self.max_displacement.max(o.max_displacement),
        }
    }
}

pub const QUALITY_ITERATION_CAP: usize = 50;

fn improve_mesh(m: &TriMesh, p: &MarsParams) -> (TriMesh, QualityReport) {
    let mut s = Surgery::new(m);
    let start = s.v.clone();
    let mut moved = vec![0.0f64; s.v.len()];
    let budget = p.h_l / 10.0;
    let mut report = QualityReport {
        reached: false,
        iterations: 0,
        flips: 0,
        smoothed: 0,
        min_angle: 0.0,
        max_displacement: 0.0,
    };
    for it in 0..QUALITY_ITERATION_CAP {
        let bad: Vec<usize> = s.live_faces().filter(|&f| s.face_min_angle(f) <= p.alpha).collect();
        if bad.is_empty() {
            report.reached = true;
            break;
        }
        report.iterations = it + 1;
        let mut changed = false;
        for &f in &bad {
            let face = s.f[f];
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                if s.has_edge(a, b) && s.flip_within(a, b, p.min_len(), p.h_l) {
                    report.flips += 1;
                    changed = true;
                    break;
                }
            }
        }
        let mut verts: Vec<u32> = s.live_faces().filter(|&f| s.face_min_angle(f) <= p.alpha).flat_map(|f| s.f[f]).collect();
        verts.sort_unstable();
        verts.dedup();
        for v in verts {
            let d = s.smooth(v, budget - moved[v as usize]);
            if d > 0.0 {
                moved[v as usize] += d;
                report.smoothed += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    report.min_angle = s.live_faces().map(|f| s.face_min_angle(f)).fold(f64::INFINITY, f64::min);
    report.reached = report.min_angle > p.alpha;
    report.max_displacement = start.iter().zip(&s.v).map(|(a, b)| a.distance(*b)).fold(0.0, f64::max);
    (s.into_mesh(), report)
}

/// Edge flips and tangential smoothing until every angle exceeds `α` or the
/// iteration cap is hit. No vertex moves more than `h_L/10`.
pub fn improve_quality(g: &GElement, p: &MarsParams, tol: Tolerance) -> Result<(GElement, QualityReport)> {
    let reports = std::sync::Mutex::new(Vec::new());
    let out = map_surfaces(g, tol, |s| {
        let (m, r) = improve_mesh(&s.mesh, p);
        reports.lock().expect("report lock").push(r);
        Ok(m)
    })?;
    let empty = QualityReport {
        reached: true,
        iterations: 0,
        flips: 0,
        smoothed: 0,
        min_angle: PI,
        max_displacement: 0.0,
    };
    let report = reports.into_inner().expect("report lock").into_iter().fold(empty, QualityReport::merge);
    Ok((out, report))
}

/// One control volume of the grid with spacing `h` anchored at the origin.
pub fn grid_cell(index: [i64; 3], h: f64) -> GElement {
    let lo = Point3::new(index[0] as f64, index[1] as f64, index[2] as f64) * h;
    let hi = lo + Vec3::new(h, h, h);
    GElement::from_surfaces(vec![GluedSurface::new(shapes::cube(lo, hi), crate::brep::Orientation::Positive)], Tolerance::default())
        .expect("a cube is a valid spadopag")
}

/// Meets `g` with every grid cell that overlaps its bounding box. Cells
/// that no surface touches are classified by their centre: full cells map
/// to themselves, empty ones are omitted.
pub fn local_solutions(g: &GElement, grid_h: f64, tol: Tolerance, seed: u64) -> Result<BTreeMap<[i64; 3], GElement>> {
    if !(grid_h > 0.0) {
        return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {grid_h}")));
    }
    if g.is_top() {
        return Err(Error::InfiniteVolume);
    }
    let b = g.bounds();
    if b.is_empty() {
        return Ok(BTreeMap::new());
    }
    let lo = |x: f64| (x / grid_h).floor() as i64;
    let hi = |x: f64| (x / grid_h).ceil() as i64;
    let mut cells = Vec::new();
    for i in lo(b.min.x)..hi(b.max.x) {
        for j in lo(b.min.y)..hi(b.max.y) {
            for k in lo(b.min.z)..hi(b.max.z) {
                cells.push([i, j, k]);
            }
        }
    }
    let surfaces = g.surfaces();
    let out: Vec<Option<([i64; 3], GElement)>> = cells
        .into_par_iter()
        .map(|idx| {
            let cell = grid_cell(idx, grid_h);
            let cb = cell.bounds();
            let touched = surfaces.iter().any(|s| s.bounds().inflated(tol.eps()).overlaps(&cb));
            let piece = if touched {
                meet(g, &cell, tol)?
            } else {
                match classify_point(cb.center(), g, seed, tol)? {
                    PointClass::Inside => cell,
                    _ => GElement::Bottom,
                }
            };
            Ok((!piece.is_bottom()).then_some((idx, piece)))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Euler characteristic and closedness of one surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceShape {
    pub euler: i64,
    pub closed: bool,
}

pub fn surface_shape(m: &TriMesh) -> SurfaceShape {
    let mut edges: Vec<(u32, u32)> = m.faces.iter().flat_map(|f| (0..3).map(move |k| (f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3])))).collect();
    edges.sort_unstable();
    edges.dedup();
    let mut used: Vec<u32> = m.faces.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    SurfaceShape { euler: used.len() as i64 - edges.len() as i64 + m.faces.len() as i64, closed: m.is_closed() }
}

/// State recorded at one checkpoint time.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub t: f64,
    pub element: GElement,
    pub topology: crate::brep::TopologyReport,
    pub shapes: Vec<SurfaceShape>,
}

impl Checkpoint {
    fn new(t: f64, element: GElement) -> Self {
        let topology = element.topology();
        let shapes = element.surfaces().iter().map(|s| surface_shape(&s.mesh)).collect();
        Checkpoint { t, element, topology, shapes }
    }
}

#[derive(Debug, Clone)]
pub struct TrackReport {
    pub checkpoints: Vec<Checkpoint>,
    pub steps: usize,
    pub regularize: RegularizeStats,
    /// Steps whose quality pass left some angle at or below `α`.
    pub quality_unreached: usize,
    pub worst_angle: f64,
}

impl TrackReport {
    /// True when every checkpoint has the topology and surface shapes of the first.
    pub fn topology_preserved(&self) -> bool {
        let Some(first) = self.checkpoints.first() else { return true };
        self.checkpoints.iter().all(|c| c.topology == first.topology && c.shapes == first.shapes && c.shapes.iter().all(|s| s.closed))
    }
}

fn adjust(g: &GElement, p: &MarsParams, tol: Tolerance, report: &mut TrackReport) -> Result<GElement> {
    let (g, st) = regularize_edges(g, p, tol)?;
    report.regularize += st;
    let (g, q) = improve_quality(&g, p, tol)?;
    if !q.reached {
        report.quality_unreached += 1;
    }
    report.worst_angle = report.worst_angle.min(q.min_angle);
    Ok(g)
}

/// Runs the tracking loop from `t = 0` and records the state at each of
/// `checkpoints` (sorted, deduplicated, clipped to `[0, t_end]`). Every step
/// advects, regularizes edges and improves quality; the input is adjusted
/// once before the first checkpoint.
pub fn track(g: &GElement, u: &VelocityField, p: &MarsParams, t_end: f64, checkpoints: &[f64], tol: Tolerance) -> Result<TrackReport> {
    let mut times: Vec<f64> = checkpoints.iter().copied().filter(|t| (0.0..=t_end).contains(t)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut report = TrackReport {
        checkpoints: Vec::new(),
        steps: 0,
        regularize: RegularizeStats::default(),
        quality_unreached: 0,
        worst_angle: PI,
    };
    let mut cur = adjust(g, p, tol, &mut report)?;
    let mut t = 0.0;
    let mut stops = times.clone();
    if stops.last().is_none_or(|&l| l < t_end) {
        stops.push(t_end);
    }
    if times.first() == Some(&0.0) {
        report.checkpoints.push(Checkpoint::new(0.0, cur.clone()));
    }
    for stop in stops {
        let span = stop - t;
        if span > 0.0 {
            let n = ((span / p.dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for k in 0..n {
                let (a, b) = (t + k as f64 * h, if k + 1 == n { stop } else { t + (k + 1) as f64 * h });
                cur = advect(&cur, u, a, b, h, tol)?;
                cur = adjust(&cur, p, tol, &mut report)?;
                report.steps += 1;
            }
            t = stop;
        }
        if times.contains(&stop) && stop > 0.0 {
            report.checkpoints.push(Checkpoint::new(stop, cur.clone()));
        }
    }
    Ok(report)
}

/// The desk-scale deformation test initial condition: a sphere of radius
/// 0.15 at (0.35, 0.35, 0.35), resolved so its edges fit under `h_l`.
pub fn deformation_sphere(h_l: f64) -> GElement {
    let r = 0.15;
    // Icosphere edges at level n are about 1.05·r / 2ⁿ.
    let mut level = 0;
    while 1.05 * r / f64::from(1u32 << level) > h_l && level < 8 {
        level += 1;
    }
    let mesh = shapes::icosphere(Point3::new(0.35, 0.35, 0.35), r, level);
    GElement::from_surfaces(vec![GluedSurface::new(mesh, crate::brep::Orientation::Positive)], Tolerance::default())
        .expect("a sphere is a valid spadopag")
}

/// Standard checkpoint times `{0, T/8, T/4, T/2, 3T/4, T}`.
pub fn standard_checkpoints(period: f64) -> Vec<f64> {
    [0.0, 0.125, 0.25, 0.5, 0.75, 1.0].iter().map(|f| f * period).collect()
}

#[cfg(test)]
mod tests;
