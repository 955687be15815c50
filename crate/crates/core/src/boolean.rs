//! Complement, meet, join and difference on the G-space.
//!
//! Every operation runs on boundary representations only: the surfaces are
//! cut at their joint intersections, patches are kept or dropped by a
//! membership test at one sample point each, and the survivors are pasted.

use rayon::prelude::*;

use crate::brep::{decompose_atoms, GElement, GluedSurface, Orientation};
use crate::cutting::{cut_surfaces, detect_intersections, SegmentedSpadopag};
use crate::error::Result;
use crate::geom::{Point3, Tolerance, Vec3};
use crate::membership::{classify_point, PointClass};
use crate::pasting::paste_surfaces;

/// Seed for the membership tests that select patches.
pub const SELECTION_SEED: u64 = 0x5e1e_c7ed;

/// The three lattice operations and the derived difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Complement,
    Meet,
    Join,
    Difference,
}

impl std::str::FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "complement" => Ok(Op::Complement),
            "meet" => Ok(Op::Meet),
            "join" => Ok(Op::Join),
            "diff" | "difference" => Ok(Op::Difference),
            _ => Err(format!("unknown operation {s:?}")),
        }
    }
}

fn from_surfaces(surfaces: Vec<GluedSurface>, tol: Tolerance) -> Result<GElement> {
    if surfaces.is_empty() {
        return Ok(GElement::Bottom);
    }
    Ok(GElement::Spadopag(decompose_atoms(surfaces, tol)?))
}

/// Complement: cut at the improper intersections, reverse, paste.
pub fn complement(g: &GElement, tol: Tolerance) -> Result<GElement> {
    let sp = match g {
        GElement::Bottom => return Ok(GElement::Top),
        GElement::Top => return Ok(GElement::Bottom),
        GElement::Spadopag(sp) => sp,
    };
    let surfaces: Vec<GluedSurface> = sp.surfaces().cloned().collect();
    let isect = detect_intersections(&surfaces, tol)?;
    if isect.is_empty() {
        return from_surfaces(surfaces.iter().map(|s| s.reversed()).collect(), tol);
    }
    let seg = cut_surfaces(&surfaces, &isect, tol)?;
    from_surfaces(paste_surfaces(&seg.reversed(), tol)?, tol)
}

/// Oriented normal of the surface of `g` nearest to `p`.
fn nearest_oriented_normal(p: Point3, g: &GElement) -> Option<Vec3> {
    let mut best: Option<(f64, Vec3)> = None;
    for s in g.surfaces() {
        if let Some((d, f, _)) = s.bvh().nearest(p) {
            if best.is_none_or(|b| d < b.0) {
                best = Some((d, s.mesh.triangle(f as usize).unit_normal() * s.orientation.sign()));
            }
        }
    }
    best.map(|b| b.1)
}

/// Keeps an item of one operand if its sample lies inside the other, or,
/// when `coincident_ok`, on a same-orientation coincident piece of it.
fn keep(sample: Point3, normal: Vec3, other: &GElement, coincident_ok: bool, tol: Tolerance) -> Result<bool> {
    Ok(match classify_point(sample, other, SELECTION_SEED, tol)? {
        PointClass::Inside => true,
        PointClass::Outside => false,
        PointClass::OnBoundary => coincident_ok && nearest_oriented_normal(sample, other).is_some_and(|n| n.dot(normal) > 0.0),
    })
}

fn largest_face_sample(s: &GluedSurface) -> (Point3, Vec3) {
    let f = (0..s.mesh.faces.len())
        .max_by(|&a, &b| s.mesh.triangle(a).area().total_cmp(&s.mesh.triangle(b).area()))
        .expect("surfaces have faces");
    let t = s.oriented_triangle(f);
    (t.centroid(), t.unit_normal())
}

/// Meet (intersection of the represented Yin sets).
pub fn meet(g1: &GElement, g2: &GElement, tol: Tolerance) -> Result<GElement> {
    match (g1, g2) {
        (GElement::Bottom, _) | (_, GElement::Bottom) => return Ok(GElement::Bottom),
        (GElement::Top, g) | (g, GElement::Top) => return Ok(g.clone()),
        _ => {}
    }
    let s1: Vec<GluedSurface> = g1.surfaces().into_iter().cloned().collect();
    let s2: Vec<GluedSurface> = g2.surfaces().into_iter().cloned().collect();
    let n1 = s1.len();
    let all: Vec<GluedSurface> = s1.into_iter().chain(s2).collect();
    let isect = detect_intersections(&all, tol)?;
    let seg = cut_surfaces(&all, &isect, tol)?;

    let from_first = |src: usize| src < n1;
    let patches: Vec<bool> = (0..seg.patches.len())
        .into_par_iter()
        .map(|p| {
            let (c, n) = seg.patch_sample(p);
            let first = from_first(seg.patches[p].source_surface);
            keep(c, n, if first { g2 } else { g1 }, first, tol)
        })
        .collect::<Result<_>>()?;
    let closed: Vec<bool> = seg
        .closed_surfaces
        .par_iter()
        .map(|s| {
            let (c, n) = largest_face_sample(s);
            let first = from_first(s.id);
            keep(c, n, if first { g2 } else { g1 }, first, tol)
        })
        .collect::<Result<_>>()?;

    let kept_p: Vec<usize> = (0..patches.len()).filter(|&i| patches[i]).collect();
    let kept_c: Vec<usize> = (0..closed.len()).filter(|&i| closed[i]).collect();
    let selection: SegmentedSpadopag = seg.select(&kept_p, &kept_c);
    if selection.is_empty() {
        return Ok(GElement::Bottom);
    }
    from_surfaces(paste_surfaces(&selection, tol)?, tol)
}

/// Join, as the complement of the meet of complements.
pub fn join(g1: &GElement, g2: &GElement, tol: Tolerance) -> Result<GElement> {
    complement(&meet(&complement(g1, tol)?, &complement(g2, tol)?, tol)?, tol)
}

/// `g1 ∧ g2′`.
pub fn difference(g1: &GElement, g2: &GElement, tol: Tolerance) -> Result<GElement> {
    meet(g1, &complement(g2, tol)?, tol)
}

/// Applies `op`; unary operations ignore `g2`.
pub fn apply(op: Op, g1: &GElement, g2: &GElement, tol: Tolerance) -> Result<GElement> {
    match op {
        Op::Complement => complement(g1, tol),
        Op::Meet => meet(g1, g2, tol),
        Op::Join => join(g1, g2, tol),
        Op::Difference => difference(g1, g2, tol),
    }
}

/// Orientations of the surfaces of `g`, sorted, for structural comparisons.
pub fn orientation_multiset(g: &GElement) -> Vec<Orientation> {
    let mut v = g.orientation_signature();
    v.sort();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::verify::mesh_volume;
    use std::f64::consts::PI;

    fn tol() -> Tolerance {
        Tolerance::new(1e-9).unwrap()
    }

    fn ball(c: Point3, r: f64, level: u32) -> GElement {
        GElement::from_surfaces(vec![GluedSurface::new(shapes::icosphere(c, r, level), Orientation::Positive)], tol()).unwrap()
    }

    #[test]
    fn constants() {
        let b = ball(Point3::ZERO, 1.0, 1);
        assert!(complement(&GElement::Bottom, tol()).unwrap().is_top());
        assert!(complement(&GElement::Top, tol()).unwrap().is_bottom());
        assert!(meet(&b, &GElement::Bottom, tol()).unwrap().is_bottom());
        assert!(meet(&GElement::Bottom, &b, tol()).unwrap().is_bottom());
        assert_eq!(meet(&b, &GElement::Top, tol()).unwrap().surfaces().len(), 1);
        assert_eq!(join(&b, &GElement::Bottom, tol()).unwrap().surfaces().len(), 1);
        assert!(join(&b, &GElement::Top, tol()).unwrap().is_top());
    }

    #[test]
    fn ball_complement_is_exterior() {
        let c = complement(&ball(Point3::ZERO, 1.0, 1), tol()).unwrap();
        assert_eq!(c.orientation_signature(), vec![Orientation::Negative]);
        let cc = complement(&c, tol()).unwrap();
        assert_eq!(cc.orientation_signature(), vec![Orientation::Positive]);
    }

    #[test]
    fn disjoint_balls_meet_in_nothing() {
        let m = meet(&ball(Point3::ZERO, 1.0, 1), &ball(Point3::new(10.0, 0.0, 0.0), 1.0, 1), tol()).unwrap();
        assert!(m.is_bottom());
    }

    #[test]
    fn lens_volume() {
        let a = ball(Point3::ZERO, 1.0, 3);
        let b = ball(Point3::new(1.0, 0.0, 0.0), 1.0, 3);
        let m = meet(&a, &b, tol()).unwrap();
        assert_eq!(m.topology().components, 1);
        let v = mesh_volume(&m).unwrap();
        let exact = 5.0 * PI / 12.0;
        assert!((v - exact).abs() / exact < 0.05, "{v}");
    }

    #[test]
    fn overlapping_balls_join_into_one() {
        let a = ball(Point3::ZERO, 1.0, 2);
        let b = ball(Point3::new(1.0, 0.05, 0.02), 1.0, 2);
        let j = join(&a, &b, tol()).unwrap();
        assert_eq!(j.topology().components, 1);
        assert_eq!(j.orientation_signature(), vec![Orientation::Positive]);
        let i = meet(&a, &b, tol()).unwrap();
        let lhs = mesh_volume(&i).unwrap() + mesh_volume(&j).unwrap();
        let rhs = mesh_volume(&a).unwrap() + mesh_volume(&b).unwrap();
        assert!((lhs - rhs).abs() / rhs < 1e-6);
    }

    #[test]
    fn shell_by_difference() {
        let big = ball(Point3::ZERO, 2.0, 2);
        let small = ball(Point3::ZERO, 1.0, 2);
        let shell = difference(&big, &small, tol()).unwrap();
        assert_eq!(shell.topology().holes_per_component, vec![1]);
        let v = mesh_volume(&shell).unwrap();
        assert!((v - (mesh_volume(&big).unwrap() - mesh_volume(&small).unwrap())).abs() < 1e-9);
    }

    #[test]
    fn self_difference_is_empty() {
        let a = ball(Point3::ZERO, 1.0, 1);
        assert!(difference(&a, &a, tol()).unwrap().is_bottom());
        let m = meet(&a, &a, tol()).unwrap();
        assert_eq!(m.surfaces().len(), 1);
    }

    #[test]
    fn cubes_sharing_a_face_region() {
        let a = GElement::from_surfaces(
            vec![GluedSurface::new(shapes::cube(Point3::ZERO, Point3::new(1.0, 1.0, 1.0)), Orientation::Positive)],
            tol(),
        )
        .unwrap();
        let b = GElement::from_surfaces(
            vec![GluedSurface::new(
                shapes::cube(Point3::new(0.5, 0.25, 0.0), Point3::new(1.5, 0.75, 1.0)),
                Orientation::Positive,
            )],
            tol(),
        )
        .unwrap();
        let m = meet(&a, &b, tol()).unwrap();
        assert!((mesh_volume(&m).unwrap() - 0.25).abs() < 1e-12);
        let j = join(&a, &b, tol()).unwrap();
        assert!((mesh_volume(&j).unwrap() - 1.25).abs() < 1e-12);
        let d = difference(&a, &b, tol()).unwrap();
        assert!((mesh_volume(&d).unwrap() - 0.75).abs() < 1e-12);
    }
}
