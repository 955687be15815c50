//! Glued surfaces, atoms and realizable spadopags: the boundary representation
//! of a Yin set, with its inclusion order and O(1) topology.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::bvh::Bvh;
use crate::geom::{Aabb, Point3, Tolerance, TriMesh, Triangle};
use crate::membership;
use crate::verify;

/// Which complement of a glued surface is its interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    /// Interior is the bounded complement.
    Positive,
    /// Interior is the unbounded complement.
    Negative,
}

impl Orientation {
    pub fn flipped(self) -> Orientation {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// A closed triangulated surface with an orientation flag.
///
/// The mesh is always stored wound outward from the bounded complement;
/// [`GluedSurface::oriented_mesh`] gives the winding whose normals point
/// away from the interior.
#[derive(Debug, Clone)]
pub struct GluedSurface {
    pub id: usize,
    pub mesh: TriMesh,
    pub orientation: Orientation,
    bvh: OnceLock<Arc<Bvh>>,
}

impl GluedSurface {
    /// Canonicalises the winding of `mesh` to outward and attaches `orientation`.
    pub fn new(mesh: TriMesh, orientation: Orientation) -> Self {
        let mesh = if mesh.signed_volume() < 0.0 { mesh.flipped() } else { mesh };
        GluedSurface { id: 0, mesh, orientation, bvh: OnceLock::new() }
    }

    /// Reads the orientation off the winding: outward windings are positive.
    pub fn from_oriented(mesh: TriMesh) -> Self {
        let orientation = if mesh.signed_volume() >= 0.0 { Orientation::Positive } else { Orientation::Negative };
        GluedSurface::new(mesh, orientation)
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    pub fn is_positive(&self) -> bool {
        self.orientation == Orientation::Positive
    }

    /// Winding whose normals point away from the interior.
    pub fn oriented_mesh(&self) -> TriMesh {
        match self.orientation {
            Orientation::Positive => self.mesh.clone(),
            Orientation::Negative => self.mesh.flipped(),
        }
    }

    pub fn oriented_triangle(&self, f: usize) -> Triangle {
        let t = self.mesh.triangle(f);
        match self.orientation {
            Orientation::Positive => t,
            Orientation::Negative => t.flipped(),
        }
    }

    /// Same geometry, opposite orientation.
    pub fn reversed(&self) -> GluedSurface {
        GluedSurface { id: self.id, mesh: self.mesh.clone(), orientation: self.orientation.flipped(), bvh: self.bvh.clone() }
    }

    pub fn bvh(&self) -> &Bvh {
        self.bvh.get_or_init(|| Arc::new(Bvh::from_mesh(&self.mesh)))
    }

    pub fn bounds(&self) -> Aabb {
        self.mesh.bounds()
    }

    pub fn distance(&self, p: Point3) -> f64 {
        self.bvh().distance(p)
    }

    /// Volume of the bounded complement.
    pub fn bounded_volume(&self) -> f64 {
        self.mesh.signed_volume()
    }

    /// Whether `q` lies in the interior (by orientation), assuming it is off the surface.
    pub fn interior_contains(&self, q: Point3, seed: u64, tol: Tolerance) -> Result<bool> {
        let inside = membership::ray_crossing_inside(q, self, seed, tol)?;
        Ok(inside == self.is_positive())
    }
}

/// At most one positive surface and the negatives it covers.
#[derive(Debug, Clone, Default)]
pub struct AtomSpadopag {
    pub positive: Option<GluedSurface>,
    pub negatives: Vec<GluedSurface>,
}

impl AtomSpadopag {
    pub fn surfaces(&self) -> impl Iterator<Item = &GluedSurface> {
        self.positive.iter().chain(self.negatives.iter())
    }

    /// Atom of the unbounded type (no positive surface).
    pub fn is_unbounded(&self) -> bool {
        self.positive.is_none()
    }
}

/// Union of atoms with pairwise disjoint interiors.
#[derive(Debug, Clone, Default)]
pub struct RealizableSpadopag {
    pub atoms: Vec<AtomSpadopag>,
}

impl RealizableSpadopag {
    pub fn surfaces(&self) -> impl Iterator<Item = &GluedSurface> {
        self.atoms.iter().flat_map(|a| a.surfaces())
    }

    pub fn surface_count(&self) -> usize {
        self.surfaces().count()
    }

    pub fn bounds(&self) -> Aabb {
        self.surfaces().fold(Aabb::empty(), |b, s| b.union(&s.bounds()))
    }
}

/// An element of the G-space: 0̂, 1̂, or a realizable spadopag.
#[derive(Debug, Clone)]
pub enum GElement {
    /// The empty set.
    Bottom,
    /// All of space.
    Top,
    Spadopag(RealizableSpadopag),
}

impl GElement {
    /// Groups almost-disjoint surfaces into atoms; no surfaces gives 0̂.
    pub fn from_surfaces(surfaces: Vec<GluedSurface>, tol: Tolerance) -> Result<GElement> {
        if surfaces.is_empty() {
            return Ok(GElement::Bottom);
        }
        Ok(GElement::Spadopag(decompose_atoms(surfaces, tol)?))
    }

    pub fn surfaces(&self) -> Vec<&GluedSurface> {
        match self {
            GElement::Spadopag(g) => g.surfaces().collect(),
            _ => Vec::new(),
        }
    }

    pub fn spadopag(&self) -> Option<&RealizableSpadopag> {
        match self {
            GElement::Spadopag(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, GElement::Bottom)
    }

    pub fn is_top(&self) -> bool {
        matches!(self, GElement::Top)
    }

    pub fn bounds(&self) -> Aabb {
        self.spadopag().map_or(Aabb::empty(), |g| g.bounds())
    }

    pub fn topology(&self) -> TopologyReport {
        topology(self)
    }

    /// Flat surface list with orientation tags, in atom order.
    pub fn orientation_signature(&self) -> Vec<Orientation> {
        self.surfaces().iter().map(|s| s.orientation).collect()
    }
}

/// Covering relation among the surfaces of a spadopag.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HasseDiagram {
    /// Surface id and orientation, indexed like the input list.
    pub nodes: Vec<(usize, Orientation)>,
    /// `(k, l)`: node `k` covers node `l`.
    pub edges: Vec<(usize, usize)>,
}

impl HasseDiagram {
    pub fn children(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == k).map(|e| e.1)
    }

    pub fn parents(&self, l: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == l).map(|e| e.0)
    }
}

/// Connected components and the holes of each.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopologyReport {
    pub components: usize,
    pub holes_per_component: Vec<usize>,
}

impl TopologyReport {
    /// Same counts regardless of component order.
    pub fn same_counts(&self, other: &TopologyReport) -> bool {
        let mut a = self.holes_per_component.clone();
        let mut b = other.holes_per_component.clone();
        a.sort_unstable();
        b.sort_unstable();
        self.components == other.components && a == b
    }

    pub fn total_holes(&self) -> usize {
        self.holes_per_component.iter().sum()
    }
}

const INCLUSION_SEED: u64 = 0x1c1d_e5e1;

/// Whether the bounded complement of `sl` lies inside that of `sk`.
///
/// Surfaces are almost disjoint, so every point of `sl` away from `sk` is on
/// the same side of `sk`; one such point decides. Probes are facet centroids
/// of `sl`, largest facets first. If every centroid lies on `sk` the two
/// surfaces coincide and neither strictly includes the other.
pub fn includes(sk: &GluedSurface, sl: &GluedSurface, tol: Tolerance) -> Result<bool> {
    if !sk.bounds().inflated(tol.eps()).overlaps(&sl.bounds()) {
        return Ok(false);
    }
    let mut order: Vec<usize> = (0..sl.mesh.faces.len()).collect();
    let areas: Vec<f64> = order.iter().map(|&f| sl.mesh.triangle(f).area()).collect();
    order.sort_by(|&a, &b| areas[b].total_cmp(&areas[a]).then(a.cmp(&b)));
    for f in order {
        let c = sl.mesh.triangle(f).centroid();
        if sk.bvh().within(c, 3.0 * tol.eps()) {
            continue;
        }
        return membership::ray_crossing_inside(c, sk, INCLUSION_SEED, tol);
    }
    Ok(false)
}

/// Transitive reduction of the inclusion order.
pub fn hasse(surfaces: &[GluedSurface], tol: Tolerance) -> Result<HasseDiagram> {
    let n = surfaces.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (0..n).filter(move |&l| l != k).map(move |l| (k, l))).collect();
    let rel: Vec<bool> = pairs
        .par_iter()
        .map(|&(k, l)| includes(&surfaces[k], &surfaces[l], tol))
        .collect::<Result<_>>()?;
    let mut inc = vec![vec![false; n]; n];
    for (&(k, l), &r) in pairs.iter().zip(&rel) {
        inc[k][l] = r;
    }
    let mut edges = Vec::new();
    for k in 0..n {
        for l in 0..n {
            if inc[k][l] && !(0..n).any(|m| m != k && m != l && inc[k][m] && inc[m][l]) {
                edges.push((k, l));
            }
        }
    }
    Ok(HasseDiagram { nodes: surfaces.iter().map(|s| (s.id, s.orientation)).collect(), edges })
}

/// Groups surfaces into atoms: each positive surface with the negative
/// surfaces it immediately covers, and all uncovered negatives into one
/// unbounded atom.
pub fn decompose_atoms(surfaces: Vec<GluedSurface>, tol: Tolerance) -> Result<RealizableSpadopag> {
    let h = hasse(&surfaces, tol)?;
    let n = surfaces.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for &(k, l) in &h.edges {
        if parent[l].is_some_and(|p| p != k) {
            return Err(Error::NotRealizable(format!("surface {l} is covered by two surfaces")));
        }
        parent[l] = Some(k);
    }
    for l in 0..n {
        if let Some(k) = parent[l] {
            if surfaces[k].orientation == surfaces[l].orientation {
                return Err(Error::NotRealizable(format!(
                    "{:?} surface {l} lies directly inside {:?} surface {k}",
                    surfaces[l].orientation, surfaces[k].orientation
                )));
            }
        }
    }
    let top_pos = (0..n).any(|l| parent[l].is_none() && surfaces[l].is_positive());
    let top_neg = (0..n).any(|l| parent[l].is_none() && !surfaces[l].is_positive());
    if top_pos && top_neg {
        return Err(Error::NotRealizable(
            "a positive surface lies outside every negative surface of the unbounded atom".into(),
        ));
    }

    let mut atoms = Vec::new();
    for k in (0..n).filter(|&k| surfaces[k].is_positive()) {
        let negatives = (0..n).filter(|&l| parent[l] == Some(k)).map(|l| surfaces[l].clone()).collect();
        atoms.push(AtomSpadopag { positive: Some(surfaces[k].clone()), negatives });
    }
    let leftover: Vec<GluedSurface> =
        (0..n).filter(|&l| !surfaces[l].is_positive() && parent[l].is_none()).map(|l| surfaces[l].clone()).collect();
    if !leftover.is_empty() {
        atoms.push(AtomSpadopag { positive: None, negatives: leftover });
    }
    let mut id = 0;
    for atom in &mut atoms {
        if let Some(p) = &mut atom.positive {
            p.id = id;
            id += 1;
        }
        for s in &mut atom.negatives {
            s.id = id;
            id += 1;
        }
    }
    Ok(RealizableSpadopag { atoms })
}

/// Structural and (approximate, voxel-based) geometric checks.
///
/// Returns human-readable violations; an empty list means valid. The
/// connectedness and disjointness checks sample a voxel grid and are
/// therefore approximations.
pub fn validate(g: &GElement, tol: Tolerance) -> Vec<String> {
    let GElement::Spadopag(sp) = g else {
        return Vec::new();
    };
    let mut v = Vec::new();
    for s in sp.surfaces() {
        let open = s.mesh.unpaired_edges().len();
        if open > 0 {
            v.push(format!("surface {} not closed ({open} unpaired edges)", s.id));
        }
        if s.mesh.signed_volume() <= 0.0 {
            v.push(format!("surface {} is not stored with outward winding", s.id));
        }
    }
    let mut unbounded = 0;
    for (i, atom) in sp.atoms.iter().enumerate() {
        let positives = atom.surfaces().filter(|s| s.is_positive()).count();
        if positives > 1 {
            v.push(format!("atom {i}: multiple positive surfaces"));
        }
        if atom.positive.as_ref().is_some_and(|p| !p.is_positive()) {
            v.push(format!("atom {i}: positive slot holds a negative surface"));
        }
        if atom.positive.is_none() {
            unbounded += 1;
            if atom.negatives.is_empty() {
                v.push(format!("atom {i}: no surfaces"));
            }
        }
        let negs: Vec<&GluedSurface> = atom.negatives.iter().filter(|s| !s.is_positive()).collect();
        for (a, sa) in negs.iter().enumerate() {
            for sb in negs.iter().skip(a + 1) {
                let ab = includes(sa, sb, tol).unwrap_or(false);
                let ba = includes(sb, sa, tol).unwrap_or(false);
                if ab || ba {
                    v.push(format!("atom {i}: negatives {} and {} are nested", sa.id, sb.id));
                }
            }
            if let Some(p) = &atom.positive {
                if p.is_positive() && !includes(p, sa, tol).unwrap_or(false) {
                    v.push(format!("atom {i}: negative {} is not inside the positive surface", sa.id));
                }
            }
        }
    }
    if unbounded > 1 {
        v.push(format!("{unbounded} atoms of unbounded type"));
    }
    if v.is_empty() {
        v.extend(verify::voxel_atom_checks(sp, verify::DEFAULT_RESOLUTION, tol));
    }
    v
}

/// Component and hole counts read off the structure.
pub fn topology(g: &GElement) -> TopologyReport {
    match g {
        GElement::Bottom => TopologyReport { components: 0, holes_per_component: Vec::new() },
        GElement::Top => TopologyReport { components: 1, holes_per_component: vec![0] },
        GElement::Spadopag(sp) => {
            let holes: Vec<usize> = sp.atoms.iter().map(|a| a.negatives.len()).collect();
            TopologyReport { components: holes.len(), holes_per_component: holes }
        }
    }
}

/// A point strictly inside the bounded complement of `s`, further than ε from it.
///
/// Steps inward from facet centroids (largest facets first) and halves the
/// step until the point classifies inside.
pub fn interior_witness(s: &GluedSurface, seed: u64, tol: Tolerance) -> Result<Point3> {
    const FACETS: usize = 64;
    let mut order: Vec<usize> = (0..s.mesh.faces.len()).collect();
    let areas: Vec<f64> = order.iter().map(|&f| s.mesh.triangle(f).area()).collect();
    order.sort_by(|&a, &b| areas[b].total_cmp(&areas[a]).then(a.cmp(&b)));
    let diag = s.bounds().diagonal();
    for &f in order.iter().take(FACETS) {
        let t = s.mesh.triangle(f);
        if t.is_degenerate(tol) {
            continue;
        }
        let n = t.unit_normal();
        let c = t.centroid();
        let mut step = 0.25 * diag;
        while step > 2.0 * tol.eps() {
            let p = c - n * step;
            if !s.bvh().within(p, 2.0 * tol.eps()) && membership::ray_crossing_inside(p, s, seed, tol)? {
                return Ok(p);
            }
            step *= 0.5;
        }
    }
    Err(Error::WitnessNotFound(order.len().min(FACETS)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn tol() -> Tolerance {
        Tolerance::new(1e-9).unwrap()
    }

    fn sphere(c: Point3, r: f64, o: Orientation) -> GluedSurface {
        GluedSurface::new(shapes::icosphere(c, r, 2), o)
    }

    #[test]
    fn winding_is_canonicalised() {
        let m = shapes::icosphere(Point3::ZERO, 1.0, 1);
        let s = GluedSurface::from_oriented(m.flipped());
        assert_eq!(s.orientation, Orientation::Negative);
        assert!(s.mesh.signed_volume() > 0.0);
        assert!(s.oriented_mesh().signed_volume() < 0.0);
    }

    #[test]
    fn inclusion_cases() {
        let small = sphere(Point3::ZERO, 1.0, Orientation::Positive);
        let big = sphere(Point3::ZERO, 2.0, Orientation::Positive);
        assert!(includes(&big, &small, tol()).unwrap());
        assert!(!includes(&small, &big, tol()).unwrap());
        let far = sphere(Point3::new(10.0, 0.0, 0.0), 1.0, Orientation::Positive);
        assert!(!includes(&small, &far, tol()).unwrap());
        assert!(!includes(&far, &small, tol()).unwrap());
        assert!(!includes(&small, &small, tol()).unwrap());
    }

    #[test]
    fn nested_spheres_give_a_chain() {
        let s: Vec<GluedSurface> =
            [1.0, 2.0, 3.0].iter().enumerate().map(|(i, &r)| sphere(Point3::ZERO, r, Orientation::Positive).with_id(i)).collect();
        let h = hasse(&s, tol()).unwrap();
        let mut e = h.edges.clone();
        e.sort();
        assert_eq!(e, vec![(1, 0), (2, 1)]);
        let single = hasse(&s[..1], tol()).unwrap();
        assert_eq!((single.nodes.len(), single.edges.len()), (1, 0));
    }

    #[test]
    fn shell_and_exterior_atoms() {
        let g = decompose_atoms(
            vec![sphere(Point3::ZERO, 2.0, Orientation::Positive), sphere(Point3::ZERO, 1.0, Orientation::Negative)],
            tol(),
        )
        .unwrap();
        assert_eq!(g.atoms.len(), 1);
        assert_eq!(g.atoms[0].negatives.len(), 1);
        let ext = decompose_atoms(vec![sphere(Point3::ZERO, 1.0, Orientation::Negative)], tol()).unwrap();
        assert!(ext.atoms[0].is_unbounded());
        let report = topology(&GElement::Spadopag(ext));
        assert_eq!(report, TopologyReport { components: 1, holes_per_component: vec![1] });
    }

    #[test]
    fn positive_inside_positive_is_not_realizable() {
        let r = decompose_atoms(
            vec![sphere(Point3::ZERO, 2.0, Orientation::Positive), sphere(Point3::ZERO, 1.0, Orientation::Positive)],
            tol(),
        );
        assert!(matches!(r, Err(Error::NotRealizable(_))));
    }

    #[test]
    fn validate_flags_broken_structures() {
        let ball = GElement::from_surfaces(vec![sphere(Point3::ZERO, 1.0, Orientation::Positive)], tol()).unwrap();
        assert!(validate(&ball, tol()).is_empty());

        let two_pos = GElement::Spadopag(RealizableSpadopag {
            atoms: vec![AtomSpadopag {
                positive: Some(sphere(Point3::ZERO, 2.0, Orientation::Positive)),
                negatives: vec![sphere(Point3::ZERO, 1.0, Orientation::Positive)],
            }],
        });
        assert!(validate(&two_pos, tol()).iter().any(|m| m.contains("multiple positive surfaces")));

        let lens = GElement::Spadopag(RealizableSpadopag {
            atoms: vec![
                AtomSpadopag { positive: Some(sphere(Point3::ZERO, 1.0, Orientation::Positive)), negatives: vec![] },
                AtomSpadopag {
                    positive: Some(sphere(Point3::new(1.0, 0.0, 0.0), 1.0, Orientation::Positive)),
                    negatives: vec![],
                },
            ],
        });
        assert!(validate(&lens, tol()).iter().any(|m| m.contains("atom interiors intersect")));
    }

    #[test]
    fn topology_of_constants() {
        assert_eq!(topology(&GElement::Bottom), TopologyReport { components: 0, holes_per_component: vec![] });
        assert_eq!(topology(&GElement::Top), TopologyReport { components: 1, holes_per_component: vec![0] });
    }

    #[test]
    fn witnesses_are_inside() {
        let s = sphere(Point3::ZERO, 1.0, Orientation::Positive);
        let p = interior_witness(&s, 7, tol()).unwrap();
        assert!(p.norm() < 1.0 - 1e-9);
        let torus = GluedSurface::new(shapes::torus(Point3::ZERO, 2.0, 0.1, 48, 12), Orientation::Positive);
        let q = interior_witness(&torus, 7, tol()).unwrap();
        assert!(membership::ray_crossing_inside(q, &torus, 99, tol()).unwrap());
        // An analytic check on top: inside the tube.
        let rho = (q.x * q.x + q.y * q.y).sqrt();
        assert!(((rho - 2.0).powi(2) + q.z * q.z).sqrt() < 0.1);
    }

    #[test]
    fn flat_surface_has_no_witness() {
        let flat = TriMesh::new(
            vec![Point3::ZERO, Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(0.3, 0.3, 1e-12)],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
        );
        let s = GluedSurface::new(flat, Orientation::Positive);
        assert!(matches!(interior_witness(&s, 1, Tolerance::new(1e-6).unwrap()), Err(Error::WitnessNotFound(_))));
    }
}
