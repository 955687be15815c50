//! OBJ reading and writing, and Hasse diagrams as DOT.
//!
//! One file carries a whole spadopag: each `o` group is one glued surface,
//! and its winding says its orientation (counter-clockwise seen from outside
//! for positive, the reverse for negative). Only `v`, `f` and `o` records are
//! read; polygons are fan-triangulated.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::brep::{hasse, validate, GElement, GluedSurface, Orientation};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Point3, Tolerance, TriMesh};

/// Path that reads as the empty set.
pub const EMPTY_SENTINEL: &str = "@empty";
/// Path that reads as all of space.
pub const FULL_SENTINEL: &str = "@full";

const EMPTY_HEADER: &str = "# yinset: empty";
const FULL_HEADER: &str = "# yinset: full";

/// A named face group.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjObject {
    pub name: String,
    /// Zero-based indices into the document's vertex list.
    pub faces: Vec<[u32; 3]>,
}

/// Parsed OBJ content, or one of the two constants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjDocument {
    pub vertices: Vec<Point3>,
    pub objects: Vec<ObjObject>,
    /// `Some(false)` for the empty set, `Some(true)` for all of space.
    pub constant: Option<bool>,
}

impl ObjDocument {
    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// Builds the element: orientation from each object's signed volume,
    /// inclusion structure computed, then validated.
    pub fn to_element(&self, tol: Tolerance) -> Result<GElement> {
        match self.constant {
            Some(false) => return Ok(GElement::Bottom),
            Some(true) => return Ok(GElement::Top),
            None => {}
        }
        if self.objects.is_empty() {
            return Ok(GElement::Bottom);
        }
        let mut surfaces = Vec::with_capacity(self.objects.len());
        for (i, o) in self.objects.iter().enumerate() {
            let mesh = TriMesh::new(self.vertices.clone(), o.faces.clone()).compacted();
            let open = mesh.unpaired_edges();
            if !open.is_empty() {
                // Report edges with the file's 1-based vertex numbers.
                let edges = unpaired_file_edges(&o.faces);
                return Err(Error::NotClosed { object: o.name.clone(), open_edges: open.len(), edges });
            }
            let vol = mesh.signed_volume();
            if vol == 0.0 || !vol.is_finite() {
                return Err(Error::DegenerateInput);
            }
            let orientation = if vol > 0.0 { Orientation::Positive } else { Orientation::Negative };
            surfaces.push(GluedSurface::new(mesh, orientation).with_id(i));
        }
        let g = GElement::from_surfaces(surfaces, tol)?;
        let problems = validate(&g, tol);
        if problems.is_empty() {
            Ok(g)
        } else {
            Err(Error::NotRealizable(problems.join("; ")))
        }
    }
}

fn unpaired_file_edges(faces: &[[u32; 3]]) -> Vec<(u32, u32)> {
    let mut count = std::collections::HashMap::new();
    for f in faces {
        for k in 0..3 {
            *count.entry((f[k], f[(k + 1) % 3])).or_insert(0i32) += 1;
        }
    }
    let mut out: Vec<(u32, u32)> = count
        .iter()
        .filter(|(&(a, b), &n)| n != 1 || count.get(&(b, a)) != Some(&1))
        .map(|(&(a, b), _)| (a + 1, b + 1))
        .collect();
    out.sort_unstable();
    out
}

fn parse_index(tok: &str, n_vertices: usize, path: &Path, line: usize) -> Result<u32> {
    let err = |msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head.parse().map_err(|_| err(format!("bad vertex index {tok:?}")))?;
    let resolved = match i {
        0 => return Err(err("vertex index 0".into())),
        i if i > 0 => i - 1,
        i => n_vertices as i64 + i,
    };
    if resolved < 0 || resolved >= n_vertices as i64 {
        return Err(err(format!("vertex index {i} out of range (have {n_vertices})")));
    }
    Ok(resolved as u32)
}

/// Parses OBJ text; `path` only labels errors.
pub fn parse_obj(text: &str, path: &Path) -> Result<ObjDocument> {
    let mut doc = ObjDocument::default();
    let mut saw_geometry = false;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed == EMPTY_HEADER {
            doc.constant = Some(false);
            continue;
        }
        if trimmed == FULL_HEADER {
            doc.constant = Some(true);
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<f64> = toks
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse { path: path.to_path_buf(), line, msg: format!("bad coordinate: {e}") })?;
                if c.len() != 3 {
                    return Err(Error::Parse { path: path.to_path_buf(), line, msg: "vertex needs 3 coordinates".into() });
                }
                doc.vertices.push(Point3::new(c[0], c[1], c[2]));
                saw_geometry = true;
            }
            Some("f") => {
                let idx: Vec<u32> = toks.map(|t| parse_index(t, doc.vertices.len(), path, line)).collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::Parse { path: path.to_path_buf(), line, msg: "face needs at least 3 vertices".into() });
                }
                if doc.objects.is_empty() {
                    doc.objects.push(ObjObject { name: "unnamed".into(), faces: Vec::new() });
                }
                let faces = &mut doc.objects.last_mut().expect("object exists").faces;
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
                saw_geometry = true;
            }
            Some("o") => {
                let name = toks.collect::<Vec<_>>().join(" ");
                let name = if name.is_empty() { format!("object{}", doc.objects.len() + 1) } else { name };
                // An `o` record with no faces yet just renames the pending group.
                match doc.objects.last_mut() {
                    Some(last) if last.faces.is_empty() => last.name = name,
                    _ => doc.objects.push(ObjObject { name, faces: Vec::new() }),
                }
            }
            _ => {}
        }
    }
    doc.objects.retain(|o| !o.faces.is_empty());
    if saw_geometry && doc.constant.is_some() {
        return Err(Error::Parse { path: path.to_path_buf(), line: 1, msg: "constant header in a file with geometry".into() });
    }
    Ok(doc)
}

/// Reads an OBJ file, or a constant for the sentinel paths.
pub fn read_document(path: &Path) -> Result<ObjDocument> {
    match path.to_str() {
        Some(EMPTY_SENTINEL) => return Ok(ObjDocument { constant: Some(false), ..Default::default() }),
        Some(FULL_SENTINEL) => return Ok(ObjDocument { constant: Some(true), ..Default::default() }),
        _ => {}
    }
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_obj(&text, path)
}

/// Reads a spadopag. Without `tol`, ε is taken relative to the file's bounding box.
pub fn read_spadopag(path: &Path, tol: Option<Tolerance>) -> Result<GElement> {
    let doc = read_document(path)?;
    let tol = tol.unwrap_or_else(|| Tolerance::for_bounds(&doc.bounds()));
    doc.to_element(tol)
}

/// OBJ text for a spadopag; the two constants have no mesh form.
pub fn obj_text(g: &GElement) -> Result<String> {
    let sp = match g {
        GElement::Bottom => return Err(Error::CannotSerialize("the empty set")),
        GElement::Top => return Err(Error::CannotSerialize("all of space")),
        GElement::Spadopag(sp) => sp,
    };
    let mut out = String::new();
    let mut base = 1usize;
    let mut emit = |name: String, s: &GluedSurface, out: &mut String| {
        let m = s.oriented_mesh();
        let _ = writeln!(out, "o {name}");
        for p in &m.vertices {
            let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
        }
        for f in &m.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] as usize + base, f[1] as usize + base, f[2] as usize + base);
        }
        base += m.vertices.len();
    };
    for (k, atom) in sp.atoms.iter().enumerate() {
        let k = k + 1;
        if let Some(p) = &atom.positive {
            emit(format!("atom{k}_pos"), p, &mut out);
        }
        for (j, n) in atom.negatives.iter().enumerate() {
            emit(format!("atom{k}_neg{}", j + 1), n, &mut out);
        }
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: PathBuf::from(path), source })
}

/// Writes `g` as OBJ. The constants become a one-line sentinel header that
/// reads back as the same constant.
pub fn write_spadopag(g: &GElement, path: &Path) -> Result<()> {
    let text = match obj_text(g) {
        Ok(t) => t,
        Err(Error::CannotSerialize(_)) if g.is_bottom() => format!("{EMPTY_HEADER}\n"),
        Err(Error::CannotSerialize(_)) => format!("{FULL_HEADER}\n"),
        Err(e) => return Err(e),
    };
    write_file(path, &text)
}

/// DOT digraph of the covering relation: edges from includer to included,
/// positive surfaces filled. Nodes and edges are emitted sorted.
pub fn hasse_dot(g: &GElement, tol: Tolerance) -> Result<String> {
    let surfaces: Vec<GluedSurface> = g.surfaces().into_iter().cloned().collect();
    let h = hasse(&surfaces, tol)?;
    let mut out = String::from("digraph hasse {\n  node [shape=circle];\n");
    for (i, s) in surfaces.iter().enumerate() {
        let sign = if s.is_positive() { '+' } else { '-' };
        let style = if s.is_positive() { ", style=filled, fillcolor=lightblue" } else { "" };
        let _ = writeln!(out, "  s{i} [label=\"S{}{sign}\"{style}];", i + 1);
    }
    let mut edges = h.edges.clone();
    edges.sort_unstable();
    for (k, l) in edges {
        let _ = writeln!(out, "  s{k} -> s{l};");
    }
    out.push_str("}\n");
    Ok(out)
}

pub fn write_hasse_dot(g: &GElement, path: &Path, tol: Tolerance) -> Result<()> {
    write_file(path, &hasse_dot(g, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn tol() -> Tolerance {
        Tolerance::new(1e-9).unwrap()
    }

    fn obj_of(meshes: &[(&str, TriMesh)]) -> String {
        let mut s = String::new();
        let mut base = 1;
        for (name, m) in meshes {
            let _ = writeln!(s, "o {name}");
            for p in &m.vertices {
                let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
            }
            for f in &m.faces {
                let _ = writeln!(s, "f {} {} {}", f[0] + base, f[1] + base, f[2] + base);
            }
            base += m.vertices.len() as u32;
        }
        s
    }

    fn load(text: &str) -> Result<GElement> {
        parse_obj(text, Path::new("test.obj"))?.to_element(tol())
    }

    fn unit_cube() -> TriMesh {
        shapes::cube(Point3::ZERO, Point3::new(1.0, 1.0, 1.0))
    }

    fn shell_text() -> String {
        obj_of(&[
            ("outer", shapes::icosphere(Point3::ZERO, 2.0, 1)),
            ("inner", shapes::icosphere(Point3::ZERO, 1.0, 1).flipped()),
        ])
    }

    #[test]
    fn reads_a_cube() {
        let g = load(&obj_of(&[("cube", unit_cube())])).unwrap();
        assert_eq!(g.orientation_signature(), vec![Orientation::Positive]);
        assert_eq!(g.surfaces()[0].mesh.faces.len(), 12);
    }

    #[test]
    fn inward_inner_sphere_makes_a_shell() {
        let g = load(&shell_text()).unwrap();
        let sp = g.spadopag().unwrap();
        assert_eq!(sp.atoms.len(), 1);
        assert!(sp.atoms[0].positive.is_some());
        assert_eq!(sp.atoms[0].negatives.len(), 1);
    }

    #[test]
    fn open_object_is_rejected() {
        let mut m = unit_cube();
        m.faces.pop();
        match load(&obj_of(&[("lid_missing", m)])) {
            Err(Error::NotClosed { object, open_edges, edges }) => {
                assert_eq!(object, "lid_missing");
                assert_eq!(open_edges, 3);
                assert_eq!(edges.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quads_are_fanned_and_extras_ignored() {
        let text = "# comment\nvn 0 0 1\no q\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/1 3 4\n";
        let doc = parse_obj(text, Path::new("q.obj")).unwrap();
        assert_eq!(doc.objects[0].faces, vec![[0, 1, 2], [0, 2, 3]]);
        let neg = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n", Path::new("n.obj")).unwrap();
        assert_eq!(neg.objects[0].faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_obj("v 0 0 0\nf 1 2 9\n", Path::new("bad.obj")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_obj("v 0 x 0\n", Path::new("bad.obj")), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trips() {
        for text in [obj_of(&[("cube", unit_cube())]), shell_text()] {
            let g = load(&text).unwrap();
            let out = obj_text(&g).unwrap();
            let again = load(&out).unwrap();
            assert_eq!(again.orientation_signature(), g.orientation_signature());
            assert_eq!(again.topology(), g.topology());
            for (a, b) in g.surfaces().iter().zip(again.surfaces()) {
                assert_eq!(a.mesh.faces, b.mesh.faces);
                assert!(a.mesh.vertices.iter().zip(&b.mesh.vertices).all(|(p, q)| p.distance(*q) <= tol().eps()));
            }
            // read ∘ write ∘ read = read, byte for byte after normalization.
            assert_eq!(obj_text(&again).unwrap(), out);
        }
    }

    #[test]
    fn shell_objects_have_opposite_windings() {
        let out = obj_text(&load(&shell_text()).unwrap()).unwrap();
        let doc = parse_obj(&out, Path::new("out.obj")).unwrap();
        let names: Vec<&str> = doc.objects.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, vec!["atom1_pos", "atom1_neg1"]);
        let vols: Vec<f64> = doc
            .objects
            .iter()
            .map(|o| TriMesh::new(doc.vertices.clone(), o.faces.clone()).compacted().signed_volume())
            .collect();
        assert!(vols[0] > 0.0 && vols[1] < 0.0);
    }

    #[test]
    fn flipping_one_object_flips_only_its_flag() {
        let a = shapes::icosphere(Point3::ZERO, 1.0, 1);
        let b = shapes::icosphere(Point3::new(5.0, 0.0, 0.0), 1.0, 1);
        let g = load(&obj_of(&[("a", a.clone()), ("b", b)])).unwrap();
        assert_eq!(g.orientation_signature(), vec![Orientation::Positive, Orientation::Positive]);
        let big = shapes::icosphere(Point3::ZERO, 3.0, 1);
        let g = load(&obj_of(&[("big", big), ("a", a.flipped())])).unwrap();
        let flags: Vec<Orientation> = g.surfaces().iter().map(|s| s.orientation).collect();
        assert_eq!(flags, vec![Orientation::Positive, Orientation::Negative]);
        assert!(g.surfaces().iter().all(|s| s.mesh.signed_volume() > 0.0));
    }

    #[test]
    fn constants_and_sentinels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.obj");
        write_spadopag(&GElement::Bottom, &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "# yinset: empty\n");
        assert!(read_spadopag(&p, None).unwrap().is_bottom());
        write_spadopag(&GElement::Top, &p).unwrap();
        assert!(read_spadopag(&p, None).unwrap().is_top());
        assert!(read_spadopag(Path::new(EMPTY_SENTINEL), None).unwrap().is_bottom());
        assert!(read_spadopag(Path::new(FULL_SENTINEL), None).unwrap().is_top());
        assert!(matches!(obj_text(&GElement::Bottom), Err(Error::CannotSerialize(_))));
        assert!(matches!(read_spadopag(&dir.path().join("missing.obj"), None), Err(Error::Io { .. })));
    }

    fn dot_counts(dot: &str) -> (usize, usize, usize) {
        let nodes = dot.lines().filter(|l| l.contains("[label=")).count();
        let edges = dot.lines().filter(|l| l.contains("->")).count();
        let filled = dot.lines().filter(|l| l.contains("style=filled")).count();
        (nodes, edges, filled)
    }

    #[test]
    fn hasse_of_a_sphere_and_a_nest() {
        let one = load(&obj_of(&[("s", shapes::icosphere(Point3::ZERO, 1.0, 1))])).unwrap();
        assert_eq!(dot_counts(&hasse_dot(&one, tol()).unwrap()), (1, 0, 1));
        let nest = load(&obj_of(&[
            ("r3", shapes::icosphere(Point3::ZERO, 3.0, 1)),
            ("r2", shapes::icosphere(Point3::ZERO, 2.0, 1).flipped()),
            ("r1", shapes::icosphere(Point3::ZERO, 1.0, 1)),
        ]))
        .unwrap();
        let dot = hasse_dot(&nest, tol()).unwrap();
        assert_eq!(dot_counts(&dot), (3, 2, 2));
        assert_eq!(dot, hasse_dot(&nest, tol()).unwrap());
    }
}
