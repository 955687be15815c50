//! Adaptive octree over triangle boxes for broad-phase pair culling.
//!
//! Cells split while they hold more than `leaf_cap` triangles; a split is
//! undone when the children would have to test at least as many pairs as
//! the parent, which stops large triangles from being copied into every
//! child for nothing.

use crate::geom::{Aabb, Tolerance, Triangle};

#[derive(Debug, Clone)]
pub struct OctCell {
    pub bounds: Aabb,
    pub depth: usize,
    /// Triangle ids whose (ε-inflated) box overlaps the cell; empty for interior cells.
    pub ids: Vec<u32>,
    pub children: Option<[usize; 8]>,
}

#[derive(Debug, Clone)]
pub struct Octree {
    pub cells: Vec<OctCell>,
}

pub const DEFAULT_LEAF_CAP: usize = 16;
pub const DEFAULT_MAX_DEPTH: usize = 12;

fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Builds the octree over `tris` (an empty list gives a single empty leaf).
pub fn build_octree(tris: &[Triangle], leaf_cap: usize, max_depth: usize, tol: Tolerance) -> Octree {
    let boxes: Vec<Aabb> = tris.iter().map(|t| t.bounds().inflated(tol.eps())).collect();
    let root_box = boxes.iter().fold(Aabb::empty(), |b, t| b.union(t));
    let mut tree = Octree { cells: Vec::new() };
    let ids: Vec<u32> = (0..tris.len() as u32).collect();
    build(&mut tree, root_box, 0, ids, &boxes, leaf_cap.max(1), max_depth);
    tree
}

fn build(tree: &mut Octree, bounds: Aabb, depth: usize, ids: Vec<u32>, boxes: &[Aabb], cap: usize, max_depth: usize) -> usize {
    let me = tree.cells.len();
    tree.cells.push(OctCell { bounds, depth, ids: Vec::new(), children: None });
    if ids.len() <= cap || depth >= max_depth {
        tree.cells[me].ids = ids;
        return me;
    }
    let c = bounds.center();
    let mut child_ids: [Vec<u32>; 8] = Default::default();
    let mut child_boxes = [Aabb::empty(); 8];
    for (o, cb) in child_boxes.iter_mut().enumerate() {
        let lo = crate::geom::Point3::new(
            if o & 1 == 0 { bounds.min.x } else { c.x },
            if o & 2 == 0 { bounds.min.y } else { c.y },
            if o & 4 == 0 { bounds.min.z } else { c.z },
        );
        let hi = crate::geom::Point3::new(
            if o & 1 == 0 { c.x } else { bounds.max.x },
            if o & 2 == 0 { c.y } else { bounds.max.y },
            if o & 4 == 0 { c.z } else { bounds.max.z },
        );
        *cb = Aabb { min: lo, max: hi };
        child_ids[o] = ids.iter().copied().filter(|&i| boxes[i as usize].overlaps(cb)).collect();
    }
    // Bottom-up merge: splitting must reduce the pair count.
    if child_ids.iter().map(|v| pairs(v.len())).sum::<usize>() >= pairs(ids.len()) {
        tree.cells[me].ids = ids;
        return me;
    }
    let mut children = [0usize; 8];
    for (o, cid) in child_ids.into_iter().enumerate() {
        children[o] = build(tree, child_boxes[o], depth + 1, cid, boxes, cap, max_depth);
    }
    // Collapse if every child stayed a leaf and the split still does not pay.
    let all_leaves = children.iter().all(|&k| tree.cells[k].children.is_none());
    if all_leaves && children.iter().map(|&k| pairs(tree.cells[k].ids.len())).sum::<usize>() >= pairs(ids.len()) {
        tree.cells.truncate(me + 1);
        tree.cells[me].ids = ids;
        return me;
    }
    tree.cells[me].children = Some(children);
    me
}

impl Octree {
    pub fn leaves(&self) -> impl Iterator<Item = &OctCell> {
        self.cells.iter().filter(|c| c.children.is_none())
    }

    /// Deduplicated pairs `(i, j)`, `i < j`, sharing at least one leaf.
    pub fn candidate_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for leaf in self.leaves() {
            for (k, &i) in leaf.ids.iter().enumerate() {
                for &j in &leaf.ids[k + 1..] {
                    out.push((i.min(j), i.max(j)));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
