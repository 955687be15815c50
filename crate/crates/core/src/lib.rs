//! Boolean algebra on 3D Yin sets through their boundary representation.
//!
//! A Yin set (a regular open region with bounded boundary) is represented by
//! a set of oriented, closed, triangulated glued surfaces grouped into atoms.
//! Complement, meet and join work purely on that representation: surfaces
//! are cut at their mutual intersections, patches are selected by
//! point-membership tests, and the survivors are pasted back together by
//! the minimal directed-angle rule.
//!
//! ```
//! use yinset::{boolean, shapes, GElement, GluedSurface, Orientation, Point3, Tolerance};
//!
//! let a = GElement::from_surfaces(vec![GluedSurface::new(
//!     shapes::icosphere(Point3::ZERO, 1.0, 2),
//!     Orientation::Positive,
//! )], Tolerance::default()).unwrap();
//! let not_a = boolean::complement(&a, Tolerance::default()).unwrap();
//! assert_eq!(not_a.topology().holes_per_component, vec![1]);
//! ```

// `!(x > 0.0)` is used on purpose so NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boolean;
pub mod brep;
pub mod cli;
pub mod cutting;
pub mod error;
pub mod geom;
pub mod io;
pub mod mars;
pub mod membership;
pub mod pasting;
pub mod shapes;
pub mod verify;

pub use brep::{AtomSpadopag, GElement, GluedSurface, HasseDiagram, Orientation, RealizableSpadopag, TopologyReport};
pub use error::{Error, Result};
pub use geom::{Aabb, Point3, PolyCurve, Tolerance, TriMesh, Triangle, Vec3};
pub use membership::PointClass;
