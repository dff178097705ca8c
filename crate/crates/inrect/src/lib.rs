//! Maximum-area and maximum-perimeter rectangles inscribed in convex polygons.
//!
//! The exact solver lifts the problem into the six-dimensional polytope of
//! inscribed parallelograms ([`pspace`]), triangulates it, and maximizes the
//! rectangle objective on each simplex under the orthogonality constraint
//! ([`simplex_opt`], [`exact`]). An approximation path ([`kernel`], [`approx`])
//! shrinks the input to a coreset whose size depends only on the accuracy
//! target. [`oracle`] provides an independent orientation-sweep solver used to
//! validate results, and [`lowerbound`] generates the polygon family showing
//! the parallelogram polytope really needs cubically many vertices.

pub mod geom;
pub(crate) mod hull6;
pub mod exact;
pub mod oracle;
pub mod polygen;
pub mod pspace;
pub mod simplex_opt;
pub mod solution;

pub use geom::{ConvexPolygon, Point2, Vec2};
pub use solution::{Method, Objective, RectangleSolution};
