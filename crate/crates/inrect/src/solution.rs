//! Shared solution types: an inscribed rectangle in canonical form, its
//! objective values, and provenance metadata.
//!
//! A rectangle is stored as a corner `x` and two perpendicular edge vectors
//! `u`, `v`; the corner set is `{x, x+u, x+v, x+u+v}`. The same rectangle has
//! eight such representations (four corner choices, times swapping `u`/`v`),
//! so [`canonicalize`] picks the lexicographically smallest 6-tuple to make
//! solver output and tie-breaking deterministic.

use crate::geom::{parallelogram_vertices, Point2, Vec2};

/// Which quantity a solver maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    Area,
    Perimeter,
}

/// Which solver produced a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Approx,
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Approx => "approx",
            Method::Oracle => "oracle",
        }
    }
}

/// Work counters attached to a solution; zero for solvers where a counter
/// does not apply.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Simplices in the triangulated parallelogram polytope.
    pub simplices: usize,
    /// Candidate faces actually sent to the local optimizer.
    pub faces_solved: usize,
    /// Candidate faces discarded by upper-bound or sign pruning.
    pub faces_pruned: usize,
    /// Objective evaluations (oracle) or Newton iterations (exact).
    pub evaluations: usize,
}

/// Map -0.0 to 0.0 so canonical tuples have a unique bit pattern and print form.
fn clean_zero(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t
    }
}

fn tuple_of(x: Point2, u: Vec2, v: Vec2) -> [f64; 6] {
    [
        clean_zero(x.x),
        clean_zero(x.y),
        clean_zero(u.x),
        clean_zero(u.y),
        clean_zero(v.x),
        clean_zero(v.y),
    ]
}

fn lex_less(a: &[f64; 6], b: &[f64; 6]) -> bool {
    for k in 0..6 {
        if a[k] < b[k] {
            return true;
        }
        if a[k] > b[k] {
            return false;
        }
    }
    false
}

/// Return the lexicographically smallest of the eight equivalent
/// `(x, u, v)` representations of the same rectangle.
pub fn canonicalize(x: Point2, u: Vec2, v: Vec2) -> (Point2, Vec2, Vec2) {
    // Each corner, paired with the edge vectors that walk the same corner set.
    let reps = [
        (x, u, v),
        (x + u, -u, v),
        (x + v, u, -v),
        (x + u + v, -u, -v),
    ];
    let mut best: Option<([f64; 6], (Point2, Vec2, Vec2))> = None;
    for &(cx, cu, cv) in &reps {
        for &(a, b) in &[(cu, cv), (cv, cu)] {
            let t = tuple_of(cx, a, b);
            if best.as_ref().map_or(true, |(bt, _)| lex_less(&t, bt)) {
                let rep = (
                    Point2::new(t[0], t[1]),
                    Vec2::new(t[2], t[3]),
                    Vec2::new(t[4], t[5]),
                );
                best = Some((t, rep));
            }
        }
    }
    best.unwrap().1
}

/// An inscribed rectangle in canonical form together with its objective
/// values. `degenerate` marks segment (or point) solutions, which are valid
/// maximum-perimeter answers.
#[derive(Clone, Debug)]
pub struct RectangleSolution {
    pub x: Point2,
    pub u: Vec2,
    pub v: Vec2,
    pub area: f64,
    pub perimeter: f64,
    pub degenerate: bool,
    pub method: Method,
    pub meta: SolveStats,
}

impl RectangleSolution {
    /// Canonicalize `(x, u, v)` and derive area, perimeter, and the
    /// degeneracy flag. `scale` is the owning polygon's scale, used only for
    /// the degeneracy threshold.
    pub fn new(x: Point2, u: Vec2, v: Vec2, method: Method, scale: f64) -> Self {
        let (x, u, v) = canonicalize(x, u, v);
        let (lu, lv) = (u.norm(), v.norm());
        RectangleSolution {
            x,
            u,
            v,
            area: lu * lv,
            perimeter: 2.0 * (lu + lv),
            degenerate: lu.min(lv) <= crate::geom::REL_TOL * scale,
            method,
            meta: SolveStats::default(),
        }
    }

    pub fn with_stats(mut self, meta: SolveStats) -> Self {
        self.meta = meta;
        self
    }

    /// The four corners `[x, x+u, x+v, x+u+v]`.
    pub fn corners(&self) -> [Point2; 4] {
        parallelogram_vertices(self.x, self.u, self.v)
    }

    /// The value of `objective` on this rectangle.
    pub fn value(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Area => self.area,
            Objective::Perimeter => self.perimeter,
        }
    }
}
