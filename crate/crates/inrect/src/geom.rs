//! Planar primitives: validated strictly convex polygons and the queries the
//! rest of the crate is built on — directional width, extreme-point and
//! line-clip lookups, farthest-pair diameter, point containment.
//!
//! All tolerance checks are relative to a polygon's `scale` (the diagonal of
//! its bounding box), so the code behaves identically for micron-sized and
//! kilometre-sized inputs.

use nalgebra::Vector2;
use thiserror::Error;

pub type Point2 = Vector2<f64>;
pub type Vec2 = Vector2<f64>;

/// Relative geometric tolerance used throughout the crate. Multiply by a
/// length scale to get an absolute threshold.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PolygonError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("vertex sequence does not turn strictly left at index {0}")]
    NotConvex(usize),
    #[error("vertex set spans a degenerate area")]
    DegenerateArea,
    #[error("coordinates must be finite")]
    NonFinite,
}

#[derive(Debug, Error, PartialEq)]
#[error("direction must be a unit vector")]
pub struct NonUnitDirection;

/// Closed halfplane `{p : ⟨normal, p⟩ ≤ offset}` with unit outward normal.
#[derive(Debug, Clone, Copy)]
pub struct Halfplane {
    pub normal: Vec2,
    pub offset: f64,
}

impl Halfplane {
    /// Positive outside, negative inside.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.normal.dot(&p) - self.offset
    }
}

/// Chord of a polygon. `a == b` is allowed (tangent line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Strictly convex polygon with vertices in counter-clockwise order.
///
/// Construction validates convexity; collinear vertices are rejected rather
/// than merged so that edge indices stay unambiguous.
#[derive(Debug, Clone)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
    halfplanes: Vec<Halfplane>,
    scale: f64,
    area: f64,
}

impl ConvexPolygon {
    /// Validates and builds a polygon. Clockwise input is reversed; collinear
    /// triples, duplicates and degenerate areas are errors.
    pub fn new(points: Vec<Point2>) -> Result<Self, PolygonError> {
        let n = points.len();
        if n < 3 {
            return Err(PolygonError::TooFewVertices(n));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(PolygonError::NonFinite);
        }

        let scale = bbox_diagonal(&points);
        if scale <= 0.0 {
            return Err(PolygonError::DegenerateArea);
        }
        // Duplicate detection over all pairs via a lexicographic sort window.
        let dup_tol = 1e-12 * scale;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            (points[a].x, points[a].y)
                .partial_cmp(&(points[b].x, points[b].y))
                .unwrap()
        });
        for w in 0..n {
            for w2 in w + 1..n {
                let (i, j) = (order[w], order[w2]);
                if points[j].x - points[i].x > dup_tol {
                    break;
                }
                if (points[j] - points[i]).norm() <= dup_tol {
                    return Err(PolygonError::DuplicateVertex(i.min(j), i.max(j)));
                }
            }
        }

        let mut vertices = points;
        // Strictness at vertex b is measured as its distance from the chord
        // of its neighbors, relative to the polygon scale. (A pure
        // cross-product threshold would wrongly reject fine discretizations
        // such as high-resolution regular polygons, whose turn areas shrink
        // cubically with the edge length.)
        let turn = |a: Point2, b: Point2, c: Point2| {
            let chord = c - a;
            cross(b - a, chord) / chord.norm().max(1e-300)
        };
        // All-collinear input is a degenerate area; anything else that fails
        // the strict-left-turn test (after orientation) is NotConvex.
        let max_turn = (0..n)
            .map(|i| turn(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]).abs())
            .fold(0.0f64, f64::max);
        if max_turn <= REL_TOL * scale {
            return Err(PolygonError::DegenerateArea);
        }
        if signed_area2(&vertices) < 0.0 {
            vertices.reverse();
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if turn(a, b, c) <= REL_TOL * scale {
                return Err(PolygonError::NotConvex((i + 1) % n));
            }
        }

        let halfplanes = vertices
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let b = vertices[(i + 1) % n];
                let e = b - a;
                // Interior lies left of each CCW edge, so the outward normal
                // is the edge direction rotated -90°.
                let normal = Vec2::new(e.y, -e.x) / e.norm();
                Halfplane {
                    normal,
                    offset: normal.dot(&a),
                }
            })
            .collect();

        let area = signed_area2(&vertices).abs() / 2.0;
        Ok(ConvexPolygon {
            vertices,
            halfplanes,
            scale,
            area,
        })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    /// Halfplane of the edge from vertex `i` to vertex `i+1`.
    pub fn halfplanes(&self) -> &[Halfplane] {
        &self.halfplanes
    }

    /// Bounding-box diagonal; the length unit for all relative tolerances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Point2 {
        // Area-weighted centroid (vertex average would be wrong for uneven
        // vertex spacing).
        let mut acc = Vec2::zeros();
        let mut a2 = 0.0;
        let o = self.vertices[0];
        for i in 1..self.n() - 1 {
            let b = self.vertices[i] - o;
            let c = self.vertices[i + 1] - o;
            let w = cross(b, c);
            acc += (b + c) * (w / 3.0);
            a2 += w;
        }
        o + acc / a2
    }

    /// ω(u, P) = max⟨p,u⟩ − min⟨p,u⟩ over the polygon.
    pub fn directional_width(&self, u: Vec2) -> Result<f64, NonUnitDirection> {
        check_unit(u)?;
        let hi = self.vertices[self.extremal_index(u)].dot(&u);
        let lo = self.vertices[self.extremal_index(-u)].dot(&u);
        Ok(hi - lo)
    }

    /// Vertex maximizing ⟨p, u⟩, by binary search over the vertex cycle.
    /// Exact ties (flat edge perpendicular to `u`) go to the smaller index.
    pub fn extremal_point(&self, u: Vec2) -> Result<(usize, Point2), NonUnitDirection> {
        check_unit(u)?;
        let i = self.extremal_index(u);
        Ok((i, self.vertices[i]))
    }

    /// Binary-search extreme-vertex query without the unit-norm check; used
    /// internally where `u` is constructed unit-length.
    ///
    /// On a CCW strictly convex polygon the cumulative rotation from edge 0
    /// to edge i is strictly increasing in i, so the ascending→descending
    /// transition of ⟨p, u⟩ can be located with `partition_point`. ⟨e_i, u⟩
    /// first turns non-positive once that rotation reaches the angle taking
    /// edge 0 onto the direction perpendicular to `u` (u rotated +90°).
    pub(crate) fn extremal_index(&self, u: Vec2) -> usize {
        use std::f64::consts::TAU;
        let n = self.n();
        let v = &self.vertices;
        let dot = |i: usize| v[i % n].dot(&u);

        let e0 = v[1] - v[0];
        // Cumulative CCW rotation from edge 0 to edge i, in [0, 2π). Exact
        // because partial sums of exterior angles stay below a full turn.
        let rho = |i: usize| {
            let e = v[(i + 1) % n] - v[i];
            let a = cross(e0, e).atan2(e0.dot(&e));
            if a < 0.0 {
                a + TAU
            } else {
                a
            }
        };
        let theta0 = e0.y.atan2(e0.x);
        let theta_u = u.y.atan2(u.x);
        let target = (theta_u + TAU / 4.0 - theta0).rem_euclid(TAU);

        // First edge whose direction has rotated at least `target`: its start
        // vertex is (up to rounding at exact ties) the maximizer. If every
        // edge falls short the transition wraps, i.e. vertex 0 is extreme.
        let mut lo = 0usize;
        let mut hi = n;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if rho(mid) < target {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let mut best = lo % n;

        // Angle rounding can misplace the transition by one step near ties;
        // polish with exact dot comparisons, then apply the smallest-index
        // rule (strict convexity allows at most two tied vertices).
        for _ in 0..2 {
            if dot(best + 1) > dot(best) {
                best = (best + 1) % n;
            } else if dot(best + n - 1) > dot(best) {
                best = (best + n - 1) % n;
            }
        }
        let prev = (best + n - 1) % n;
        let next = (best + 1) % n;
        let mut winner = best;
        if dot(prev) == dot(best) && prev < winner {
            winner = prev;
        }
        if dot(next) == dot(best) && next < winner {
            winner = next;
        }
        winner
    }

    /// Chord `P ∩ ℓ` for the line through `point` along `direction`, endpoints
    /// ordered along `direction`. `None` when the line misses the polygon.
    pub fn clip_line(&self, point: Point2, direction: Vec2) -> Option<Segment> {
        let d = direction;
        assert!(d.norm_squared() > 0.0, "line direction must be nonzero");
        let tol = REL_TOL * self.scale;
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for h in &self.halfplanes {
            let num = h.offset - h.normal.dot(&point);
            let den = h.normal.dot(&d);
            if den.abs() * self.scale <= tol * d.norm() {
                // Line parallel to this edge: either wholly inside the
                // halfplane (within tolerance) or it misses the polygon.
                if num < -tol {
                    return None;
                }
            } else if den > 0.0 {
                t1 = t1.min(num / den);
            } else {
                t0 = t0.max(num / den);
            }
        }
        let slack = tol / d.norm();
        if t0 > t1 + slack {
            return None;
        }
        if t0 > t1 {
            // Tangent within tolerance: collapse to a single point.
            let t = 0.5 * (t0 + t1);
            let p = point + d * t;
            return Some(Segment { a: p, b: p });
        }
        Some(Segment {
            a: point + d * t0,
            b: point + d * t1,
        })
    }

    /// Farthest vertex pair `(i, j, |p_i − p_j|)` by rotating calipers.
    /// Equal-distance ties resolve to the lexicographically smallest `(i, j)`.
    pub fn diameter(&self) -> (usize, usize, f64) {
        let n = self.n();
        let v = &self.vertices;
        let mut best = (0usize, 0usize, -1.0f64);
        let mut consider = |i: usize, j: usize| {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            let d2 = (v[j] - v[i]).norm_squared();
            if d2 > best.2 || (d2 == best.2 && (i, j) < (best.0, best.1)) {
                best = (i, j, d2);
            }
        };
        if n == 3 {
            consider(0, 1);
            consider(0, 2);
            consider(1, 2);
            return (best.0, best.1, best.2.sqrt());
        }
        // Antipodal-pair walk: advance j while the triangle on edge (i, i+1)
        // keeps growing; ties (parallel edges) examine both candidates.
        let area2 = |a: Point2, b: Point2, c: Point2| cross(b - a, c - a);
        let mut j = 1usize;
        for i in 0..n {
            let i1 = (i + 1) % n;
            loop {
                let j1 = (j + 1) % n;
                let cur = area2(v[i], v[i1], v[j % n]);
                let nxt = area2(v[i], v[i1], v[j1]);
                if nxt > cur {
                    j = j1;
                    if j == i {
                        // Never let the caliper lap the edge pointer.
                        break;
                    }
                } else {
                    if nxt == cur {
                        consider(i, j1);
                        consider(i1, j1);
                    }
                    break;
                }
            }
            consider(i, j % n);
            consider(i1, j % n);
        }
        (best.0, best.1, best.2.sqrt())
    }

    /// True iff `⟨n_i, p⟩ ≤ c_i + tol·scale` for every edge halfplane.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let slack = tol * self.scale;
        self.halfplanes
            .iter()
            .all(|h| h.signed_distance(p) <= slack)
    }
}

/// The four parallelogram corners `x, x+u, x+v, x+u+v`.
pub fn parallelogram_vertices(x: Point2, u: Vec2, v: Vec2) -> [Point2; 4] {
    [x, x + u, x + v, x + u + v]
}

fn check_unit(u: Vec2) -> Result<(), NonUnitDirection> {
    if (u.norm() - 1.0).abs() > 1e-12 {
        return Err(NonUnitDirection);
    }
    Ok(())
}

fn signed_area2(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += cross(a, b);
    }
    s
}

fn bbox_diagonal(pts: &[Point2]) -> f64 {
    let mut min = pts[0];
    let mut max = pts[0];
    for p in pts {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    (max - min).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygen;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    pub(crate) fn unit_square() -> ConvexPolygon {
        ConvexPolygon::new(vec![pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.)]).unwrap()
    }

    #[test]
    fn build_and_orientation() {
        let sq = unit_square();
        assert_eq!(sq.n(), 4);
        assert_relative_eq!(sq.area(), 1.0);

        // Clockwise input is accepted and reversed.
        let cw = ConvexPolygon::new(vec![pt(0., 0.), pt(0., 1.), pt(1., 1.), pt(1., 0.)]).unwrap();
        assert!(signed_area2(cw.vertices()) > 0.0);

        assert_eq!(
            ConvexPolygon::new(vec![pt(0., 0.), pt(1., 0.)]).unwrap_err(),
            PolygonError::TooFewVertices(2)
        );
        // Self-crossing vertex order.
        assert!(matches!(
            ConvexPolygon::new(vec![pt(0., 0.), pt(1., 1.), pt(1., 0.), pt(0., 1.)]).unwrap_err(),
            PolygonError::NotConvex(_)
        ));
        // Collinear triple is rejected, not merged.
        assert!(matches!(
            ConvexPolygon::new(vec![pt(0., 0.), pt(1., 0.), pt(2., 0.), pt(1., 1.)]).unwrap_err(),
            PolygonError::NotConvex(_)
        ));
        assert!(matches!(
            ConvexPolygon::new(vec![pt(0., 0.), pt(1., 0.), pt(1e-15, 0.), pt(0., 1.)])
                .unwrap_err(),
            PolygonError::DuplicateVertex(..)
        ));
        assert_eq!(
            ConvexPolygon::new(vec![pt(0., 0.), pt(1., 0.), pt(2., 0.)]).unwrap_err(),
            PolygonError::DegenerateArea
        );
    }

    #[test]
    fn width_axis_and_diagonal() {
        let sq = unit_square();
        assert_relative_eq!(sq.directional_width(pt(1., 0.)).unwrap(), 1.0);
        let d = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(
            sq.directional_width(pt(d, d)).unwrap(),
            2.0f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(
            sq.directional_width(pt(1., 1.)).unwrap_err(),
            NonUnitDirection
        );
    }

    #[test]
    fn width_hexagon_matches_direct_formula() {
        let hex = polygen::regular_ngon(6, 1.0);
        let u = pt(1., 0.);
        let brute = {
            let dots: Vec<f64> = hex.vertices().iter().map(|p| p.dot(&u)).collect();
            dots.iter().cloned().fold(f64::MIN, f64::max)
                - dots.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert_relative_eq!(hex.directional_width(u).unwrap(), brute, epsilon = 1e-12);
    }

    #[test]
    fn width_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = polygen::random_convex(8, &mut rng);
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let u = pt(a.cos(), a.sin());
            assert_relative_eq!(
                p.directional_width(u).unwrap(),
                p.directional_width(-u).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn extremal_tie_break_and_corner() {
        let sq = unit_square();
        // (1,0) and (1,1) tie in direction +x; index 1 wins over index 2.
        assert_eq!(sq.extremal_point(pt(1., 0.)).unwrap().0, 1);
        let d = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(sq.extremal_point(pt(d, d)).unwrap().1, pt(1., 1.));
    }

    #[test]
    fn extremal_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for round in 0..100 {
            let n = [3, 4, 5, 8, 17, 40, 1000][round % 7];
            let p = polygen::random_convex(n, &mut rng);
            for _ in 0..100 {
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let u = pt(a.cos(), a.sin());
                let (bi, _) = p.extremal_point(u).unwrap();
                let scan = (0..p.n())
                    .max_by(|&i, &j| {
                        p.vertex(i)
                            .dot(&u)
                            .partial_cmp(&p.vertex(j).dot(&u))
                            .unwrap()
                            .then(j.cmp(&i))
                    })
                    .unwrap();
                assert_eq!(
                    p.vertex(bi).dot(&u),
                    p.vertex(scan).dot(&u),
                    "n={n} u={u:?}"
                );
                assert_eq!(bi, scan, "n={n} u={u:?}");
            }
        }
    }

    #[test]
    fn clip_line_cases() {
        let sq = unit_square();
        let mid = sq.clip_line(pt(0.5, 0.5), pt(1., 0.)).unwrap();
        assert_relative_eq!((mid.a - pt(0., 0.5)).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((mid.b - pt(1., 0.5)).norm(), 0.0, epsilon = 1e-12);

        assert!(sq.clip_line(pt(0.5, 2.0), pt(1., 0.)).is_none());

        // Tangent along the top edge returns the full edge.
        let top = sq.clip_line(pt(0.5, 1.0), pt(1., 0.)).unwrap();
        assert_relative_eq!(top.length(), 1.0, epsilon = 1e-9);
        for p in [top.a, top.b] {
            assert!(sq.contains(p, 1e-9));
        }
    }

    #[test]
    fn clip_line_endpoints_inside_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = polygen::random_convex(9, &mut rng);
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let q = pt(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            if let Some(seg) = p.clip_line(q, pt(a.cos(), a.sin())) {
                assert!(p.contains(seg.a, 1e-9));
                assert!(p.contains(seg.b, 1e-9));
                // Endpoints ordered along the direction.
                assert!((seg.b - seg.a).dot(&pt(a.cos(), a.sin())) >= -1e-12);
            }
        }
    }

    #[test]
    fn diameter_square_and_thin_triangle() {
        let sq = unit_square();
        let (i, j, d) = sq.diameter();
        assert_relative_eq!(d, 2.0f64.sqrt(), epsilon = 1e-12);
        assert_eq!((i, j), (0, 2)); // (0,0)–(1,1) beats (1,0)–(0,1) lexicographically

        let thin =
            ConvexPolygon::new(vec![pt(0., 0.), pt(10., 0.), pt(5., 0.1)]).unwrap();
        assert_relative_eq!(thin.diameter().2, 10.0);
    }

    #[test]
    fn diameter_matches_all_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let p = polygen::random_convex(50, &mut rng);
            let (i, j, d) = p.diameter();
            let mut best = (0, 0, -1.0);
            for a in 0..p.n() {
                for b in a + 1..p.n() {
                    let d2 = (p.vertex(b) - p.vertex(a)).norm_squared();
                    if d2 > best.2 {
                        best = (a, b, d2);
                    }
                }
            }
            assert_relative_eq!(d * d, best.2, epsilon = 1e-12);
            assert_eq!((i, j), (best.0, best.1));
        }
    }

    #[test]
    fn diameter_dominates_sampled_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = polygen::random_convex(12, &mut rng);
        let (_, _, d) = p.diameter();
        for k in 0..10_000 {
            let a = std::f64::consts::TAU * (k as f64) / 10_000.0;
            let w = p.directional_width(pt(a.cos(), a.sin())).unwrap();
            assert!(w <= d + 1e-9 * p.scale());
        }
    }

    #[test]
    fn contains_semantics() {
        let sq = unit_square();
        assert!(sq.contains(pt(0.5, 0.5), 0.0));
        assert!(!sq.contains(pt(1.1, 0.5), 0.0));
        assert!(sq.contains(pt(1.0 + 1e-12, 0.5), 1e-9));
        for v in sq.vertices() {
            assert!(sq.contains(*v, 1e-9));
        }
    }

    #[test]
    fn parallelogram_corner_order() {
        let ps = parallelogram_vertices(pt(0., 0.), pt(1., 0.), pt(0., 1.));
        assert_eq!(ps, [pt(0., 0.), pt(1., 0.), pt(0., 1.), pt(1., 1.)]);
        let x = pt(3., -2.);
        assert_eq!(
            parallelogram_vertices(x, Vec2::zeros(), Vec2::zeros()),
            [x; 4]
        );
        let ps = parallelogram_vertices(pt(1., 1.), pt(2., 0.), pt(0., 3.));
        assert_eq!(ps, [pt(1., 1.), pt(3., 1.), pt(1., 4.), pt(3., 4.)]);
    }

    #[test]
    fn centroid_is_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let p = polygen::random_convex(rng.gen_range(3..20), &mut rng);
            assert!(p.contains(p.centroid(), 0.0));
        }
    }
}
