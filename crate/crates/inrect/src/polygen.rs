//! Polygon generators used by the CLI and the test corpus: regular n-gons and
//! seeded random convex polygons (Valtr's construction, which yields exactly
//! n vertices in strictly convex position with probability one).

use crate::geom::{ConvexPolygon, Point2, Vec2};
use rand::prelude::*;

/// Regular n-gon with the given circumradius, centered at the origin, first
/// vertex on the positive x-axis.
pub fn regular_ngon(n: usize, circumradius: f64) -> ConvexPolygon {
    assert!(n >= 3);
    let pts = (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * (k as f64) / (n as f64);
            Point2::new(circumradius * a.cos(), circumradius * a.sin())
        })
        .collect();
    ConvexPolygon::new(pts).expect("regular polygon is convex")
}

/// Random convex polygon with exactly `n` vertices inside `[-1, 1]²`,
/// via Valtr's algorithm: split random coordinates into signed increments,
/// sort the resulting edge vectors by angle and chain them.
///
/// Valtr polygons get arbitrarily flat corners as `n` grows, which the
/// strict-convexity tolerance rejects, so large requests fall back to the
/// circular generator.
pub fn random_convex(n: usize, rng: &mut impl Rng) -> ConvexPolygon {
    assert!(n >= 3);
    if n > 128 {
        return random_cyclic(n, rng);
    }
    loop {
        let xs = signed_increments(n, rng);
        let ys = signed_increments(n, rng);
        let mut edges: Vec<Vec2> = xs
            .into_iter()
            .zip(ys)
            .map(|(x, y)| Vec2::new(x, y))
            .collect();
        edges.sort_by(|a, b| a.y.atan2(a.x).partial_cmp(&b.y.atan2(b.x)).unwrap());

        let mut p = Point2::new(0.0, 0.0);
        let mut pts = Vec::with_capacity(n);
        for e in &edges {
            pts.push(p);
            p += e;
        }
        // Recenter into [-1,1]² (the chain closes because increments cancel).
        let cx = pts.iter().map(|p| p.x).sum::<f64>() / n as f64;
        let cy = pts.iter().map(|p| p.y).sum::<f64>() / n as f64;
        for p in &mut pts {
            *p -= Vec2::new(cx, cy);
        }
        // Nearly-collinear edge triples are possible (rarely); retry.
        if let Ok(poly) = ConvexPolygon::new(pts) {
            return poly;
        }
    }
}

/// Random strictly convex polygon with `n` vertices on the unit circle.
/// Angular gaps are kept above a fifth of the regular spacing so corners
/// never flatten out, whatever the size.
pub fn random_cyclic(n: usize, rng: &mut impl Rng) -> ConvexPolygon {
    assert!(n >= 3);
    let min_gap = 0.2 * std::f64::consts::TAU / n as f64;
    // Gaps are min_gap plus a rescaled exponential share of the remaining
    // angle, so the floor holds by construction.
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.0f64..1.0).ln()).collect();
    let total: f64 = raw.iter().sum();
    let free = std::f64::consts::TAU - n as f64 * min_gap;
    let start = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut angle = start;
    let mut pts = Vec::with_capacity(n);
    for r in raw {
        pts.push(Point2::new(angle.cos(), angle.sin()));
        angle += min_gap + free * r / total;
    }
    ConvexPolygon::new(pts).expect("circle points with bounded gaps are strictly convex")
}

fn signed_increments(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut coords: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (min, max) = (coords[0], coords[n - 1]);
    let mut last_top = min;
    let mut last_bot = min;
    let mut out = Vec::with_capacity(n);
    for &c in &coords[1..n - 1] {
        if rng.gen::<bool>() {
            out.push(c - last_top);
            last_top = c;
        } else {
            out.push(last_bot - c);
            last_bot = c;
        }
    }
    out.push(max - last_top);
    out.push(last_bot - max);
    out
}
