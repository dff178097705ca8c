//! Incremental convex hull in R⁶ (beneath–beyond).
//!
//! Specialized to this crate's needs: modest point counts, full-dimensional
//! inputs, and heavily degenerate configurations (many points exactly on a
//! common hyperplane, as the duals of symmetric polygons are). Points within
//! `eps` of a facet's plane are treated as not visible from it, so exactly
//! coplanar clusters are absorbed instead of generating sliver facets; the
//! resulting facets are simplicial 6-tuples whose planes may coincide, and
//! callers merge by plane downstream. A final global check certifies that
//! every input point lies inside (or within tolerance of) every facet plane,
//! so a corrupted hull is reported rather than silently returned.

use std::collections::BTreeMap;

use nalgebra::Vector6;

pub type P6 = Vector6<f64>;

#[derive(Debug, PartialEq, Eq)]
pub enum HullError {
    /// The points do not affinely span R⁶.
    NotFullDimensional,
    /// The construction produced a facet set that misses some input point;
    /// callers should perturb and retry.
    Inconsistent,
}

/// One simplicial facet: six point indices and its supporting hyperplane
/// `⟨normal, y⟩ = offset` with `normal` unit and the hull on the `≤` side.
#[derive(Clone, Debug)]
pub struct Facet {
    pub pts: [u32; 6],
    pub normal: P6,
    pub offset: f64,
}

/// Unit vector orthogonal to the span of `dirs` (assumed independent),
/// computed by double Gram–Schmidt against an orthonormalized copy of
/// `dirs`. Returns `None` when `dirs` are numerically dependent or no
/// reliable complement direction exists.
fn null_direction(dirs: &[P6], tol: f64) -> Option<P6> {
    let mut basis: Vec<P6> = Vec::with_capacity(5);
    for d in dirs {
        let mut w = *d;
        for b in &basis {
            w -= *b * b.dot(&w);
        }
        for b in &basis {
            w -= *b * b.dot(&w);
        }
        let n = w.norm();
        if n <= tol {
            return None;
        }
        basis.push(w / n);
    }
    // Seed with the coordinate axis least represented by the basis.
    let mut best: Option<(f64, P6)> = None;
    for k in 0..6 {
        let mut w = P6::zeros();
        w[k] = 1.0;
        for b in &basis {
            w -= *b * b.dot(&w);
        }
        let n = w.norm_squared();
        if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
            best = Some((n, w));
        }
    }
    let (_, mut w) = best?;
    for b in &basis {
        w -= *b * b.dot(&w);
    }
    let n = w.norm();
    if n <= 1e-7 {
        return None;
    }
    Some(w / n)
}

/// Facet plane through the six points, oriented away from `reference`.
fn make_facet(points: &[P6], idx: [u32; 6], reference: &P6, tol: f64) -> Option<Facet> {
    let p0 = points[idx[0] as usize];
    let dirs: Vec<P6> = idx[1..].iter().map(|&i| points[i as usize] - p0).collect();
    let scale = dirs.iter().map(|d| d.norm()).fold(0.0f64, f64::max);
    let mut normal = null_direction(&dirs, tol.max(1e-14 * scale))?;
    let mut offset = idx
        .iter()
        .map(|&i| normal.dot(&points[i as usize]))
        .sum::<f64>()
        / 6.0;
    let side = normal.dot(reference) - offset;
    if side.abs() <= tol {
        return None;
    }
    if side > 0.0 {
        normal = -normal;
        offset = -offset;
    }
    Some(Facet {
        pts: idx,
        normal,
        offset,
    })
}

/// Greedy choice of 7 affinely independent points: start from the farthest
/// point from the origin, then repeatedly take the point with the largest
/// residual orthogonal to the affine span so far.
fn initial_simplex(points: &[P6], tol: f64) -> Result<Vec<u32>, HullError> {
    let n = points.len();
    let first = (0..n)
        .max_by(|&i, &j| {
            points[i]
                .norm()
                .partial_cmp(&points[j].norm())
                .unwrap()
                .then(j.cmp(&i))
        })
        .ok_or(HullError::NotFullDimensional)?;
    let mut chosen = vec![first as u32];
    let mut basis: Vec<P6> = Vec::new();
    for _ in 0..6 {
        let origin = points[chosen[0] as usize];
        let mut best: Option<(f64, usize, P6)> = None;
        for i in 0..n {
            if chosen.contains(&(i as u32)) {
                continue;
            }
            let mut w = points[i] - origin;
            for b in &basis {
                w -= *b * b.dot(&w);
            }
            let r = w.norm();
            if best.as_ref().map_or(true, |(br, bi, _)| {
                r > *br || (r == *br && i < *bi)
            }) {
                best = Some((r, i, w));
            }
        }
        match best {
            Some((r, i, w)) if r > tol => {
                chosen.push(i as u32);
                basis.push(w / r);
            }
            _ => return Err(HullError::NotFullDimensional),
        }
    }
    Ok(chosen)
}

/// Convex hull of `points`; returns the simplicial facet list, sorted by
/// point indices for deterministic output.
pub fn convex_hull6(points: &[P6]) -> Result<Vec<Facet>, HullError> {
    let radius = points.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
    if radius == 0.0 || points.len() < 7 {
        return Err(HullError::NotFullDimensional);
    }
    let eps = 1e-12 * radius;
    let seed = initial_simplex(points, 1e-9 * radius)?;
    let reference: P6 = seed
        .iter()
        .map(|&i| points[i as usize])
        .sum::<P6>()
        / 7.0;

    let mut facets: Vec<Facet> = Vec::new();
    for skip in 0..7 {
        let mut idx = [0u32; 6];
        let mut k = 0;
        for (j, &pi) in seed.iter().enumerate() {
            if j != skip {
                idx[k] = pi;
                k += 1;
            }
        }
        idx.sort_unstable();
        let f = make_facet(points, idx, &reference, eps).ok_or(HullError::NotFullDimensional)?;
        facets.push(f);
    }

    // Remaining points, farthest from the reference first: extremes get
    // added while the hull is small, and coplanar stragglers are absorbed.
    let mut order: Vec<u32> = (0..points.len() as u32)
        .filter(|i| !seed.contains(i))
        .collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (
            (points[i as usize] - reference).norm(),
            (points[j as usize] - reference).norm(),
        );
        b.partial_cmp(&a).unwrap().then(i.cmp(&j))
    });

    for &pi in &order {
        let p = points[pi as usize];
        let mut visible: Vec<usize> = Vec::new();
        for (fi, f) in facets.iter().enumerate() {
            if f.normal.dot(&p) - f.offset > eps {
                visible.push(fi);
            }
        }
        if visible.is_empty() {
            continue;
        }
        // Horizon = ridges bordering exactly one visible facet.
        let mut ridges: BTreeMap<[u32; 5], u32> = BTreeMap::new();
        for &fi in &visible {
            let pts = facets[fi].pts;
            for skip in 0..6 {
                let mut r = [0u32; 5];
                let mut k = 0;
                for (j, &q) in pts.iter().enumerate() {
                    if j != skip {
                        r[k] = q;
                        k += 1;
                    }
                }
                *ridges.entry(r).or_insert(0) += 1;
            }
        }
        let mut cone: Vec<Facet> = Vec::new();
        for (ridge, count) in &ridges {
            if *count != 1 {
                continue;
            }
            let mut idx = [0u32; 6];
            idx[..5].copy_from_slice(ridge);
            idx[5] = pi;
            idx.sort_unstable();
            match make_facet(points, idx, &reference, eps) {
                Some(f) => cone.push(f),
                // A cone facet through affinely dependent points means the
                // horizon was corrupted by near-degeneracy; report rather
                // than patch, so the caller can perturb and retry.
                None => return Err(HullError::Inconsistent),
            }
        }
        let mut keep = 0usize;
        let mut vi = 0usize;
        facets.retain(|_| {
            let drop = vi < visible.len() && visible[vi] == keep;
            if drop {
                vi += 1;
            }
            keep += 1;
            !drop
        });
        facets.extend(cone);
    }

    // Certify: every point on the inner side of every facet plane.
    for f in &facets {
        for p in points {
            if f.normal.dot(p) - f.offset > 20.0 * eps {
                return Err(HullError::Inconsistent);
            }
        }
    }
    facets.sort_by(|a, b| a.pts.cmp(&b.pts));
    Ok(facets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_all_inside(points: &[P6], facets: &[Facet], eps: f64) {
        for f in facets {
            for p in points {
                assert!(
                    f.normal.dot(p) - f.offset <= eps,
                    "point outside facet plane by {}",
                    f.normal.dot(p) - f.offset
                );
            }
        }
    }

    /// Distinct supporting hyperplanes among simplicial facets.
    fn plane_count(facets: &[Facet], tol: f64) -> usize {
        let mut planes: Vec<(P6, f64)> = Vec::new();
        for f in facets {
            if !planes
                .iter()
                .any(|(n, o)| (n - f.normal).norm() < tol && (o - f.offset).abs() < tol)
            {
                planes.push((f.normal, f.offset));
            }
        }
        planes.len()
    }

    #[test]
    fn cross_polytope_has_sixty_four_simplicial_facets() {
        let mut pts = Vec::new();
        for k in 0..6 {
            for s in [-1.0, 1.0] {
                let mut p = P6::zeros();
                p[k] = s;
                pts.push(p);
            }
        }
        let facets = convex_hull6(&pts).unwrap();
        assert_eq!(facets.len(), 64);
        assert_all_inside(&pts, &facets, 1e-9);
    }

    #[test]
    fn hypercube_vertices_lie_on_twelve_planes() {
        let mut pts = Vec::new();
        for mask in 0..64u32 {
            let mut p = P6::zeros();
            for k in 0..6 {
                p[k] = if mask >> k & 1 == 1 { 1.0 } else { 0.0 };
            }
            pts.push(p);
        }
        let facets = convex_hull6(&pts).unwrap();
        assert_all_inside(&pts, &facets, 1e-9);
        assert_eq!(plane_count(&facets, 1e-6), 12);
        // Every vertex of the cube is extreme: it must lie on some facet.
        for p in &pts {
            assert!(
                facets
                    .iter()
                    .any(|f| (f.normal.dot(p) - f.offset).abs() <= 1e-9),
                "cube vertex not on any facet plane"
            );
        }
    }

    #[test]
    fn random_sphere_points_build_a_consistent_hull() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<P6> = (0..60)
            .map(|_| {
                let mut p = P6::zeros();
                for k in 0..6 {
                    p[k] = rng.gen_range(-1.0..1.0);
                }
                p / p.norm()
            })
            .collect();
        let facets = convex_hull6(&pts).unwrap();
        assert!(facets.len() > 60);
        assert_all_inside(&pts, &facets, 1e-9);
        // Spherical position: every point is a hull vertex.
        for (i, p) in pts.iter().enumerate() {
            assert!(
                facets.iter().any(|f| f.pts.contains(&(i as u32))),
                "sphere point {i} missing from hull: {p:?}"
            );
        }
    }

    #[test]
    fn flat_input_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Points confined to a 5-dimensional subspace.
        let pts: Vec<P6> = (0..30)
            .map(|_| {
                let mut p = P6::zeros();
                for k in 0..5 {
                    p[k] = rng.gen_range(-1.0..1.0);
                }
                p
            })
            .collect();
        assert_eq!(
            convex_hull6(&pts).unwrap_err(),
            HullError::NotFullDimensional
        );
    }
}
