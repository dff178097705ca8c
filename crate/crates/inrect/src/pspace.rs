//! The parallelogram polytope Π(P) ⊂ R⁶: all triples z = (x, u, v) whose
//! parallelogram {x, x+u, x+v, x+u+v} lies inside the polygon.
//!
//! Each polygon edge contributes four linear constraints (one per
//! parallelogram corner), so Π(P) is a bounded intersection of 4n halfspaces
//! containing the strictly interior point (centroid, 0, 0, 0, 0). Vertices
//! are enumerated by polar duality about that point: the dual of the
//! constraint system is a point cloud whose convex hull facets correspond to
//! primal vertices (solve the 6×6 system ⟨d_i, z⟩ = 1 over a facet's six
//! dual points). Coincident vertices from degenerate (symmetric) inputs are
//! merged, refined by a least-squares snap onto their tight constraints, and
//! validated: feasible, at least six tight constraints, full-rank normals.
//! If validation fails, the whole construction retries on a slightly rotated
//! copy of the polygon (the angle is recorded) and maps the result back.
//!
//! The triangulation is a pulling triangulation driven by the face lattice:
//! every face is coned from its lexicographically smallest vertex, so the
//! polytope decomposes into simplices over the boundary faces avoiding the
//! global apex. Face vertex sets are recovered by intersecting tight sets.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use thiserror::Error;

use crate::geom::{ConvexPolygon, REL_TOL};
use crate::hull6::{convex_hull6, HullError};

pub type Point6 = Vector6<f64>;

/// Which parallelogram corner a constraint bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CornerTag {
    X,
    XU,
    XV,
    XUV,
}

impl CornerTag {
    pub const ALL: [CornerTag; 4] = [CornerTag::X, CornerTag::XU, CornerTag::XV, CornerTag::XUV];
}

/// One halfspace {z : ⟨normal, z⟩ ≤ offset} of Π(P), tagged with the polygon
/// edge and corner it came from.
#[derive(Clone, Debug)]
pub struct Constraint6 {
    pub normal: Point6,
    pub offset: f64,
    pub edge: usize,
    pub corner: CornerTag,
}

impl Constraint6 {
    /// Signed violation ⟨normal, z⟩ − offset. Because the edge normals are
    /// unit vectors, this equals the 2-D signed distance of the tagged
    /// parallelogram corner from the polygon edge.
    pub fn violation(&self, z: &Point6) -> f64 {
        self.normal.dot(z) - self.offset
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PspaceError {
    #[error("polygon is too thin: no interior point with clearance")]
    DegeneratePolygon,
    #[error("parallelogram polytope unbounded; constraint construction is inconsistent")]
    UnboundedPolytope,
    #[error("vertex enumeration failed to stabilize numerically")]
    NumericalDegeneracy,
    #[error("parallelogram polytope is not full-dimensional")]
    NotFullDimensional,
}

/// A 6-simplex of the triangulation.
#[derive(Clone, Debug)]
pub struct Simplex6 {
    pub vertices: [Point6; 7],
}

impl Simplex6 {
    /// 6-dimensional volume.
    pub fn volume(&self) -> f64 {
        let mut m = Matrix6::zeros();
        for k in 0..6 {
            m.set_column(k, &(self.vertices[k + 1] - self.vertices[0]));
        }
        m.determinant().abs() / 720.0
    }
}

/// Π(P) with its enumerated vertex set.
#[derive(Clone, Debug)]
pub struct ParallelogramSpace {
    pub constraints: Vec<Constraint6>,
    pub interior: Point6,
    pub vertices: Vec<Point6>,
    /// Per vertex: sorted indices of constraints tight at it.
    pub vertex_facets: Vec<Vec<u32>>,
    pub scale: f64,
    /// Perturbation angle used to stabilize enumeration (0.0 = none).
    pub rotation: f64,
}

/// The 4n constraints of Π(P): every polygon edge bounds all four corners.
pub fn constraints_of(p: &ConvexPolygon) -> Vec<Constraint6> {
    let mut out = Vec::with_capacity(4 * p.n());
    for (edge, h) in p.halfplanes().iter().enumerate() {
        let (a, b) = (h.normal.x, h.normal.y);
        for corner in CornerTag::ALL {
            let mut n = Point6::zeros();
            n[0] = a;
            n[1] = b;
            if matches!(corner, CornerTag::XU | CornerTag::XUV) {
                n[2] = a;
                n[3] = b;
            }
            if matches!(corner, CornerTag::XV | CornerTag::XUV) {
                n[4] = a;
                n[5] = b;
            }
            out.push(Constraint6 {
                normal: n,
                offset: h.offset,
                edge,
                corner,
            });
        }
    }
    out
}

/// The canonical strictly interior point (centroid, 0, 0, 0, 0).
pub fn interior_point(p: &ConvexPolygon) -> Result<Point6, PspaceError> {
    let c = p.centroid();
    let slack = p
        .halfplanes()
        .iter()
        .map(|h| -h.signed_distance(c))
        .fold(f64::INFINITY, f64::min);
    if slack <= REL_TOL * p.scale() {
        return Err(PspaceError::DegeneratePolygon);
    }
    Ok(Point6::new(c.x, c.y, 0.0, 0.0, 0.0, 0.0))
}

/// True iff every constraint is satisfied within `tol·scale`.
pub fn member(constraints: &[Constraint6], scale: f64, z: &Point6, tol: f64) -> bool {
    constraints.iter().all(|c| c.violation(z) <= tol * scale)
}

fn clean_zero(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t
    }
}

fn lex_less(a: &Point6, b: &Point6) -> std::cmp::Ordering {
    for k in 0..6 {
        match a[k].partial_cmp(&b[k]).unwrap() {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Merge points closer than `tol` (transitively) into their cluster means.
pub(crate) fn cluster_points(points: &[Point6], tol: f64) -> Vec<Point6> {
    let m = points.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| lex_less(&points[i], &points[j]));
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for a in 0..m {
        for b in (a + 1)..m {
            let (i, j) = (order[a], order[b]);
            if points[j][0] - points[i][0] > tol {
                break;
            }
            if (points[i] - points[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut sums: HashMap<usize, (Point6, usize)> = HashMap::new();
    for i in 0..m {
        let r = find(&mut parent, i);
        let e = sums.entry(r).or_insert((Point6::zeros(), 0));
        e.0 += points[i];
        e.1 += 1;
    }
    let mut out: Vec<Point6> = sums.values().map(|(s, c)| s / *c as f64).collect();
    out.sort_by(lex_less);
    out
}

/// Least-squares projection of `z` onto its nearly-tight constraints; keeps
/// the original point when the projection does not reduce the worst
/// violation.
fn snap_vertex(constraints: &[Constraint6], scale: f64, z: &Point6) -> Point6 {
    let gather = 1e-7 * scale;
    let tight: Vec<&Constraint6> = constraints
        .iter()
        .filter(|c| c.violation(z).abs() <= gather)
        .collect();
    if tight.len() < 6 {
        return *z;
    }
    let a = DMatrix::from_fn(tight.len(), 6, |r, c| tight[r].normal[c]);
    let rhs = DVector::from_fn(tight.len(), |r, _| -tight[r].violation(z));
    let svd = a.svd(true, true);
    let Ok(delta) = svd.solve(&rhs, 1e-7) else {
        return *z;
    };
    let snapped = z + Point6::from_iterator(delta.iter().cloned());
    let worst =
        |p: &Point6| constraints.iter().map(|c| c.violation(p)).fold(f64::NEG_INFINITY, f64::max);
    if (snapped - z).norm() <= 1e-6 * scale && worst(&snapped) <= worst(z) {
        snapped
    } else {
        *z
    }
}

/// Rank of the set of constraint normals, capped at 6.
fn normal_rank(constraints: &[Constraint6], indices: &[u32]) -> usize {
    let mut basis: Vec<Point6> = Vec::with_capacity(6);
    for &i in indices {
        let mut w = constraints[i as usize].normal;
        let n0 = w.norm();
        for b in &basis {
            w -= *b * b.dot(&w);
        }
        if w.norm() > 1e-6 * n0 {
            basis.push(w / w.norm());
            if basis.len() == 6 {
                return 6;
            }
        }
    }
    basis.len()
}

/// Cluster, snap, sort, and validate raw vertex candidates; returns the
/// final vertex list with per-vertex tight constraint sets.
fn consolidate(
    constraints: &[Constraint6],
    scale: f64,
    candidates: &[Point6],
) -> Result<(Vec<Point6>, Vec<Vec<u32>>), PspaceError> {
    let tol = REL_TOL * scale;
    let merged = cluster_points(candidates, tol);
    let snapped: Vec<Point6> = merged
        .iter()
        .map(|z| snap_vertex(constraints, scale, z))
        .collect();
    let mut vertices = cluster_points(&snapped, tol);
    for v in &mut vertices {
        *v = v.map(clean_zero);
    }
    let mut vertex_facets = Vec::with_capacity(vertices.len());
    for v in &vertices {
        let mut tight: Vec<u32> = Vec::new();
        let mut worst = f64::NEG_INFINITY;
        for (i, c) in constraints.iter().enumerate() {
            let d = c.violation(v);
            worst = worst.max(d);
            if d.abs() <= tol {
                tight.push(i as u32);
            }
        }
        if worst > tol || tight.len() < 6 || normal_rank(constraints, &tight) < 6 {
            return Err(PspaceError::NumericalDegeneracy);
        }
        vertex_facets.push(tight);
    }
    Ok((vertices, vertex_facets))
}

/// Enumerate all vertices of the polytope `{z : constraints}` that contains
/// `interior` strictly: polar duality plus incremental hull.
pub fn vertex_enumeration(
    constraints: &[Constraint6],
    interior: &Point6,
    scale: f64,
) -> Result<(Vec<Point6>, Vec<Vec<u32>>), PspaceError> {
    let mut duals: Vec<Point6> = Vec::with_capacity(constraints.len());
    for c in constraints {
        let b = c.offset - c.normal.dot(interior);
        if b <= REL_TOL * scale {
            return Err(PspaceError::DegeneratePolygon);
        }
        duals.push(c.normal / b);
    }
    let radius = duals.iter().map(|d| d.norm()).fold(0.0f64, f64::max);
    let facets = convex_hull6(&duals).map_err(|e| match e {
        HullError::NotFullDimensional => PspaceError::UnboundedPolytope,
        HullError::Inconsistent => PspaceError::NumericalDegeneracy,
    })?;

    let mut candidates: Vec<Point6> = Vec::with_capacity(facets.len());
    for f in &facets {
        // A dual facet plane through the origin corresponds to a primal
        // direction of recession; impossible for a genuinely bounded system.
        if f.offset <= 1e-12 * radius {
            return Err(PspaceError::UnboundedPolytope);
        }
        let mut m = Matrix6::zeros();
        for (r, &pi) in f.pts.iter().enumerate() {
            m.set_row(r, &duals[pi as usize].transpose());
        }
        let ones = Vector6::repeat(1.0);
        let z = match m.lu().solve(&ones) {
            Some(z) if (m * z - ones).norm() <= 1e-6 => z,
            _ => f.normal / f.offset,
        };
        candidates.push(z + interior);
    }
    consolidate(constraints, scale, &candidates)
}

/// Rotate the (x, u, v) blocks of `z` by angle `theta`.
fn rot6(z: &Point6, theta: f64) -> Point6 {
    let (s, c) = theta.sin_cos();
    Point6::new(
        c * z[0] - s * z[1],
        s * z[0] + c * z[1],
        c * z[2] - s * z[3],
        s * z[2] + c * z[3],
        c * z[4] - s * z[5],
        s * z[4] + c * z[5],
    )
}

/// Deterministic pseudo-random retry angle in (1e-5, 1e-3), derived from the
/// constraint coefficients and the attempt number.
fn retry_angle(constraints: &[Constraint6], attempt: usize) -> f64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15 ^ (attempt as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    let mut mix = |bits: u64| {
        h ^= bits;
        h = h.rotate_left(23).wrapping_mul(0x2545_f491_4f6c_dd1d);
    };
    for c in constraints {
        for k in 0..6 {
            mix(c.normal[k].to_bits());
        }
        mix(c.offset.to_bits());
    }
    let frac = (h >> 11) as f64 / (1u64 << 53) as f64;
    1e-5 + (1e-3 - 1e-5) * frac
}

impl ParallelogramSpace {
    /// Build Π(P) and enumerate its vertices, retrying on a slightly rotated
    /// copy if the enumeration hits numerical degeneracy.
    pub fn build(p: &ConvexPolygon) -> Result<Self, PspaceError> {
        let scale = p.scale();
        let constraints = constraints_of(p);
        let interior = interior_point(p)?;
        let mut last = PspaceError::NumericalDegeneracy;
        for attempt in 0..6 {
            let theta = if attempt == 0 {
                0.0
            } else {
                retry_angle(&constraints, attempt)
            };
            let (cons_t, interior_t) = if attempt == 0 {
                (constraints.clone(), interior)
            } else {
                let rotated = constraints
                    .iter()
                    .map(|c| Constraint6 {
                        normal: rot6(&c.normal, theta),
                        offset: c.offset,
                        edge: c.edge,
                        corner: c.corner,
                    })
                    .collect();
                (rotated, rot6(&interior, theta))
            };
            match vertex_enumeration(&cons_t, &interior_t, scale) {
                Ok((verts, _)) => {
                    // Map back and re-validate against the unrotated system.
                    let back: Vec<Point6> = verts.iter().map(|v| rot6(v, -theta)).collect();
                    match consolidate(&constraints, scale, &back) {
                        Ok((vertices, vertex_facets)) => {
                            return Ok(ParallelogramSpace {
                                constraints,
                                interior,
                                vertices,
                                vertex_facets,
                                scale,
                                rotation: theta,
                            });
                        }
                        Err(e) => last = e,
                    }
                }
                Err(e @ (PspaceError::DegeneratePolygon | PspaceError::UnboundedPolytope)) => {
                    return Err(e)
                }
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    pub fn member(&self, z: &Point6, tol: f64) -> bool {
        member(&self.constraints, self.scale, z, tol)
    }

    /// Pulling triangulation of Π(P): every face coned from its
    /// lexicographically smallest vertex. Simplices with negligible volume
    /// are discarded.
    pub fn triangulate(&self) -> Result<Vec<Simplex6>, PspaceError> {
        if self.affine_rank() < 6 {
            return Err(PspaceError::NotFullDimensional);
        }
        let nv = self.vertices.len();
        let mut arena = FaceArena {
            vertices: &self.vertices,
            vertex_tight: &self.vertex_facets,
            nodes: Vec::new(),
            intern: HashMap::new(),
        };
        let top: Box<[u32]> = (0..nv as u32).collect();
        let top_id = arena.intern(top);

        let mut seen: HashSet<[u32; 7]> = HashSet::new();
        let mut out = Vec::new();
        let vol_tol = 1e-12 * self.scale.powi(6);
        let mut apexes: Vec<u32> = Vec::with_capacity(7);
        arena.emit(top_id, &mut apexes, &mut |s: [u32; 7]| {
            if !seen.insert(s) {
                return;
            }
            let mut vertices = [Point6::zeros(); 7];
            for (k, &vi) in s.iter().enumerate() {
                vertices[k] = self.vertices[vi as usize];
            }
            let simplex = Simplex6 { vertices };
            if simplex.volume() > vol_tol {
                out.push(simplex);
            }
        });
        Ok(out)
    }

    fn affine_rank(&self) -> usize {
        let Some(first) = self.vertices.first() else {
            return 0;
        };
        let mut basis: Vec<Point6> = Vec::new();
        for v in &self.vertices[1..] {
            let mut w = v - first;
            let n0 = w.norm();
            if n0 == 0.0 {
                continue;
            }
            for b in &basis {
                w -= *b * b.dot(&w);
            }
            if w.norm() > 1e-7 * n0.max(self.scale) {
                basis.push(w / w.norm());
                if basis.len() == 6 {
                    break;
                }
            }
        }
        basis.len()
    }
}

/// Interned face lattice explored top-down during the pulling
/// triangulation. Each distinct face is visited once: its facet list is
/// computed from the per-vertex tight-constraint sets and cached, and the
/// triangulation itself is emitted as descent chains (one apex per level),
/// so no intermediate simplex lists are materialized.
struct FaceArena<'a> {
    vertices: &'a [Point6],
    vertex_tight: &'a [Vec<u32>],
    nodes: Vec<FaceNode>,
    intern: HashMap<Box<[u32]>, u32>,
}

struct FaceNode {
    verts: Box<[u32]>,
    simplex: bool,
    children: Option<Vec<u32>>,
}

impl FaceArena<'_> {
    fn intern(&mut self, verts: Box<[u32]>) -> u32 {
        if let Some(&id) = self.intern.get(&verts) {
            return id;
        }
        let id = self.nodes.len() as u32;
        let simplex = is_simplex(&verts, self.vertices);
        self.intern.insert(verts.clone(), id);
        self.nodes.push(FaceNode {
            verts,
            simplex,
            children: None,
        });
        id
    }

    /// Facets of face `fid`: bucket its vertices by tight constraint, keep
    /// the inclusion-maximal proper subsets.
    fn children_of(&mut self, fid: u32) -> Vec<u32> {
        if let Some(c) = &self.nodes[fid as usize].children {
            return c.clone();
        }
        let face = self.nodes[fid as usize].verts.clone();
        let mut buckets: HashMap<u32, Vec<u32>> = HashMap::new();
        for &v in face.iter() {
            for &c in &self.vertex_tight[v as usize] {
                buckets.entry(c).or_default().push(v);
            }
        }
        let mut cands: Vec<Box<[u32]>> = buckets
            .into_values()
            .filter(|g| g.len() < face.len())
            .map(Vec::into_boxed_slice)
            .collect();
        cands.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        cands.dedup();
        let mut kept: Vec<Box<[u32]>> = Vec::new();
        for c in cands {
            if !kept.iter().any(|k| is_subset(&c, k)) {
                kept.push(c);
            }
        }
        let ids: Vec<u32> = kept.into_iter().map(|g| self.intern(g)).collect();
        self.nodes[fid as usize].children = Some(ids.clone());
        ids
    }

    /// Walk every pulling chain below `fid`, calling `sink` with the sorted
    /// vertex ids of each full-dimensional simplex.
    fn emit(&mut self, fid: u32, apexes: &mut Vec<u32>, sink: &mut impl FnMut([u32; 7])) {
        let node = &self.nodes[fid as usize];
        if node.simplex {
            if apexes.len() + node.verts.len() == 7 {
                let mut s = [0u32; 7];
                s[..apexes.len()].copy_from_slice(apexes);
                s[apexes.len()..].copy_from_slice(&node.verts);
                s.sort_unstable();
                sink(s);
            }
            return;
        }
        let apex = node.verts[0];
        apexes.push(apex);
        for child in self.children_of(fid) {
            if self.nodes[child as usize].verts.binary_search(&apex).is_ok() {
                continue;
            }
            self.emit(child, apexes, sink);
        }
        apexes.pop();
    }
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Affine-independence test: `face` spans a simplex iff its diffs have rank
/// |face| − 1.
fn is_simplex(face: &[u32], vertices: &[Point6]) -> bool {
    let k = face.len();
    if k == 1 {
        return true;
    }
    if k > 7 {
        return false;
    }
    let p0 = vertices[face[0] as usize];
    let mut basis: Vec<Point6> = Vec::new();
    for &vi in &face[1..] {
        let mut w = vertices[vi as usize] - p0;
        let n0 = w.norm();
        for b in &basis {
            w -= *b * b.dot(&w);
        }
        if w.norm() <= 1e-6 * n0 {
            return false;
        }
        basis.push(w / w.norm());
    }
    true
}
