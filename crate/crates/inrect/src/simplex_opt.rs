//! Constant-size optimization over one 6-simplex: maximize |u|²·|v|²
//! (squared area) or |u| + |v| (half-perimeter) over Δ ∩ {⟨u,v⟩ = 0}.
//!
//! All 127 nonempty vertex subsets (closed faces) of Δ are enumerated in
//! decreasing order of an objective upper bound (max vertex |u| / |v| norms
//! combined), so the scan stops as soon as no remaining face can beat the
//! incumbent. On convex weights w over a face, the orthogonality form is
//! wᵀMw with M_ij = (⟨u_i,v_j⟩ + ⟨u_j,v_i⟩)/2 — a convex combination of the
//! entries of M — so [min M_ij, max M_ij] brackets it; a bracket excluding
//! zero proves the face (or the whole simplex) infeasible.
//!
//! Each surviving face is searched by a damped Lagrange–Newton iteration on
//! the stationarity system of (objective, ⟨u,v⟩) in the face's barycentric
//! coordinates, started from the centroid, the centroid–vertex midpoints,
//! and eight quasi-random interior points seeded by a hash of the face
//! (fully deterministic). Face vertices satisfying the constraint are
//! direct candidates. Both the objective and the constraint read only the
//! (u, v) block, so the iteration is restricted to the barycentric
//! directions that move that block (rank ≤ 4); the remaining directions
//! parametrize level sets and would only make the KKT matrix singular.
//!
//! The half-perimeter objective is nonsmooth where u = 0 or v = 0. Both
//! loci satisfy the constraint identically and the objective reduces there
//! to the norm of the other block, which is convex, so its maximum over the
//! slice polytope Δ ∩ {v = 0} sits at a slice vertex; every slice vertex is
//! an isolated affine solution of v = 0 on a face of dimension ≤ 2. Those
//! solutions are computed exactly (a projection on edges, a 2×2 solve on
//! triangles) and offered as candidates for both objectives, while the
//! Newton iteration refuses to walk within `NORM_GUARD` of either locus.
//!
//! Vertices are normalized by the largest vertex norm before solving, so
//! the tolerances below are relative to the simplex's own magnitude.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pspace::{Point6, Simplex6};

/// Barycentric slack accepted when certifying a candidate lies on its face.
pub const BARY_TOL: f64 = 1e-9;
/// Orthogonality tolerance on normalized coordinates.
const ORTHO_TOL: f64 = 1e-9;
const NEWTON_MAX_ITERS: usize = 80;
const STEP_TOL: f64 = 1e-13;
const KKT_TOL: f64 = 1e-11;
/// A stalled step at this residual is still a usable stationary point.
const KKT_TOL_LOOSE: f64 = 1e-9;
/// Squared radius of the ball around a finished run's endpoint inside
/// which a later run on the same face is declared a duplicate.
const BASIN_R2: f64 = 1e-14;
/// Half-perimeter gradients blow up near |u| = 0 or |v| = 0; Newton runs
/// stop there and leave those loci to the exact slice candidates.
const NORM_GUARD: f64 = 1e-7;


// TEMP diagnostics
pub mod counters {
    use std::sync::atomic::AtomicUsize;
    pub static FACES: AtomicUsize = AtomicUsize::new(0);
    pub static RUNS: AtomicUsize = AtomicUsize::new(0);
    pub static ITERS: AtomicUsize = AtomicUsize::new(0);
    pub static EVALS: AtomicUsize = AtomicUsize::new(0);
    pub static SADDLE: AtomicUsize = AtomicUsize::new(0);
    pub static CONVERGED: AtomicUsize = AtomicUsize::new(0);
    pub static NOACCEPT: AtomicUsize = AtomicUsize::new(0);
    pub static CRAWL: AtomicUsize = AtomicUsize::new(0);
    pub static DEDUP: AtomicUsize = AtomicUsize::new(0);
    pub static NS_BOUNDS: AtomicUsize = AtomicUsize::new(0);
    pub static NS_NEWTON: AtomicUsize = AtomicUsize::new(0);
    pub static Q_SINGULAR: AtomicUsize = AtomicUsize::new(0);
    pub static Q_ACCEPT: AtomicUsize = AtomicUsize::new(0);
    pub static Q_REJECT: AtomicUsize = AtomicUsize::new(0);
    pub static Q_FAIL: AtomicUsize = AtomicUsize::new(0);
}
use std::sync::atomic::Ordering::Relaxed;

type Mat6 = SMatrix<f64, 6, 6>;
type Mat7 = SMatrix<f64, 7, 7>;
type Mat8 = SMatrix<f64, 8, 8>;
type Vec6 = SVector<f64, 6>;
type Vec7 = SVector<f64, 7>;
type Vec8 = SVector<f64, 8>;

/// Outcome of one per-simplex program.
#[derive(Clone, Debug)]
pub struct OptResult {
    /// Best objective value (|u|²·|v|² or |u| + |v|); 0 when infeasible.
    pub value: f64,
    pub argmax: Option<Point6>,
    pub feasible: bool,
    /// Stationarity-plus-constraint residual at the argmax on normalized
    /// coordinates; |⟨u,v⟩| for vertex and slice candidates.
    pub kkt_residual: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplexOptError {
    #[error("simplex has non-finite coordinates")]
    DegenerateSimplex,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Goal {
    AreaSq,
    HalfPerimeter,
}

/// Maximum of |u|²·|v|² over Δ ∩ {⟨u,v⟩ = 0}.
pub fn max_area_on_simplex(s: &Simplex6) -> Result<OptResult, SimplexOptError> {
    solve(s, Goal::AreaSq, f64::NEG_INFINITY)
}

/// Maximum of |u| + |v| over Δ ∩ {⟨u,v⟩ = 0}.
pub fn max_halfperimeter_on_simplex(s: &Simplex6) -> Result<OptResult, SimplexOptError> {
    solve(s, Goal::HalfPerimeter, f64::NEG_INFINITY)
}

/// As [`max_area_on_simplex`], but faces that provably cannot exceed
/// `floor` are skipped; candidates at or below the floor may be dropped.
pub fn max_area_above(s: &Simplex6, floor: f64) -> Result<OptResult, SimplexOptError> {
    solve(s, Goal::AreaSq, floor)
}

/// As [`max_halfperimeter_on_simplex`] with a value floor.
pub fn max_halfperimeter_above(s: &Simplex6, floor: f64) -> Result<OptResult, SimplexOptError> {
    solve(s, Goal::HalfPerimeter, floor)
}

/// Upper bound for |u(w)|²·|v(w)|² over feasible convex weights w.
///
/// Every quantity involved is a bilinear form over barycentric weights —
/// |u(w)|² = wᵀGᵤw, |v(w)|² = wᵀGᵥw, det(u(w), v(w)) = wᵀDw — hence a
/// convex combination of its vertex-pair values, bounded by the extreme
/// entry. Wherever ⟨u,v⟩ = 0 the objective equals det(u,v)², so the bound
/// is the smaller of the Gram product and the squared determinant range.
pub fn area_upper_bound(s: &Simplex6) -> f64 {
    simplex_bound(s, Goal::AreaSq)
}

/// Upper bound for |u(w)| + |v(w)| over feasible convex weights w, via
/// (|u|+|v|)² = |u|² + |v|² + 2|u||v| and |u||v| = |det(u,v)| at
/// orthogonality.
pub fn halfperimeter_upper_bound(s: &Simplex6) -> f64 {
    simplex_bound(s, Goal::HalfPerimeter)
}

fn simplex_bound(s: &Simplex6, goal: Goal) -> f64 {
    let gu = Mat7::from_fn(|i, j| u_of(&s.vertices[i]).dot(&u_of(&s.vertices[j])));
    let gv = Mat7::from_fn(|i, j| v_of(&s.vertices[i]).dot(&v_of(&s.vertices[j])));
    face_bounds_all(
        goal,
        &gu,
        &gv,
        &det_matrix(&s.vertices),
        &bilinear_matrix(&s.vertices),
    )[127]
}

/// Intermediate-strength bound: the λ-shifted entry-maximum relaxation,
/// without the stationary-point refinement of the tight bound. Always
/// between [`quick_bound`] and the tight bound — a second-stage prefilter.
pub fn entry_bound(s: &Simplex6, objective: crate::solution::Objective) -> f64 {
    let goal = match objective {
        crate::solution::Objective::Area => Goal::AreaSq,
        crate::solution::Objective::Perimeter => Goal::HalfPerimeter,
    };
    let all: [usize; 7] = [0, 1, 2, 3, 4, 5, 6];
    let gu = Mat7::from_fn(|i, j| u_of(&s.vertices[i]).dot(&u_of(&s.vertices[j])));
    let gv = Mat7::from_fn(|i, j| v_of(&s.vertices[i]).dot(&v_of(&s.vertices[j])));
    face_upper_bound(
        goal,
        &all,
        &gu,
        &gv,
        &det_matrix(&s.vertices),
        &bilinear_matrix(&s.vertices),
    )
}

/// The tight upper bound together with a bisection hint: the vertex pair
/// carrying the bound's extreme entry. Halving that edge replaces the
/// extreme entry by averages, so it is the only split that can lower the
/// bound. `None` means the bound rests on a single vertex (a diagonal
/// entry) and no bisection can reduce it.
pub(crate) fn bound_and_hint(
    s: &Simplex6,
    objective: crate::solution::Objective,
) -> (f64, Option<(usize, usize)>) {
    let verts = &s.vertices;
    let gu = Mat7::from_fn(|i, j| u_of(&verts[i]).dot(&u_of(&verts[j])));
    let gv = Mat7::from_fn(|i, j| v_of(&verts[i]).dot(&v_of(&verts[j])));
    let dm = det_matrix(verts);
    let mm = bilinear_matrix(verts);
    let all: [usize; 7] = [0, 1, 2, 3, 4, 5, 6];
    let goal = match objective {
        crate::solution::Objective::Area => Goal::AreaSq,
        crate::solution::Objective::Perimeter => Goal::HalfPerimeter,
    };
    let lam = relaxed_lambda(goal, &all, &gu, &gv, &dm, &mm);
    // Tight coupled part: exact maximum of the shifted form over the
    // simplex, as in `face_bounds_all` (no lattice fold needed — the whole
    // simplex dominates, so the raw stationary values suffice).
    // Entry scan: the extreme pairs double as split hints. The stationary
    // refinement is deliberately skipped here — this bound runs per
    // bisection node, where its cost outweighs the tightening.
    let (mut coupled, mut pd) = (f64::NEG_INFINITY, (0usize, 0usize));
    let (mut mu2, mut pu) = (0.0f64, (0usize, 0usize));
    let (mut mv2, mut pv) = (0.0f64, (0usize, 0usize));
    for i in 0..7 {
        for j in i..7 {
            if gu[(i, j)] > mu2 {
                (mu2, pu) = (gu[(i, j)], (i, j));
            }
            if gv[(i, j)] > mv2 {
                (mv2, pv) = (gv[(i, j)], (i, j));
            }
            let det = (dm[(i, j)] + lam * mm[(i, j)]).abs();
            let t = match goal {
                Goal::AreaSq => det,
                Goal::HalfPerimeter => gu[(i, j)] + gv[(i, j)] + 2.0 * det,
            };
            if t > coupled {
                (coupled, pd) = (t, (i, j));
            }
        }
    }
    let qmax = coupled + ortho_slack(goal, lam);
    let hint = |p: (usize, usize)| if p.0 == p.1 { None } else { Some(p) };
    match goal {
        Goal::AreaSq => {
            let (t1, t2) = (mu2 * mv2, qmax * qmax);
            if t2 <= t1 {
                (t2, hint(pd))
            } else {
                (t1, hint(pu).or_else(|| hint(pv)))
            }
        }
        Goal::HalfPerimeter => {
            let t1 = mu2.sqrt() + mv2.sqrt();
            let t2 = qmax.max(0.0).sqrt();
            if t2 <= t1 {
                (t2, hint(pd))
            } else {
                (t1, hint(pu).or_else(|| hint(pv)))
            }
        }
    }
}

/// Cheaper, looser variant of the upper bounds above: one pass over vertex
/// pairs, no relaxation search. Always ≥ the tight bound — suitable as a
/// prefilter over large simplex collections.
pub fn quick_bound(s: &Simplex6, objective: crate::solution::Objective) -> f64 {
    let (mut mu2, mut mv2, mut q, mut d) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..7 {
        let (ui, vi) = (u_of(&s.vertices[i]), v_of(&s.vertices[i]));
        for j in i..7 {
            let (uj, vj) = (u_of(&s.vertices[j]), v_of(&s.vertices[j]));
            let (gu, gv) = (ui.dot(&uj), vi.dot(&vj));
            mu2 = mu2.max(gu);
            mv2 = mv2.max(gv);
            q = q.max(gu + gv);
            d = d.max(0.5 * (ui.perp(&vj) + uj.perp(&vi)).abs());
        }
    }
    match objective {
        crate::solution::Objective::Area => (mu2 * mv2).min(d * d),
        crate::solution::Objective::Perimeter => (mu2.sqrt() + mv2.sqrt()).min((q + 2.0 * d).sqrt()),
    }
}

fn u_of(z: &Point6) -> Vector2<f64> {
    Vector2::new(z[2], z[3])
}

fn v_of(z: &Point6) -> Vector2<f64> {
    Vector2::new(z[4], z[5])
}

fn ortho(z: &Point6) -> f64 {
    u_of(z).dot(&v_of(z))
}

fn goal_value(goal: Goal, z: &Point6) -> f64 {
    match goal {
        Goal::AreaSq => u_of(z).norm_squared() * v_of(z).norm_squared(),
        Goal::HalfPerimeter => u_of(z).norm() + v_of(z).norm(),
    }
}

fn lex_less(a: &Point6, b: &Point6) -> bool {
    for k in 0..6 {
        if a[k] != b[k] {
            return a[k] < b[k];
        }
    }
    false
}

struct Cand {
    value: f64,
    z: Point6,
    res: f64,
}

/// Admit `z` as a candidate if it satisfies the orthogonality constraint;
/// equal values break ties toward the lexicographically smaller argmax.
fn offer(best: &mut Option<Cand>, goal: Goal, z: Point6, res: f64) {
    if ortho(&z).abs() > ORTHO_TOL {
        return;
    }
    let value = goal_value(goal, &z);
    let take = match best {
        None => true,
        Some(b) => value > b.value || (value == b.value && lex_less(&z, &b.z)),
    };
    if take {
        *best = Some(Cand { value, z, res });
    }
}

fn bilinear_matrix(verts: &[Point6; 7]) -> Mat7 {
    Mat7::from_fn(|i, j| {
        0.5 * (u_of(&verts[i]).dot(&v_of(&verts[j])) + u_of(&verts[j]).dot(&v_of(&verts[i])))
    })
}

/// Symmetrized determinant form: det(u(w), v(w)) = wᵀ·D·w.
fn det_matrix(verts: &[Point6; 7]) -> Mat7 {
    Mat7::from_fn(|i, j| {
        0.5 * (u_of(&verts[i]).perp(&v_of(&verts[j])) + u_of(&verts[j]).perp(&v_of(&verts[i])))
    })
}

fn form_range(m: &Mat7, face: &[usize]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in face {
        for &j in face {
            lo = lo.min(m[(i, j)]);
            hi = hi.max(m[(i, j)]);
        }
    }
    (lo, hi)
}

/// Tightest member of a family of relaxed bounds: at feasible weights the
/// orthogonality form wᵀMw vanishes, so for every λ the objective pieces
/// may be shifted by λ·M before taking the convex-combination bound. The
/// map λ ↦ bound is convex (a max of |affine| terms), so a short ternary
/// search locates its minimum; any evaluation stays a valid bound, and the
/// ORTHO_TOL · |λ| term accounts for candidates meeting the constraint
/// only within tolerance.
fn face_upper_bound(
    goal: Goal,
    face: &[usize],
    gu: &Mat7,
    gv: &Mat7,
    dm: &Mat7,
    mm: &Mat7,
) -> f64 {
    let (mut mu2, mut mv2) = (0.0f64, 0.0f64);
    for &i in face {
        for &j in face {
            mu2 = mu2.max(gu[(i, j)]);
            mv2 = mv2.max(gv[(i, j)]);
        }
    }
    let lam = relaxed_lambda(goal, face, gu, gv, dm, mm);
    let best = relaxed_value(goal, face, gu, gv, dm, mm, lam);
    match goal {
        Goal::AreaSq => (mu2 * mv2).min(best * best),
        Goal::HalfPerimeter => (mu2.sqrt() + mv2.sqrt()).min(best.max(0.0).sqrt()),
    }
}

/// The shifted convex-combination bound at a fixed multiplier λ.
fn relaxed_value(
    goal: Goal,
    face: &[usize],
    gu: &Mat7,
    gv: &Mat7,
    dm: &Mat7,
    mm: &Mat7,
    lam: f64,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for &i in face {
        for &j in face {
            let det = (dm[(i, j)] + lam * mm[(i, j)]).abs();
            let t = match goal {
                Goal::AreaSq => det,
                Goal::HalfPerimeter => gu[(i, j)] + gv[(i, j)] + 2.0 * det,
            };
            worst = worst.max(t);
        }
    }
    worst + ortho_slack(goal, lam)
}

/// Near-optimal multiplier for the shifted bound, by ternary search on the
/// convex map λ ↦ bound (any λ stays valid, so precision is not critical).
fn relaxed_lambda(goal: Goal, face: &[usize], gu: &Mat7, gv: &Mat7, dm: &Mat7, mm: &Mat7) -> f64 {
    let h = |lam: f64| relaxed_value(goal, face, gu, gv, dm, mm, lam);
    // Bracket the argmin: beyond |λ| = (all det entries)/(largest |M|
    // entry) the shifted entries only grow.
    let mmax = face
        .iter()
        .flat_map(|&i| face.iter().map(move |&j| mm[(i, j)].abs()))
        .fold(0.0f64, f64::max);
    if mmax <= 1e-18 {
        return 0.0;
    }
    let dmax = face
        .iter()
        .flat_map(|&i| face.iter().map(move |&j| dm[(i, j)].abs()))
        .fold(0.0f64, f64::max);
    let (mut lo, mut hi) = (-2.0 * dmax / mmax, 2.0 * dmax / mmax);
    for _ in 0..24 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if h(a) <= h(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let lam = 0.5 * (lo + hi);
    if h(lam) <= h(0.0) {
        lam
    } else {
        0.0
    }
}

fn face_of(mask: u32) -> Vec<usize> {
    (0..7).filter(|i| mask >> i & 1 == 1).collect()
}

fn face_arr(mask: u32) -> ([usize; 7], usize) {
    let mut f = [0usize; 7];
    let mut k = 0;
    for i in 0..7 {
        if mask >> i & 1 == 1 {
            f[k] = i;
            k += 1;
        }
    }
    (f, k)
}

/// The two shifted quadratic forms whose maxima bound the coupled part of
/// the goal: ±(D̃ + λM) for the squared area (covering |det|), and
/// G ± 2(D̃ + λM) for the squared half-perimeter.
fn shifted_forms(goal: Goal, gu: &Mat7, gv: &Mat7, dm: &Mat7, mm: &Mat7, lam: f64) -> (Mat7, Mat7) {
    match goal {
        Goal::AreaSq => {
            let d = dm + mm * lam;
            (d, -d)
        }
        Goal::HalfPerimeter => {
            let g = gu + gv;
            let d2 = (dm + mm * lam) * 2.0;
            (g + d2, g - d2)
        }
    }
}

/// Bound slack for candidates meeting the orthogonality constraint only
/// within tolerance: the shift λ·wᵀMw does not vanish exactly, and the
/// half-perimeter bound carries the determinant term twice.
fn ortho_slack(goal: Goal, lam: f64) -> f64 {
    match goal {
        Goal::AreaSq => ORTHO_TOL * lam.abs(),
        Goal::HalfPerimeter => 2.0 * ORTHO_TOL * lam.abs(),
    }
}

/// Stationary values of the quadratic form wᵀAw on each closed face of the
/// 7-vertex simplex, indexed by vertex-subset bitmask.
///
/// On the affine hull of face F, stationarity of wᵀAw subject to Σw = 1
/// reads A_F w = ν·1, Σw = 1, and at any solution the value is
/// wᵀA_F w = Σᵢ wᵢ(A_F w)ᵢ = ν; when the system is rank-deficient every
/// solution shares the same ν, so ν is well defined per face. A face whose
/// unique stationary point has negative weights has no interior critical
/// point — its maximum lies on sub-faces, which are enumerated separately —
/// and contributes nothing. Near-singular systems fall back to the face's
/// entry maximum, which bounds the form over the whole face. Folding the
/// table with [`subset_max`] therefore yields, per face, an upper bound on
/// (in the regular cases, exactly) max wᵀAw over that face.
enum Stationary {
    /// Residual-verified stationary value ν; sound because ν matches the
    /// form at the returned point up to the residual.
    Value(f64),
    /// Confidently regular system whose unique stationary point lies outside
    /// the face: no interior critical point, sub-faces cover the maximum.
    Outside,
    /// No trustworthy solution; the caller must cover the face another way.
    Unsolved,
}

fn stationary_nu<const N: usize>(an: &Mat7, face: &[usize; 7]) -> Stationary {
    let k = N - 1;
    let mut b = SMatrix::<f64, N, N>::zeros();
    for r in 0..k {
        for c in 0..k {
            b[(r, c)] = an[(face[r], face[c])];
        }
        b[(r, k)] = -1.0;
        b[(k, r)] = 1.0;
    }
    let mut rhs = SVector::<f64, N>::zeros();
    rhs[k] = 1.0;
    let lu = b.lu();
    match lu.solve(&rhs) {
        Some(x)
            if x.iter().all(|c| c.is_finite())
                && (b * x - rhs).norm() <= 1e-8 * x.norm().max(1.0) =>
        {
            // The feasibility test may prune the candidate only when the
            // system is confidently regular (unique stationary point); a
            // rank-marginal system keeps ν unconditionally — all solutions
            // share one ν, so if the stationary set meets the face this is
            // its value, and otherwise an overestimate never weakens an
            // upper bound.
            let piv = lu.u().diagonal();
            let pmax = piv.iter().fold(0.0f64, |m, p| m.max(p.abs()));
            let pmin = piv.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
            let regular = pmin > 1e-6 * pmax;
            if !regular || (0..k).all(|i| x[i] >= -1e-9) {
                Stationary::Value(x[k])
            } else {
                Stationary::Outside
            }
        }
        _ => Stationary::Unsolved,
    }
}

fn stationary_table(a: &Mat7) -> [f64; 128] {
    let mut t = [f64::NEG_INFINITY; 128];
    // Scale-normalize so the singularity threshold is dimensionless.
    let amax = (0..7)
        .flat_map(|i| (0..7).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max(a[(i, j)].abs()));
    if amax == 0.0 {
        return [0.0; 128];
    }
    let an = a / amax;
    for mask in 1u32..128 {
        let midx = mask as usize;
        let (face, k) = face_arr(mask);
        if k == 1 {
            t[midx] = a[(face[0], face[0])];
            continue;
        }
        let nu = match k {
            2 => stationary_nu::<3>(&an, &face),
            3 => stationary_nu::<4>(&an, &face),
            4 => stationary_nu::<5>(&an, &face),
            5 => stationary_nu::<6>(&an, &face),
            6 => stationary_nu::<7>(&an, &face),
            _ => stationary_nu::<8>(&an, &face),
        };
        match nu {
            Stationary::Value(v) => t[midx] = v * amax,
            Stationary::Outside => {}
            Stationary::Unsolved => {
                let mut hi = f64::NEG_INFINITY;
                for r in 0..k {
                    for c in 0..k {
                        hi = hi.max(a[(face[r], face[c])]);
                    }
                }
                t[midx] = hi;
            }
        }
    }
    t
}

/// In-place subset maximum over the face lattice: afterwards `t[mask]` is
/// the maximum of the input values over all nonempty submasks of `mask`.
/// Ascending mask order visits every child before its parents.
fn subset_max(t: &mut [f64; 128]) {
    for mask in 1u32..128 {
        for i in 0..7 {
            if mask >> i & 1 == 1 {
                let child = (mask & !(1 << i)) as usize;
                if child != 0 && t[child] > t[mask as usize] {
                    t[mask as usize] = t[child];
                }
            }
        }
    }
}

/// Entry maximum of a bilinear form over each face: pair entries as base
/// cases, folded upward through the lattice.
fn pair_table(g: &Mat7) -> [f64; 128] {
    let mut t = [f64::NEG_INFINITY; 128];
    for i in 0..7 {
        t[1 << i] = g[(i, i)];
        for j in (i + 1)..7 {
            t[(1 << i | 1 << j) as usize] = g[(i, j)];
        }
    }
    subset_max(&mut t);
    t
}

/// Upper bounds for the goal over every closed face at once, indexed by
/// vertex-subset bitmask. Per face the smaller of two bounds is taken: the
/// Gram product bound (entry maxima of wᵀGᵤw, wᵀGᵥw) and the coupled bound —
/// the exact maximum of the λ-shifted quadratic form of [`shifted_forms`]
/// over the face, valid because wᵀMw vanishes at feasible weights. λ is
/// chosen once per simplex by ternary search on the entry relaxation.
fn face_bounds_all(goal: Goal, gu: &Mat7, gv: &Mat7, dm: &Mat7, mm: &Mat7) -> [f64; 128] {
    let all: [usize; 7] = [0, 1, 2, 3, 4, 5, 6];
    let lam = relaxed_lambda(goal, &all, gu, gv, dm, mm);
    let (ap, am) = shifted_forms(goal, gu, gv, dm, mm, lam);
    let mut tp = stationary_table(&ap);
    let mut tm = stationary_table(&am);
    subset_max(&mut tp);
    subset_max(&mut tm);
    // Entry maxima of the same shifted forms cap the stationary values:
    // rank-marginal faces may report stationary values of the affine hull,
    // valid but possibly far above the face's own range.
    let ep = pair_table(&ap);
    let em = pair_table(&am);
    let tu = pair_table(gu);
    let tv = pair_table(gv);
    let slack = ortho_slack(goal, lam);
    let mut out = [f64::NEG_INFINITY; 128];
    for mask in 1..128usize {
        let q = tp[mask].max(tm[mask]).min(ep[mask].max(em[mask])) + slack;
        out[mask] = match goal {
            Goal::AreaSq => (tu[mask] * tv[mask]).min(q * q),
            Goal::HalfPerimeter => {
                let gp = tu[mask].max(0.0).sqrt() + tv[mask].max(0.0).sqrt();
                gp.min(q.max(0.0).sqrt())
            }
        };
    }
    out
}

fn solve(s: &Simplex6, goal: Goal, floor: f64) -> Result<OptResult, SimplexOptError> {
    if s.vertices.iter().any(|z| z.iter().any(|t| !t.is_finite())) {
        return Err(SimplexOptError::DegenerateSimplex);
    }
    let raw_scale = s.vertices.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = if raw_scale > 0.0 { raw_scale } else { 1.0 };
    let mut verts = s.vertices;
    for z in &mut verts {
        *z /= scale;
    }
    // The objective is homogeneous in the coordinates (degree 4 for |u|²|v|²,
    // degree 1 for |u|+|v|), so the external floor rescales along with them.
    let floor_norm = if floor.is_finite() {
        match goal {
            Goal::AreaSq => floor / (scale * scale * scale * scale),
            Goal::HalfPerimeter => floor / scale,
        }
    } else {
        f64::NEG_INFINITY
    };

    let m = bilinear_matrix(&verts);
    let dm = det_matrix(&verts);
    let gu = Mat7::from_fn(|i, j| u_of(&verts[i]).dot(&u_of(&verts[j])));
    let gv = Mat7::from_fn(|i, j| v_of(&verts[i]).dot(&v_of(&verts[j])));
    let all: Vec<usize> = (0..7).collect();
    let (lo, hi) = form_range(&m, &all);
    if lo > ORTHO_TOL || hi < -ORTHO_TOL {
        return Ok(OptResult {
            value: 0.0,
            argmax: None,
            feasible: false,
            kkt_residual: 0.0,
        });
    }

    let tick = std::time::Instant::now();
    let fb = face_bounds_all(goal, &gu, &gv, &dm, &m);
    let mut order: Vec<(f64, u32)> = (1u32..128).map(|mask| (fb[mask as usize], mask)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    counters::NS_BOUNDS.fetch_add(tick.elapsed().as_nanos() as usize, Relaxed);
    let tick = std::time::Instant::now();

    let mut best: Option<Cand> = None;
    // Vertex candidates are free and give the scan an incumbent from the
    // first face on.
    for z in &verts {
        offer(&mut best, goal, *z, ortho(z).abs());
    }
    for (ub, mask) in order {
        // Faces come in decreasing upper-bound order; once none can beat the
        // floor or the incumbent (ties included — they cannot improve the
        // value), the scan is over.
        let cut = match &best {
            Some(b) => floor_norm.max(b.value),
            None => floor_norm,
        };
        if ub <= cut {
            break;
        }
        counters::FACES.fetch_add(1, Relaxed);
        let face = face_of(mask);
        let (lo, hi) = form_range(&m, &face);
        if lo > ORTHO_TOL || hi < -ORTHO_TOL {
            continue;
        }
        if face.len() == 1 {
            let z = verts[face[0]];
            offer(&mut best, goal, z, ortho(&z).abs());
        } else {
            newton_multistart(goal, &verts, &face, &mut best);
        }
        if face.len() <= 3 {
            slice_candidates(goal, &verts, &face, &mut best);
        }
    }
    counters::NS_NEWTON.fetch_add(tick.elapsed().as_nanos() as usize, Relaxed);

    Ok(match best {
        None => OptResult {
            value: 0.0,
            argmax: None,
            feasible: false,
            kkt_residual: 0.0,
        },
        Some(c) => {
            let z = c.z * scale;
            OptResult {
                value: goal_value(goal, &z),
                argmax: Some(z),
                feasible: true,
                kkt_residual: c.res,
            }
        }
    })
}

/// Objective and constraint gradients at `z`; None inside the nonsmooth
/// guard band of the half-perimeter objective.
fn grads(goal: Goal, z: &Point6) -> Option<(Point6, Point6)> {
    let (u, v) = (u_of(z), v_of(z));
    let mut gg = Point6::zeros();
    gg[2] = v.x;
    gg[3] = v.y;
    gg[4] = u.x;
    gg[5] = u.y;
    let mut gf = Point6::zeros();
    match goal {
        Goal::AreaSq => {
            let (nu, nv) = (u.norm_squared(), v.norm_squared());
            gf[2] = 2.0 * u.x * nv;
            gf[3] = 2.0 * u.y * nv;
            gf[4] = 2.0 * v.x * nu;
            gf[5] = 2.0 * v.y * nu;
        }
        Goal::HalfPerimeter => {
            let (nu, nv) = (u.norm(), v.norm());
            if nu < NORM_GUARD || nv < NORM_GUARD {
                return None;
            }
            gf[2] = u.x / nu;
            gf[3] = u.y / nu;
            gf[4] = v.x / nv;
            gf[5] = v.y / nv;
        }
    }
    Some((gf, gg))
}

/// Hessian of (objective + μ·⟨u,v⟩) at `z`.
fn lagrangian_hessian(goal: Goal, z: &Point6, mu: f64) -> Option<Mat6> {
    let (u, v) = (u_of(z), v_of(z));
    let mut h = Mat6::zeros();
    match goal {
        Goal::AreaSq => {
            let (nu, nv) = (u.norm_squared(), v.norm_squared());
            h[(2, 2)] = 2.0 * nv;
            h[(3, 3)] = 2.0 * nv;
            h[(4, 4)] = 2.0 * nu;
            h[(5, 5)] = 2.0 * nu;
            for (a, ua) in [(2, u.x), (3, u.y)] {
                for (b, vb) in [(4, v.x), (5, v.y)] {
                    h[(a, b)] = 4.0 * ua * vb;
                    h[(b, a)] = 4.0 * ua * vb;
                }
            }
        }
        Goal::HalfPerimeter => {
            let (nu, nv) = (u.norm(), v.norm());
            if nu < NORM_GUARD || nv < NORM_GUARD {
                return None;
            }
            let (uh, vh) = (u / nu, v / nv);
            h[(2, 2)] = (1.0 - uh.x * uh.x) / nu;
            h[(3, 3)] = (1.0 - uh.y * uh.y) / nu;
            h[(2, 3)] = -uh.x * uh.y / nu;
            h[(3, 2)] = h[(2, 3)];
            h[(4, 4)] = (1.0 - vh.x * vh.x) / nv;
            h[(5, 5)] = (1.0 - vh.y * vh.y) / nv;
            h[(4, 5)] = -vh.x * vh.y / nv;
            h[(5, 4)] = h[(4, 5)];
        }
    }
    h[(2, 4)] += mu;
    h[(4, 2)] += mu;
    h[(3, 5)] += mu;
    h[(5, 3)] += mu;
    Some(h)
}

/// Stationarity residual pieces at (t, μ) on a face: reduced gradient of
/// the Lagrangian, the constraint value, and the reduced constraint
/// gradient. Only the first `m` entries of the reduced vectors are live.
#[allow(clippy::type_complexity)]
fn kkt_pieces(
    goal: Goal,
    z0: &Point6,
    emat: &Mat6,
    m: usize,
    t: &Vec6,
    mu: f64,
) -> Option<(f64, Vec6, f64, Vec6, Point6)> {
    counters::EVALS.fetch_add(1, Relaxed);
    let z = z0 + emat * t;
    let (gf, gg) = grads(goal, &z)?;
    let rt = emat.transpose() * (gf + gg * mu);
    let jg = emat.transpose() * gg;
    let g = ortho(&z);
    let mut sq = g * g;
    for j in 0..m {
        sq += rt[j] * rt[j];
    }
    Some((sq.sqrt(), rt, g, jg, z))
}

/// Solve the saddle system, regularizing the diagonal progressively when
/// the face parametrization is rank-deficient.
fn solve_saddle(j: &Mat7, rhs: &Vec7, m: usize) -> Option<Vec7> {
    let mut nu = 0.0f64;
    for _ in 0..7 {
        counters::SADDLE.fetch_add(1, Relaxed);
        let mut jj = *j;
        if nu > 0.0 {
            for d in 0..m {
                jj[(d, d)] += nu;
            }
            jj[(m, m)] -= nu;
        }
        if let Some(sol) = jj.lu().solve(rhs) {
            if sol.iter().all(|t| t.is_finite())
                && (jj * sol - rhs).norm() <= 1e-8 * (1.0 + rhs.norm())
            {
                return Some(sol);
            }
        }
        nu = if nu == 0.0 { 1e-10 } else { nu * 100.0 };
    }
    None
}

fn face_seed(verts: &[Point6; 7], face: &[usize]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut mix = |bits: u64| {
        h ^= bits;
        h = h.rotate_left(23).wrapping_mul(0x2545_f491_4f6c_dd1d);
    };
    for &i in face {
        mix(i as u64 + 1);
        for c in 0..6 {
            mix(verts[i][c].to_bits());
        }
    }
    h
}

fn newton_multistart(goal: Goal, verts: &[Point6; 7], face: &[usize], best: &mut Option<Cand>) {
    let k = face.len();
    let m = k - 1;
    let z0 = verts[face[0]];
    let mut emat = Mat6::zeros();
    for j in 0..m {
        emat.set_column(j, &(verts[face[j + 1]] - z0));
    }
    // Objective and constraint read only (u, v), so Newton needs only the
    // barycentric directions that move them: an orthonormal basis of the
    // row space of the (u, v) rows of `emat` (rank ≤ 4). Searching the
    // complementary directions would wander a level set behind a singular
    // KKT matrix. Two projection passes keep the basis orthonormal.
    let mut basis: Vec<Vec6> = Vec::with_capacity(4);
    for row in 2..6 {
        let mut d = Vec6::zeros();
        for j in 0..m {
            d[j] = emat[(row, j)];
        }
        for _ in 0..2 {
            for b in &basis {
                d -= *b * b.dot(&d);
            }
        }
        let n = d.norm();
        if n > 1e-12 {
            basis.push(d / n);
        }
    }
    let r = basis.len();
    if r == 0 {
        // u and v are constant on this face; its vertices (their own faces)
        // already cover every attainable value here.
        return;
    }
    let mut bmat = Mat6::zeros();
    for (j, b) in basis.iter().enumerate() {
        bmat.set_column(j, b);
    }
    let eact = emat * bmat;

    // Up to 16 starts: centroid, centroid–vertex midpoints, 8 quasi-random.
    let mut starts: Vec<Vec7> = Vec::with_capacity(16);
    let centroid = Vec7::from_fn(|i, _| if i < k { 1.0 / k as f64 } else { 0.0 });
    starts.push(centroid);
    for i in 0..k {
        let mut w = centroid * 0.5;
        w[i] += 0.5;
        starts.push(w);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(face_seed(verts, face));
    for _ in 0..8 {
        let mut w = Vec7::zeros();
        let mut sum = 0.0;
        for entry in w.iter_mut().take(k) {
            let e = -(rng.gen_range(1e-9..1.0f64)).ln();
            *entry = e;
            sum += e;
        }
        starts.push(w / sum);
    }
    // Endpoints of earlier runs on this face; a later start whose iterate
    // enters a tight ball around one is re-converging to the same point
    // and can stop immediately.
    let mut found: Vec<Point6> = Vec::with_capacity(starts.len());
    for w in &starts {
        let mut t0 = Vec6::zeros();
        for j in 0..m {
            t0[j] = w[j + 1];
        }
        run_newton(goal, &(z0 + emat * t0), &eact, r, &t0, &bmat, m, best, &mut found);
    }
}

/// Damped Lagrange–Newton from `zs` along the active directions `eact`
/// (6×`r`); the face-membership test at the end maps the solution back to
/// barycentric coordinates via t₀ + B·s.
#[allow(clippy::too_many_arguments)]
fn run_newton(
    goal: Goal,
    zs: &Point6,
    eact: &Mat6,
    r: usize,
    t0: &Vec6,
    bmat: &Mat6,
    m: usize,
    best: &mut Option<Cand>,
    found: &mut Vec<Point6>,
) {
    counters::RUNS.fetch_add(1, Relaxed);
    let mut s = Vec6::zeros();
    // Least-squares multiplier at the start.
    let Some((_, _, _, jg0, z_init)) = kkt_pieces(goal, zs, eact, r, &s, 0.0) else {
        return;
    };
    let Some((gf0, _)) = grads(goal, &z_init) else {
        return;
    };
    let rf0 = eact.transpose() * gf0;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..r {
        num += rf0[j] * jg0[j];
        den += jg0[j] * jg0[j];
    }
    // Least-squares multiplier, damped: on faces nearly orthogonal to the
    // constraint gradient the raw quotient explodes and the run would
    // spend its whole budget walking the residual back down.
    let mut mu = -num / (den + 1e-8);

    let mut last_step = f64::INFINITY;
    let mut slow_iters = 0usize;
    for _ in 0..NEWTON_MAX_ITERS {
        counters::ITERS.fetch_add(1, Relaxed);
        let Some((res, rt, g, jg, z)) = kkt_pieces(goal, zs, eact, r, &s, mu) else {
            return;
        };
        // Re-converging into an endpoint an earlier start already reported
        // (or already rejected) cannot produce anything new.
        if found.iter().any(|f| (z - f).norm_squared() < BASIN_R2) {
            counters::DEDUP.fetch_add(1, Relaxed);
            return;
        }
        // The residual alone certifies the iterate: on flat stationary
        // families the step never settles (the system is singular and the
        // point drifts inside the solution set at constant value), so
        // waiting for step < STEP_TOL as well would burn the whole budget.
        if res < KKT_TOL || (res < KKT_TOL_LOOSE && last_step < STEP_TOL) {
            counters::CONVERGED.fetch_add(1, Relaxed);
            break;
        }
        let Some(h6) = lagrangian_hessian(goal, &z, mu) else {
            return;
        };
        let a = eact.transpose() * h6 * eact;
        let mut j7 = Mat7::identity();
        for row in 0..r {
            for col in 0..r {
                j7[(row, col)] = a[(row, col)];
            }
            j7[(row, r)] = jg[row];
            j7[(r, row)] = jg[row];
        }
        j7[(r, r)] = 0.0;
        let mut rhs = Vec7::zeros();
        for row in 0..r {
            rhs[row] = -rt[row];
        }
        rhs[r] = -g;
        let Some(delta) = solve_saddle(&j7, &rhs, r) else {
            break;
        };
        // Most (face, start) pairs admit no interior stationary point at
        // all, so runs must fail cheaply: by α = 1e-3 the required Armijo
        // decrease is ~1e-7·res, and a direction that cannot clear that is
        // dead.
        let mut alpha = 1.0f64;
        let mut accepted_res = f64::NAN;
        while alpha >= 1e-3 {
            let mut ss = s;
            for j in 0..r {
                ss[j] += alpha * delta[j];
            }
            let mm = mu + alpha * delta[r];
            if let Some((rr, ..)) = kkt_pieces(goal, zs, eact, r, &ss, mm) {
                if rr <= (1.0 - 1e-4 * alpha) * res {
                    s = ss;
                    mu = mm;
                    last_step = alpha * delta.norm();
                    accepted_res = rr;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if accepted_res.is_nan() {
            counters::NOACCEPT.fetch_add(1, Relaxed);
            break;
        }
        // A healthy run converges superlinearly once in the basin. Linear
        // progress — including the rate-1/2 signature of Newton heading at
        // a singular root — will not reach tolerance in any sane budget,
        // so three such iterations in a row end the run; its final iterate
        // is still offered below.
        if accepted_res > 0.35 * res && accepted_res > KKT_TOL {
            slow_iters += 1;
            if slow_iters >= 3 {
                counters::CRAWL.fetch_add(1, Relaxed);
                break;
            }
        } else {
            slow_iters = 0;
        }
    }

    // Offer the final iterate (converged or stalled) if it stayed on the face.
    let z = zs + eact * s;
    found.push(z);
    let t = t0 + bmat * s;
    let mut w0 = 1.0;
    for j in 0..m {
        if !(-BARY_TOL..=1.0 + BARY_TOL).contains(&t[j]) {
            return;
        }
        w0 -= t[j];
    }
    if !(-BARY_TOL..=1.0 + BARY_TOL).contains(&w0) {
        return;
    }
    let final_res = match kkt_pieces(goal, zs, eact, r, &s, mu) {
        Some((rr, ..)) => rr,
        None => ortho(&z).abs(),
    };
    offer(best, goal, z, final_res);
}

/// Exact candidates on the u = 0 and v = 0 loci: isolated affine solutions
/// of the vanishing block on faces of dimension ≤ 2. Flat crossings are
/// covered by the faces' own vertices.
fn slice_candidates(goal: Goal, verts: &[Point6; 7], face: &[usize], best: &mut Option<Cand>) {
    for pick_v in [true, false] {
        let sel = |z: &Point6| if pick_v { v_of(z) } else { u_of(z) };
        match *face {
            [a, b] => {
                let (za, zb) = (verts[a], verts[b]);
                let d = sel(&zb) - sel(&za);
                let dn = d.norm_squared();
                if dn <= 1e-24 {
                    continue;
                }
                let t = -sel(&za).dot(&d) / dn;
                if !(-BARY_TOL..=1.0 + BARY_TOL).contains(&t) {
                    continue;
                }
                let z = za + (zb - za) * t;
                if sel(&z).norm() <= ORTHO_TOL {
                    offer(best, goal, z, ortho(&z).abs());
                }
            }
            [a, b, c] => {
                let (za, zb, zc) = (verts[a], verts[b], verts[c]);
                let m2 = Matrix2::from_columns(&[sel(&zb) - sel(&za), sel(&zc) - sel(&za)]);
                let Some(st) = m2.lu().solve(&(-sel(&za))) else {
                    continue;
                };
                let (s, t) = (st.x, st.y);
                let w0 = 1.0 - s - t;
                if ![w0, s, t]
                    .iter()
                    .all(|w| (-BARY_TOL..=1.0 + BARY_TOL).contains(w))
                {
                    continue;
                }
                let z = za + (zb - za) * s + (zc - za) * t;
                if sel(&z).norm() <= ORTHO_TOL {
                    offer(best, goal, z, ortho(&z).abs());
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ConvexPolygon;
    use crate::polygen::random_convex;
    use crate::pspace::ParallelogramSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z6(a: [f64; 6]) -> Point6 {
        Point6::from_row_slice(&a)
    }

    /// A well-conditioned simplex centered at `c`: vertices c + h·e_k and
    /// c − h·(1,…,1), so c is the vertex centroid.
    fn tiny_simplex_around(c: Point6, h: f64) -> Simplex6 {
        let mut vertices = [c; 7];
        vertices[0] = c - Point6::from_element(h);
        for k in 0..6 {
            let mut e = Point6::zeros();
            e[k] = h;
            vertices[k + 1] = c + e;
        }
        Simplex6 { vertices }
    }

    fn simplex_scale(s: &Simplex6) -> f64 {
        s.vertices.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Barycentric coordinates of z relative to the simplex (7×7 solve).
    fn barycentric(s: &Simplex6, z: &Point6) -> Option<[f64; 7]> {
        let mut m = nalgebra::SMatrix::<f64, 7, 7>::zeros();
        for (j, v) in s.vertices.iter().enumerate() {
            for r in 0..6 {
                m[(r, j)] = v[r];
            }
            m[(6, j)] = 1.0;
        }
        let mut rhs = nalgebra::SVector::<f64, 7>::zeros();
        for r in 0..6 {
            rhs[r] = z[r];
        }
        rhs[6] = 1.0;
        let w = m.lu().solve(&rhs)?;
        let mut out = [0.0; 7];
        for (o, wi) in out.iter_mut().zip(w.iter()) {
            *o = *wi;
        }
        Some(out)
    }

    /// Project a point onto {⟨u,v⟩ = 0} by Newton steps along the constraint
    /// gradient; returns None when the gradient degenerates.
    fn project_to_constraint(mut z: Point6) -> Option<Point6> {
        for _ in 0..40 {
            let g = ortho(&z);
            if g.abs() <= 1e-14 * (1.0 + z.norm_squared()) {
                return Some(z);
            }
            let mut gg = Point6::zeros();
            gg[2] = z[4];
            gg[3] = z[5];
            gg[4] = z[2];
            gg[5] = z[3];
            let n2 = gg.norm_squared();
            if n2 < 1e-30 {
                return None;
            }
            z -= gg * (g / n2);
        }
        None
    }

    /// Random feasible samples of Δ ∩ {⟨u,v⟩=0}; asserts the solver's value
    /// dominates each of them.
    fn assert_dominates_samples(
        s: &Simplex6,
        goal_fn: fn(&Simplex6) -> Result<OptResult, SimplexOptError>,
        goal_of: fn(&Point6) -> f64,
        samples: usize,
        seed: u64,
    ) {
        let r = goal_fn(s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let mut w = [0.0f64; 7];
            let mut sum = 0.0;
            for t in &mut w {
                *t = -(rng.gen_range(1e-9..1.0f64)).ln();
                sum += *t;
            }
            let mut z = Point6::zeros();
            for (t, v) in w.iter().zip(&s.vertices) {
                z += v * (*t / sum);
            }
            let Some(p) = project_to_constraint(z) else {
                continue;
            };
            let Some(bc) = barycentric(s, &p) else {
                continue;
            };
            if !bc.iter().all(|c| (-1e-9..=1.0 + 1e-9).contains(c)) {
                continue;
            }
            let fv = goal_of(&p);
            assert!(
                r.feasible && r.value >= fv - 1e-9 * (1.0 + fv),
                "solver value {} beaten by sampled feasible point with {}",
                r.value,
                fv
            );
        }
    }

    fn area_of(z: &Point6) -> f64 {
        u_of(z).norm_squared() * v_of(z).norm_squared()
    }

    fn halfperi_of(z: &Point6) -> f64 {
        u_of(z).norm() + v_of(z).norm()
    }

    #[test]
    fn sign_constant_form_is_infeasible() {
        // u ≈ v ≈ (1,0): every pairwise form entry is near 1.
        let s = tiny_simplex_around(z6([0.0, 0.0, 1.0, 0.0, 1.0, 0.0]), 1e-3);
        for f in [max_area_on_simplex, max_halfperimeter_on_simplex] {
            let r = f(&s).unwrap();
            assert!(!r.feasible);
            assert_eq!(r.value, 0.0);
            assert!(r.argmax.is_none());
        }
    }

    #[test]
    fn tiny_simplex_recovers_unit_square_values() {
        let c = z6([0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let s = tiny_simplex_around(c, 4e-4);
        let sc = simplex_scale(&s);

        let ra = max_area_on_simplex(&s).unwrap();
        assert!(ra.feasible);
        assert!((ra.value - 1.0).abs() <= 1e-2, "area² {}", ra.value);
        let za = ra.argmax.unwrap();
        assert!(ortho(&za).abs() <= 1e-9 * sc * sc);
        assert_eq!(ra.value, area_of(&za));
        let bc = barycentric(&s, &za).unwrap();
        assert!(bc.iter().all(|c| (-1e-6..=1.0 + 1e-6).contains(c)));

        let rp = max_halfperimeter_on_simplex(&s).unwrap();
        assert!(rp.feasible);
        assert!((rp.value - 2.0).abs() <= 1e-2, "half-perimeter {}", rp.value);
        let zp = rp.argmax.unwrap();
        assert!(ortho(&zp).abs() <= 1e-9 * sc * sc);
        assert_eq!(rp.value, halfperi_of(&zp));

        assert_dominates_samples(&s, max_area_on_simplex, area_of, 1000, 91);
        assert_dominates_samples(&s, max_halfperimeter_on_simplex, halfperi_of, 1000, 92);
    }

    #[test]
    fn flat_simplex_in_v_zero_subspace() {
        let vertices = [
            z6([0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            z6([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
            z6([1.0, 0.0, 0.5, 0.0, 0.0, 0.0]),
            z6([0.0, 1.0, 0.2, 0.3, 0.0, 0.0]),
            z6([0.3, 0.3, 0.0, 0.9, 0.0, 0.0]),
            z6([0.7, 0.1, 0.4, 0.4, 0.0, 0.0]),
            z6([0.2, 0.8, 0.6, 0.1, 0.0, 0.0]),
        ];
        let s = Simplex6 { vertices };

        let ra = max_area_on_simplex(&s).unwrap();
        assert!(ra.feasible);
        assert_eq!(ra.value, 0.0);
        assert!(ra.argmax.is_some());

        // |u| is convex, so its maximum over the flat simplex sits at the
        // vertex (0,0,1,0,0,0); the half-perimeter there is exactly 1.
        let rp = max_halfperimeter_on_simplex(&s).unwrap();
        assert!(rp.feasible);
        assert!((rp.value - 1.0).abs() <= 1e-12, "value {}", rp.value);
        let zp = rp.argmax.unwrap();
        assert!((zp - z6([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])).norm() <= 1e-9);
    }

    #[test]
    fn triangulated_polytope_simplices_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p: ConvexPolygon = random_convex(5, &mut rng);
        let space = ParallelogramSpace::build(&p).unwrap();
        let sims = space.triangulate().unwrap();
        assert!(!sims.is_empty());
        let step = 1 + sims.len() / 25;
        for s in sims.iter().step_by(step) {
            let sc = simplex_scale(s);
            for (goal_fn, goal_of) in [
                (
                    max_area_on_simplex as fn(&Simplex6) -> Result<OptResult, SimplexOptError>,
                    area_of as fn(&Point6) -> f64,
                ),
                (max_halfperimeter_on_simplex, halfperi_of),
            ] {
                let r = goal_fn(s).unwrap();
                if !r.feasible {
                    assert_eq!(r.value, 0.0);
                    assert!(r.argmax.is_none());
                    // No vertex may satisfy the constraint then.
                    for v in &s.vertices {
                        assert!(ortho(v).abs() > 1e-9 * sc * sc);
                    }
                    continue;
                }
                let z = r.argmax.unwrap();
                assert!(ortho(&z).abs() <= 1e-9 * sc * sc);
                assert_eq!(r.value, goal_of(&z));
                // Dominates every feasible vertex of the simplex.
                for v in &s.vertices {
                    if ortho(v).abs() <= 1e-9 * sc * sc {
                        assert!(r.value >= goal_of(v) - 1e-12 * (1.0 + r.value));
                    }
                }
                // Inside the simplex, up to conditioning of the solve.
                let bc = barycentric(s, &z).unwrap();
                assert!(
                    bc.iter().all(|c| (-1e-6..=1.0 + 1e-6).contains(c)),
                    "barycentric {bc:?}"
                );
            }
            let ra = max_area_on_simplex(&s).unwrap();
            assert!(ra.value <= area_upper_bound(s) + 1e-12);
            let rp = max_halfperimeter_on_simplex(&s).unwrap();
            assert!(rp.value <= halfperimeter_upper_bound(s) + 1e-12);
        }
    }

    #[test]
    fn dominates_projected_samples_on_triangulated_simplices() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let p: ConvexPolygon = random_convex(6, &mut rng);
        let space = ParallelogramSpace::build(&p).unwrap();
        let sims = space.triangulate().unwrap();
        let step = 1 + sims.len() / 8;
        for (i, s) in sims.iter().step_by(step).enumerate() {
            assert_dominates_samples(s, max_area_on_simplex, area_of, 300, 100 + i as u64);
            assert_dominates_samples(
                s,
                max_halfperimeter_on_simplex,
                halfperi_of,
                300,
                200 + i as u64,
            );
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let p: ConvexPolygon = random_convex(5, &mut rng);
        let space = ParallelogramSpace::build(&p).unwrap();
        let sims = space.triangulate().unwrap();
        let step = 1 + sims.len() / 10;
        for s in sims.iter().step_by(step) {
            for f in [max_area_on_simplex, max_halfperimeter_on_simplex] {
                let a = f(s).unwrap();
                let b = f(s).unwrap();
                assert_eq!(a.value.to_bits(), b.value.to_bits());
                assert_eq!(a.feasible, b.feasible);
                match (a.argmax, b.argmax) {
                    (None, None) => {}
                    (Some(x), Some(y)) => {
                        for k in 0..6 {
                            assert_eq!(x[k].to_bits(), y[k].to_bits());
                        }
                    }
                    _ => panic!("argmax presence differs between runs"),
                }
            }
        }
    }

    #[test]
    fn degenerate_input_is_rejected() {
        let mut s = tiny_simplex_around(z6([0.0; 6]), 1e-3);
        s.vertices[3][2] = f64::NAN;
        assert_eq!(
            max_area_on_simplex(&s).unwrap_err(),
            SimplexOptError::DegenerateSimplex
        );
    }

    /// Cross-check one analytically solvable instance: an edge from
    /// (0,0,1,0,ε,β) to (0,0,1,0,ε,−β) crosses ⟨u,v⟩ = u₁v₁ = ε at no point,
    /// but with u = (1,0): ⟨u,v⟩ = v₁ = ε ≠ 0 everywhere, so only a slice or
    /// nothing. Instead verify against a brute-force grid on a 2-face.
    #[test]
    fn matches_dense_grid_on_a_triangle_face() {
        // Triangle face spanned by three points with a feasible crossing.
        let za = z6([0.0, 0.0, 1.0, 0.0, 0.2, 1.0]);
        let zb = z6([0.0, 0.0, 0.8, 0.3, -0.4, 0.9]);
        let zc = z6([0.1, 0.0, 1.1, -0.2, 0.1, -0.8]);
        // Embed the triangle in a 6-simplex by adding tiny offsets in the
        // remaining directions so the simplex is honest but razor thin
        // around the triangle; grid-search the triangle itself.
        let h = 1e-7;
        let mut vertices = [za, zb, zc, za, za, za, za];
        for (k, vtx) in vertices.iter_mut().enumerate().skip(3) {
            let mut e = Point6::zeros();
            e[k - 3] = h;
            e[5 - (k - 3)] += 0.5 * h;
            *vtx = za + e;
        }
        let s = Simplex6 { vertices };
        let r = max_area_on_simplex(&s).unwrap();
        assert!(r.feasible);

        // Dense barycentric grid over the (za, zb, zc) triangle, projected
        // onto the constraint.
        let n = 400;
        let mut best = 0.0f64;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                let z = za * (1.0 - a - b) + zb * a + zc * b;
                let Some(p) = project_to_constraint(z) else {
                    continue;
                };
                // Stay inside the triangle after projection.
                let d1 = zb - za;
                let d2 = zc - za;
                let mut gram = Matrix2::zeros();
                gram[(0, 0)] = d1.dot(&d1);
                gram[(0, 1)] = d1.dot(&d2);
                gram[(1, 0)] = gram[(0, 1)];
                gram[(1, 1)] = d2.dot(&d2);
                let rhs = nalgebra::Vector2::new(d1.dot(&(p - za)), d2.dot(&(p - za)));
                let Some(st) = gram.lu().solve(&rhs) else {
                    continue;
                };
                let (sa, sb) = (st.x, st.y);
                if sa < -1e-9 || sb < -1e-9 || sa + sb > 1.0 + 1e-9 {
                    continue;
                }
                let back = za + d1 * sa + d2 * sb;
                if (back - p).norm() > 1e-9 {
                    continue;
                }
                best = best.max(area_of(&p));
            }
        }
        assert!(
            r.value >= best - 1e-4 * (1.0 + best),
            "solver {} vs grid {}",
            r.value,
            best
        );
    }
}
