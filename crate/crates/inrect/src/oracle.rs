//! Independent brute-force reference solver: best axis-aligned rectangle at a
//! fixed orientation, and a dense orientation sweep.
//!
//! The fixed-orientation problem is reduced to two variables. In the frame
//! where the rectangle is axis-aligned, a rectangle spanning the horizontal
//! strip `y1 ≤ y ≤ y2` can use any x-interval inside
//! `[max(xl(y1), xl(y2)), min(xr(y1), xr(y2))]`, because the left boundary
//! `xl` of a convex polygon is convex in `y` and the right boundary `xr` is
//! concave. The resulting width `W(y1, y2)` is concave, so `h·W` (area) is
//! log-concave and `2(h + W)` (perimeter) is concave, and nested line
//! searches (coarse grid to bracket, then golden section) find the optimum.
//! Every probe is also recorded as a feasible candidate, so the reported
//! value is a true lower bound on the optimum regardless of search accuracy.
//!
//! The sweep evaluates a grid of orientations in `[0, π/2)` (rectangle
//! orientations have period π/2, by swapping the edge roles) and refines
//! around grid local maxima by golden section. For the perimeter objective
//! the diameter segment is always added as a candidate, since a segment is a
//! feasible degenerate rectangle at an orientation the grid may miss.

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{ConvexPolygon, Point2, Vec2};
use crate::solution::{Method, Objective, RectangleSolution, SolveStats};

/// Golden-ratio step for section search.
const INVPHI: f64 = 0.618_033_988_749_894_9;
/// Coarse grid sizes bracketing the outer (y1) and inner (y2) searches.
const OUTER_GRID: usize = 64;
const INNER_GRID: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    /// The polygon admits no inscribed rectangle candidate; unreachable for
    /// validated polygons, which always have positive area.
    #[error("no feasible inscribed rectangle at this orientation")]
    Infeasible,
}

/// Result of an orientation sweep. `best` is feasible in `P`, so its value is
/// always a lower bound on the true optimum; `theta` is the orientation of
/// `best` and `dtheta` the grid step that was refined.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub best: RectangleSolution,
    pub theta: f64,
    pub dtheta: f64,
    pub lower_bound: bool,
}

/// Left/right boundary chains of the polygon rotated by `−theta`, each
/// strictly increasing in `y`, plus the rotation to map results back.
struct Strip {
    left: Vec<Point2>,
    right: Vec<Point2>,
    ymin: f64,
    ymax: f64,
    /// cos/sin of `theta`; the inverse rotation maps strip frame → original.
    cos: f64,
    sin: f64,
}

fn chain_x(chain: &[Point2], y: f64) -> f64 {
    let last = chain[chain.len() - 1];
    if y <= chain[0].y {
        return chain[0].x;
    }
    if y >= last.y {
        return last.x;
    }
    let idx = chain.partition_point(|v| v.y < y);
    let (a, b) = (chain[idx - 1], chain[idx]);
    a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x)
}

impl Strip {
    fn new(p: &ConvexPolygon, theta: f64) -> Strip {
        let (sin, cos) = theta.sin_cos();
        // Rotate by −theta; convexity and orientation are preserved.
        let pts: Vec<Point2> = p
            .vertices()
            .iter()
            .map(|v| Point2::new(cos * v.x + sin * v.y, -sin * v.x + cos * v.y))
            .collect();
        let n = pts.len();
        let extreme = |flip_x: f64, max_y: bool| -> usize {
            let mut best = 0usize;
            for i in 1..n {
                let key = (pts[i].y, flip_x * pts[i].x);
                let cur = (pts[best].y, flip_x * pts[best].x);
                let better = if max_y { key > cur } else { key < cur };
                if better {
                    best = i;
                }
            }
            best
        };
        // Bottom-right → top-right along CCW order is the right chain; the
        // CCW walk top-left → bottom-left, reversed, is the left chain. With
        // ties broken toward the outer x, horizontal top/bottom edges belong
        // to neither chain and both chains are strictly y-increasing.
        let br = extreme(-1.0, false);
        let tr = extreme(1.0, true);
        let tl = extreme(-1.0, true);
        let bl = extreme(1.0, false);
        let walk = |from: usize, to: usize| -> Vec<Point2> {
            let mut out = vec![pts[from]];
            let mut i = from;
            while i != to {
                i = (i + 1) % n;
                out.push(pts[i]);
            }
            out
        };
        let right = walk(br, tr);
        let mut left = walk(tl, bl);
        left.reverse();
        Strip {
            ymin: pts[bl].y,
            ymax: pts[tr].y,
            left,
            right,
            cos,
            sin,
        }
    }

    /// Feasible x-interval for a rectangle spanning `[y1, y2]`; empty when
    /// the second value is smaller than the first.
    fn x_interval(&self, y1: f64, y2: f64) -> (f64, f64) {
        let xl = chain_x(&self.left, y1).max(chain_x(&self.left, y2));
        let xr = chain_x(&self.right, y1).min(chain_x(&self.right, y2));
        (xl, xr)
    }

    /// Map a strip-frame point back to the original frame.
    fn unrotate(&self, p: Point2) -> Point2 {
        Point2::new(self.cos * p.x - self.sin * p.y, self.sin * p.x + self.cos * p.y)
    }
}

/// Best candidate seen so far: strip-frame rectangle `[xl, xl+w] × [y1, y2]`.
#[derive(Clone, Copy)]
struct Candidate {
    val: f64,
    y1: f64,
    y2: f64,
    xl: f64,
    w: f64,
}

struct Search<'a> {
    strip: &'a Strip,
    objective: Objective,
    evaluations: usize,
    best: Option<Candidate>,
}

impl<'a> Search<'a> {
    fn new(strip: &'a Strip, objective: Objective) -> Self {
        Search {
            strip,
            objective,
            evaluations: 0,
            best: None,
        }
    }

    /// Objective value for the strip `[y1, y2]`, recording the candidate.
    /// Infeasible strips (negative width) score zero area; the perimeter
    /// search never queries them because it bisects the feasible range first.
    fn eval(&mut self, y1: f64, y2: f64) -> f64 {
        let mut y1 = y1.clamp(self.strip.ymin, self.strip.ymax);
        let mut y2 = y2.clamp(self.strip.ymin, self.strip.ymax);
        if y1 > y2 {
            std::mem::swap(&mut y1, &mut y2);
        }
        self.evaluations += 1;
        let (xl, xr) = self.strip.x_interval(y1, y2);
        let w = (xr - xl).max(0.0);
        let h = y2 - y1;
        let feasible = xr >= xl;
        let val = match self.objective {
            Objective::Area => h * w,
            Objective::Perimeter => {
                if feasible {
                    2.0 * (h + w)
                } else {
                    f64::NEG_INFINITY
                }
            }
        };
        if feasible && self.best.as_ref().map_or(true, |b| val > b.val) {
            self.best = Some(Candidate { val, y1, y2, xl, w });
        }
        val
    }

    /// Largest `y2 ≥ y1` with a nonempty x-interval. `W(y1, ·)` is concave
    /// and nonnegative at `y1`, so the feasible set is an interval.
    fn feasible_top(&mut self, y1: f64) -> f64 {
        let width = |s: &mut Self, y2: f64| {
            s.evaluations += 1;
            let (xl, xr) = s.strip.x_interval(y1, y2);
            xr - xl
        };
        if width(self, self.strip.ymax) >= 0.0 {
            return self.strip.ymax;
        }
        let (mut lo, mut hi) = (y1, self.strip.ymax);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if width(self, mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Golden-section maximization of `f` on `[a, b]`; returns the best value
    /// probed. Every probe also goes through `eval`, so the tracked best
    /// candidate never regresses.
    fn golden<F: FnMut(&mut Self, f64) -> f64>(
        &mut self,
        mut a: f64,
        mut b: f64,
        tol: f64,
        mut f: F,
    ) -> f64 {
        let mut x1 = b - INVPHI * (b - a);
        let mut x2 = a + INVPHI * (b - a);
        let mut f1 = f(self, x1);
        let mut f2 = f(self, x2);
        let mut seen = f1.max(f2);
        let mut guard = 0;
        while b - a > tol && guard < 200 {
            guard += 1;
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INVPHI * (b - a);
                f1 = f(self, x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INVPHI * (b - a);
                f2 = f(self, x2);
            }
            seen = seen.max(f1.max(f2));
        }
        seen
    }

    /// Best objective over `y2` for a fixed `y1` (grid bracket + golden).
    /// Returns the max over this slice only, so the outer search sees the
    /// true marginal value function.
    fn inner_max(&mut self, y1: f64) -> f64 {
        let top = match self.objective {
            Objective::Area => self.strip.ymax,
            Objective::Perimeter => self.feasible_top(y1),
        };
        if top <= y1 {
            return self.eval(y1, y1);
        }
        let m = INNER_GRID;
        let at = |k: usize| y1 + (top - y1) * (k as f64 / m as f64);
        let mut best_k = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for k in 0..=m {
            let v = self.eval(y1, at(k));
            if v > best_v {
                best_v = v;
                best_k = k;
            }
        }
        let a = at(best_k.saturating_sub(1));
        let b = at((best_k + 1).min(m));
        let tol = 1e-12 * (self.strip.ymax - self.strip.ymin).max(1e-300);
        let refined = self.golden(a, b, tol, |s, y2| s.eval(y1, y2));
        best_v.max(refined)
    }

    /// Full nested search over `ymin ≤ y1 ≤ y2 ≤ ymax`.
    fn run(&mut self) {
        let (lo, hi) = (self.strip.ymin, self.strip.ymax);
        let m = OUTER_GRID;
        let at = |k: usize| lo + (hi - lo) * (k as f64 / m as f64);
        let mut best_k = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for k in 0..=m {
            let v = self.inner_max(at(k));
            if v > best_v {
                best_v = v;
                best_k = k;
            }
        }
        let a = at(best_k.saturating_sub(1));
        let b = at((best_k + 1).min(m));
        let tol = 1e-12 * (hi - lo).max(1e-300);
        self.golden(a, b, tol, |s, y1| s.inner_max(y1));
    }
}

/// Best inscribed rectangle whose edges make angle `theta` with the axes,
/// maximizing `objective`. Degenerate (zero-width or zero-height) rectangles
/// are part of the search domain, so for the perimeter objective the result
/// may be a segment.
pub fn fixed_orientation_best(
    p: &ConvexPolygon,
    theta: f64,
    objective: Objective,
) -> Result<RectangleSolution, OracleError> {
    let strip = Strip::new(p, theta);
    let mut search = Search::new(&strip, objective);
    search.run();
    let cand = search.best.ok_or(OracleError::Infeasible)?;
    let x = strip.unrotate(Point2::new(cand.xl, cand.y1));
    let h = cand.y2 - cand.y1;
    let u = strip.unrotate(Point2::new(cand.w, 0.0)) ;
    let v = strip.unrotate(Point2::new(0.0, h));
    let stats = SolveStats {
        evaluations: search.evaluations,
        ..SolveStats::default()
    };
    Ok(RectangleSolution::new(x, u, v, Method::Oracle, p.scale()).with_stats(stats))
}

/// Scored orientation: a solved angle plus the solution it produced.
struct AngleCandidate {
    theta: f64,
    solution: RectangleSolution,
}

fn solve_angle(p: &ConvexPolygon, theta: f64, objective: Objective) -> AngleCandidate {
    let solution =
        fixed_orientation_best(p, theta, objective).expect("valid polygon has candidates");
    AngleCandidate { theta, solution }
}

/// Dense orientation sweep: grid over `[0, π/2)` with step `dtheta`, golden
/// refinement (to bracket width 1e-9) around the best grid angle and every
/// strict grid local maximum (up to 8, best first). The result is the best
/// candidate over all probes, so refining the grid never loses to the coarse
/// run, and the value is a feasible lower bound on the optimum.
pub fn sweep(p: &ConvexPolygon, dtheta: f64, objective: Objective) -> SweepResult {
    assert!(dtheta > 0.0, "sweep step must be positive");
    let m = ((std::f64::consts::FRAC_PI_2 / dtheta).ceil() as usize).max(1);
    let step = std::f64::consts::FRAC_PI_2 / m as f64;
    let mut candidates: Vec<AngleCandidate> = (0..m)
        .into_par_iter()
        .map(|i| solve_angle(p, i as f64 * step, objective))
        .collect();

    // Strict local maxima of the periodic grid sequence, plus the global
    // grid best; refine each bracket by golden section on the angle.
    let values: Vec<f64> = candidates.iter().map(|c| c.solution.value(objective)).collect();
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&i| {
            m == 1 || {
                let prev = values[(i + m - 1) % m];
                let next = values[(i + 1) % m];
                values[i] > prev && values[i] > next
            }
        })
        .collect();
    let grid_best = (0..m)
        .max_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap().then(j.cmp(&i)))
        .unwrap();
    if !peaks.contains(&grid_best) {
        peaks.push(grid_best);
    }
    peaks.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j)));
    peaks.truncate(8);

    let refined: Vec<AngleCandidate> = peaks
        .par_iter()
        .flat_map(|&i| {
            let center = i as f64 * step;
            let (mut a, mut b) = (center - step, center + step);
            let mut out: Vec<AngleCandidate> = Vec::new();
            let probe = |theta: f64, out: &mut Vec<AngleCandidate>| -> f64 {
                let c = solve_angle(p, theta, objective);
                let v = c.solution.value(objective);
                out.push(c);
                v
            };
            let mut x1 = b - INVPHI * (b - a);
            let mut x2 = a + INVPHI * (b - a);
            let mut f1 = probe(x1, &mut out);
            let mut f2 = probe(x2, &mut out);
            let mut guard = 0;
            // Width 1e-12: at a kinked peak the value gap scales linearly
            // with the bracket width, and the monotone-refinement guarantee
            // promises 1e-12.
            while b - a > 1e-12 && guard < 150 {
                guard += 1;
                if f1 >= f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - INVPHI * (b - a);
                    f1 = probe(x1, &mut out);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + INVPHI * (b - a);
                    f2 = probe(x2, &mut out);
                }
            }
            out
        })
        .collect();
    candidates.extend(refined);

    // A segment along the diameter is feasible with perimeter 2·diameter;
    // its orientation is generally off-grid, so add it explicitly.
    if objective == Objective::Perimeter {
        let (i, j, _) = p.diameter();
        let u = p.vertex(j) - p.vertex(i);
        let theta = u.y.atan2(u.x).rem_euclid(std::f64::consts::FRAC_PI_2);
        candidates.push(AngleCandidate {
            theta,
            solution: RectangleSolution::new(
                p.vertex(i),
                u,
                Vec2::new(0.0, 0.0),
                Method::Oracle,
                p.scale(),
            ),
        });
    }

    let evaluations: usize = candidates.iter().map(|c| c.solution.meta.evaluations).sum();
    let best = candidates
        .into_iter()
        .reduce(|acc, c| {
            let (a, b) = (acc.solution.value(objective), c.solution.value(objective));
            if b > a || (b == a && c.theta < acc.theta) {
                c
            } else {
                acc
            }
        })
        .unwrap();
    let stats = SolveStats {
        evaluations,
        ..best.solution.meta
    };
    SweepResult {
        theta: best.theta,
        best: best.solution.with_stats(stats),
        dtheta,
        lower_bound: true,
    }
}

/// Local sweep over `[theta0 − halfwidth, theta0 + halfwidth]`: a fine grid
/// plus golden refinement, returning the best candidate. Used to cross-check
/// another solver's answer two-sidedly at its own orientation.
pub fn refine_around(
    p: &ConvexPolygon,
    theta0: f64,
    halfwidth: f64,
    objective: Objective,
) -> RectangleSolution {
    assert!(halfwidth > 0.0);
    let m = 32usize;
    let at = |k: usize| theta0 - halfwidth + 2.0 * halfwidth * (k as f64 / m as f64);
    let mut cands: Vec<AngleCandidate> = (0..=m)
        .into_par_iter()
        .map(|k| solve_angle(p, at(k), objective))
        .collect();
    let best_k = (0..=m)
        .max_by(|&i, &j| {
            let (a, b) = (
                cands[i].solution.value(objective),
                cands[j].solution.value(objective),
            );
            a.partial_cmp(&b).unwrap().then(j.cmp(&i))
        })
        .unwrap();
    let (mut a, mut b) = (at(best_k.saturating_sub(1)), at((best_k + 1).min(m)));
    let probe = |theta: f64, out: &mut Vec<AngleCandidate>| -> f64 {
        let c = solve_angle(p, theta, objective);
        let v = c.solution.value(objective);
        out.push(c);
        v
    };
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = probe(x1, &mut cands);
    let mut f2 = probe(x2, &mut cands);
    let mut guard = 0;
    while b - a > 1e-12 && guard < 150 {
        guard += 1;
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = probe(x1, &mut cands);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = probe(x2, &mut cands);
        }
    }
    cands
        .into_iter()
        .reduce(|acc, c| {
            let (a, b) = (acc.solution.value(objective), c.solution.value(objective));
            if b > a || (b == a && c.theta < acc.theta) {
                c
            } else {
                acc
            }
        })
        .unwrap()
        .solution
}
