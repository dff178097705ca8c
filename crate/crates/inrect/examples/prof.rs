//! Ad-hoc profiling harness (not shipped).

use inrect::exact::ExactSolver;
use inrect::polygen::{random_convex, regular_ngon};
use inrect::solution::Objective;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let t_all = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC01);
    let mut total_build = 0.0;
    let mut total_solve = 0.0;
    for case in 0..60 {
        let (label, p) = if case < 50 {
            let n = rng.gen_range(4..=12usize);
            (format!("random n={n} #{case}"), random_convex(n, &mut rng))
        } else {
            let n = case - 50 + 3;
            (format!("regular n={n}"), regular_ngon(n, 1.0))
        };
        let t0 = Instant::now();
        let solver = ExactSolver::new(&p).expect("build");
        let tb = t0.elapsed().as_secs_f64();
        total_build += tb;
        let mut line = format!("{label}: sims {} build {tb:.2}s", solver.simplices().len());
        for obj in [Objective::Area, Objective::Perimeter] {
            let t1 = Instant::now();
            let sol = solver.solve(obj);
            let dt = t1.elapsed().as_secs_f64();
            total_solve += dt;
            line += &format!(" | {obj:?} {dt:.2}s solved {}", sol.meta.faces_solved);
        }
        eprintln!("{line}");
    }
    eprintln!(
        "TOTAL {:.2}s (build {total_build:.2}s solve {total_solve:.2}s)",
        t_all.elapsed().as_secs_f64()
    );
}
