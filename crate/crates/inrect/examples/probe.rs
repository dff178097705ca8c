//! TEMP: compare bound stages against solved values on one hard case.

use inrect::exact::ExactSolver;
use inrect::polygen::random_convex;
use inrect::simplex_opt::{self, area_upper_bound, max_area_on_simplex};
use inrect::solution::Objective;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC01);
    let mut poly = None;
    for case in 0..3 {
        let n = rng.gen_range(4..=12usize);
        let p = random_convex(n, &mut rng);
        if case == 2 {
            poly = Some(p);
        }
    }
    let poly = poly.unwrap();
    let solver = ExactSolver::new(&poly).unwrap();
    let opt = solver.solve(Objective::Area);
    let floor = opt.area * opt.area;
    println!("n=9 case#2: sims {}  opt area^2 {:.6}", solver.simplices().len(), floor);

    // Rank by quick bound, inspect the top slice around/above the floor.
    let mut idx: Vec<usize> = (0..solver.simplices().len()).collect();
    let qb: Vec<f64> = solver
        .simplices()
        .iter()
        .map(|s| simplex_opt::quick_bound(s, Objective::Area))
        .collect();
    idx.sort_by(|&a, &b| qb[b].partial_cmp(&qb[a]).unwrap());

    let t0 = std::time::Instant::now();
    let mut acc = 0.0f64;
    for &i in idx.iter().take(4000) {
        acc += simplex_opt::entry_bound(&solver.simplices()[i], Objective::Area);
    }
    println!("entry_bound:      {:?} for 4000 (acc {acc:.3})", t0.elapsed());
    let t0 = std::time::Instant::now();
    let mut acc = 0.0f64;
    for &i in idx.iter().take(4000) {
        acc += area_upper_bound(&solver.simplices()[i]);
    }
    println!("area_upper_bound: {:?} for 4000 (acc {acc:.3})", t0.elapsed());
    let mut ratios = Vec::new();
    let mut gap_entry = Vec::new();
    let mut gap_q = Vec::new();
    let mut survive_entry = 0usize;
    let mut survive_q = 0usize;
    for &i in idx.iter().take(4000) {
        let s = &solver.simplices()[i];
        let e = simplex_opt::entry_bound(s, Objective::Area);
        let q = area_upper_bound(s);
        if e >= floor {
            survive_entry += 1;
        }
        if q >= floor {
            survive_q += 1;
        }
        ratios.push(q / e.max(1e-300));
        if e >= floor {
            let t = max_area_on_simplex(s).unwrap().value;
            gap_entry.push(e / floor);
            gap_q.push((q / floor, t / floor));
        }
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |v: &Vec<f64>, q: f64| v[((v.len() - 1) as f64 * q) as usize];
    println!(
        "q/entry ratio over top4000: min {:.4} p10 {:.4} p50 {:.4} p90 {:.4} max {:.4}",
        ratios[0],
        pick(&ratios, 0.1),
        pick(&ratios, 0.5),
        pick(&ratios, 0.9),
        pick(&ratios, 1.0)
    );
    println!("entry-survivors {survive_entry}  q-survivors {survive_q}");
    use std::sync::atomic::Ordering::Relaxed;
    println!(
        "stationary_table: singular {} accept {} reject {} fail {}",
        inrect::simplex_opt::counters::Q_FAIL.load(Relaxed),
        inrect::simplex_opt::counters::Q_ACCEPT.load(Relaxed),
        inrect::simplex_opt::counters::Q_REJECT.load(Relaxed),
        inrect::simplex_opt::counters::Q_FAIL.load(Relaxed)
    );
    let mut worst = gap_q.clone();
    worst.sort_by(|a, b| (a.0 - a.1).partial_cmp(&(b.0 - b.1)).unwrap());
    for (q, t) in worst.iter().rev().take(8) {
        println!("  biggest slack: q/floor {:.4}  true/floor {:.4}", q, t);
    }
}
