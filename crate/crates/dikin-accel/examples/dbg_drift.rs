use dikin_accel::model::{random_dense_lp, RandomLpSpec};
use dikin_accel::solver::{solve, Algorithm, SolveStatus, SolverConfig};

fn main() {
    // criterion-2 class at eps 1e-7: check worst relative primal residual
    let mut worst = 0.0f64;
    let mut nonopt = 0;
    for seed in 0..50u64 {
        let (m, n) = (3 + (seed % 4) as usize, 7 + (seed % 6) as usize);
        let (lp, x0) = random_dense_lp(&RandomLpSpec::new(m, n, seed)).unwrap();
        let cfg = SolverConfig {
            algorithm: Algorithm::Gafs,
            alpha: 0.55,
            beta: 0.1,
            epsilon: 1e-7,
            ..Default::default()
        };
        let out = solve(&lp, Some(&x0), &cfg).unwrap();
        if out.status != SolveStatus::Optimal {
            nonopt += 1;
            println!("seed {seed}: {:?} {:?}", out.status, out.failure);
            continue;
        }
        let b_norm = lp.b.dot(&lp.b).sqrt();
        let w = out.trace.iter().map(|r| r.primal_residual / (1.0 + b_norm)).fold(0.0f64, f64::max);
        worst = worst.max(w);
    }
    println!("C2 class: worst primres ratio {worst:.3e} (bound 1e-7), non-optimal {nonopt}");

    // criterion-4 instance at eps 1e-4
    for seed in [3u64, 4, 7] {
        let (lp, x0) = random_dense_lp(&RandomLpSpec::new(10, 20, seed)).unwrap();
        let cfg = SolverConfig {
            algorithm: Algorithm::Gafs,
            alpha: 0.55,
            beta: 0.1,
            epsilon: 1e-4,
            ..Default::default()
        };
        let out = solve(&lp, Some(&x0), &cfg).unwrap();
        let b_norm = lp.b.dot(&lp.b).sqrt();
        let w = out.trace.iter().map(|r| r.primal_residual / (1.0 + b_norm)).fold(0.0f64, f64::max);
        println!("(10,20) seed {seed} @1e-4: {:?} iters {} gap {:.2e} primres {w:.2e}", out.status, out.iterations, out.final_gap);
    }
}
