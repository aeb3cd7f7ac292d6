//! KPP steady states: ball solves, whole-space exhaustion, uniqueness:
//!
//! ```text
//! cargo run --release --example kpp_exhaustion
//! ```
//!
//! With carrying profile `a = 1` the reaction `u^{3-gamma}(a - u)` admits
//! the constant steady state 1 on the whole space. The example descends to
//! the maximal steady state on balls of doubling radius until consecutive
//! stages agree on an inner window, then cross-checks uniqueness on a fixed
//! ball by approaching the steady state from two supersolution levels above
//! and from a small bump below.

use infinilab::grid::{Sampler, VectorSampler};
use infinilab::kpp::{solve_whole_space, uniqueness_probe, KppConfig, KppProblem};

fn main() {
    let problem = KppProblem {
        dim: 1,
        gamma: 0.0,
        drift: VectorSampler::zero(),
        a: Sampler::constant(1.0),
        a_sup: 1.0,
        a_abs_sup: 1.0,
    };
    // The ascending run of the uniqueness probe creeps up through many small
    // monotone steps, so give the fixed-point iteration a deeper outer loop.
    let mut cfg = KppConfig::default();
    cfg.solver.outer_cap = 2000;

    let run = solve_whole_space(&problem, 0.25, 2.0, &cfg).expect("whole-space run");
    println!("whole-space exhaustion, gamma = 0, a = 1, h = 0.25");
    println!();
    println!("{:>8} {:>12} {:>12}", "radius", "sup", "inner gap");
    for s in &run.stages {
        match s.inner_gap {
            Some(g) => println!("{:>8} {:>12.8} {:>12.3e}", s.radius, s.sup, g),
            None => println!("{:>8} {:>12.8} {:>12}", s.radius, s.sup, "-"),
        }
    }
    let (lo, hi) = run.field.interior_min_max();
    println!();
    println!(
        "settled: {}   final field range [{lo:.8}, {hi:.8}]",
        run.converged
    );

    let report = uniqueness_probe(&problem, 8.0, 0.25, 0.15, 0.5, 0.5, &cfg).expect("probe");
    println!();
    println!("uniqueness probe on the ball of radius 8:");
    println!(
        "limits from level 1.0 / level 1.9 / bump:  sups {:.8} / {:.8} / {:.8}",
        report.sups[0], report.sups[1], report.sups[2]
    );
    println!(
        "all converged: {}   max pairwise gap on |x| <= 4: {:.3e}",
        report.outcomes_ok.iter().all(|&b| b),
        report.max_gap
    );
}
