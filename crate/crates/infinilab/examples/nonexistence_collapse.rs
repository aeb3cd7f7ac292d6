//! Nonexistence under a nonpositive carrying profile:
//!
//! ```text
//! cargo run --release --example nonexistence_collapse
//! ```
//!
//! When the carrying profile `a` is nonpositive everywhere, the reaction
//! `u^{3-gamma}(a(x) - u)` pushes every positive level down, so no positive
//! bounded steady state can exist. The check certifies the sign condition on
//! the envelope and then flows the constant level 1 down until its sup drops
//! below the target.

use infinilab::grid::{Sampler, VectorSampler};
use infinilab::kpp::{nonexistence_check, KppConfig, KppProblem};

fn main() {
    let problem = KppProblem {
        dim: 1,
        gamma: 0.0,
        drift: VectorSampler::zero(),
        a: Sampler::radial("-r^2/(1+r^2)", [0.0; 3], |r| {
            -(r * r) / (1.0 + r * r)
        }),
        a_sup: 0.0,
        a_abs_sup: 1.0,
    };
    let report = nonexistence_check(
        &problem,
        4.0,
        1.0 / 8.0,
        1.0,
        1e-3,
        &KppConfig::default(),
    )
    .expect("nonexistence check");

    println!("carrying profile a = -|x|^2 / (1 + |x|^2) on the ball of radius 4, gamma = 0");
    println!();
    println!(
        "envelope max     {:.3e}  (nonpositive certifies downward pressure)",
        report.envelope_max
    );
    println!("collapsed        {}", report.collapsed);
    println!("certified        {}", report.certified);
    println!("final sup        {:.3e}", report.final_sup);
    println!("sweeps           {}", report.sweeps);
}
