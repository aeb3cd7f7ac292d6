//! Principal Dirichlet eigenvalue on the unit interval:
//!
//! ```text
//! cargo run --release --example eigen_interval
//! ```
//!
//! Brackets the principal eigenvalue of the normalized operator
//! (gamma = 2) on (-1, 1) by bisecting on the sign structure of the forced
//! problems `L u + (c + lambda)|u|^{2-gamma} u = -1`, compares against the
//! exact interval value pi^2 / 4, and then demonstrates the exact shift law:
//! replacing `c` by `c - t` moves the whole bracket up by `t`.

use std::sync::Arc;

use infinilab::eigen::{principal_eigenvalue, EigenConfig, Feasibility};
use infinilab::grid::{build_mask, Grid, Sampler, Shape, VectorSampler};
use infinilab::operator::OperatorEngine;

fn main() {
    let shape = Shape::Ball {
        center: [0.0; 3],
        radius: 1.0,
    };
    let grid = Grid::covering(&shape, 1, 1.0 / 32.0, 1).expect("grid");
    let mask: Arc<_> = build_mask(grid, shape).expect("mask");
    let zero = Sampler::zero();
    let engine =
        OperatorEngine::build(&mask, 2.0, &VectorSampler::zero(), Some(&zero)).expect("engine");

    let cfg = EigenConfig::default();
    let result = principal_eigenvalue(&engine, &zero, &cfg).expect("eigenvalue");

    let exact = std::f64::consts::PI * std::f64::consts::PI / 4.0;
    println!("principal eigenvalue on (-1, 1), gamma = 2, h = 1/32");
    println!();
    println!(
        "bracket   [{:.6}, {:.6}]   width {:.4}",
        result.lower,
        result.upper,
        result.width()
    );
    println!("exact     {exact:.6}  (pi^2 / 4)");
    println!(
        "contained {}   probes used {}",
        result.lower <= exact && exact <= result.upper,
        result.probes.len()
    );
    println!();
    println!("probe trail:");
    println!("{:>12} {:>12} {:>10}", "lambda", "verdict", "sweeps");
    for p in &result.probes {
        let verdict = match p.verdict {
            Feasibility::Feasible(_) => "feasible",
            Feasibility::Infeasible(_) => "infeasible",
            Feasibility::Undecided(_) => "undecided",
        };
        println!("{:>12.6} {:>12} {:>10}", p.lambda, verdict, p.sweeps);
    }

    // Shift law: the eigenvalue of the potential c - t is the eigenvalue of
    // c plus t, exactly, because the forced problems only see c + lambda.
    let t = 0.7;
    let shifted_c = Sampler::constant(-t);
    let shifted = principal_eigenvalue(&engine, &shifted_c, &cfg).expect("shifted eigenvalue");
    println!();
    println!("shift law with c = -{t}:");
    println!(
        "shifted bracket [{:.6}, {:.6}]  vs  base + {t} = [{:.6}, {:.6}]",
        shifted.lower,
        shifted.upper,
        result.lower + t,
        result.upper + t
    );
    println!(
        "midpoint discrepancy {:.2e}",
        (shifted.mid() - (result.mid() + t)).abs()
    );
}
