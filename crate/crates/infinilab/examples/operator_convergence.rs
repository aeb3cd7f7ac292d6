//! Discretization error of the wide-stencil operator against closed-form
//! radial profiles, under grid refinement:
//!
//! ```text
//! cargo run --release --example operator_convergence
//! ```
//!
//! For each profile and each gamma the sup error over an annulus should
//! shrink as the spacing halves; the last column is the finest error
//! relative to the size of the exact values.

use std::sync::Arc;

use infinilab::grid::{build_mask, sample, Grid, Sampler, Shape, VectorSampler};
use infinilab::operator::OperatorEngine;
use infinilab::oracles::{l_radial, RadialProfile};

fn sup_and_scale(profile: &RadialProfile, gamma: f64, h: f64) -> (f64, f64) {
    let shape = Shape::Annulus {
        center: [0.0; 3],
        inner: 0.5,
        outer: 2.0,
    };
    let grid = Grid::covering(&shape, 1, h, 1).expect("grid");
    let mask: Arc<_> = build_mask(grid, shape).expect("mask");
    let p = profile.clone();
    let u = Sampler::radial("profile", [0.0; 3], move |r| p.value(r));
    let engine =
        OperatorEngine::build(&mask, gamma, &VectorSampler::zero(), Some(&u)).expect("engine");
    let field = sample(&u, &mask).expect("sample");
    let scales = engine.scales_for(field.oscillation());

    let (mut sup, mut scale) = (0.0f64, 0.0f64);
    for j in 0..engine.n_interior() {
        let r = engine.node_position(j)[0].abs();
        let exact = l_radial(gamma, profile.d1(r), profile.d2(r), 0.0);
        let got = engine.eval_node(field.values(), j, &scales).l_value;
        sup = sup.max((got - exact).abs());
        scale = scale.max(exact.abs());
    }
    (sup, scale)
}

fn main() {
    let profiles: Vec<(&str, RadialProfile)> = vec![
        ("power 4/3", RadialProfile::Power { alpha: 4.0 / 3.0 }),
        ("exponential", RadialProfile::Exponential { a: 1.0, r0: 2.0 }),
        (
            "gaussian",
            RadialProfile::Gaussian {
                k: 1.0,
                r_outer: 2.0,
            },
        ),
        ("bump", RadialProfile::Bump { eps: 0.4 }),
        ("rational decay", RadialProfile::RationalDecay),
    ];
    let hs = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];

    println!("sup |L_h u - L u| on the annulus 0.5 <= |x| <= 2 (one dimension)");
    println!();
    println!(
        "{:<16} {:>5}   {:>11} {:>11} {:>11}   {:>9}",
        "profile", "gamma", "h = 1/8", "h = 1/16", "h = 1/32", "final rel"
    );
    for (name, profile) in &profiles {
        for gamma in [0.0, 1.0, 2.0] {
            let runs: Vec<(f64, f64)> = hs
                .iter()
                .map(|&h| sup_and_scale(profile, gamma, h))
                .collect();
            let rel = runs[2].0 / runs[2].1.max(1e-300);
            println!(
                "{:<16} {:>5}   {:>11.3e} {:>11.3e} {:>11.3e}   {:>9.2e}",
                name, gamma, runs[0].0, runs[1].0, runs[2].0, rel
            );
        }
    }
}
