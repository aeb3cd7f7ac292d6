//! Certificates behind the constancy (Liouville-type) results:
//!
//! ```text
//! cargo run --release --example rigidity_certificates
//! ```
//!
//! Three experiments:
//!
//! 1. Power-profile margins: `theta = eps (1 + |x|)^alpha` with
//!    `alpha in (-1, 0)` is a positive supersolution of
//!    `L theta = |grad theta|^{4-gamma}` on every annulus, the inequality
//!    driving the constancy theorems at drift growth below the threshold.
//!    The discrete margin must stay positive and match the closed form.
//!
//! 2. Sharpness at the threshold: under the drift `q = 4x/(1+|x|^2)` the
//!    profile `1/(1+|x|^2)` is a bounded nonconstant supersolution, so the
//!    growth bound in the constancy results cannot be improved.
//!
//! 3. Absorption decay: with strong absorption `c u_+^beta` every bounded
//!    seed decays below any positive threshold; the certificate's required
//!    strength comes from a power-profile envelope.

use infinilab::grid::Sampler;
use infinilab::liouville::{
    absorption_decay_experiment, certify_theta_subsolution, sharpness_witness, GrowthEnvelope,
    ThetaConfig,
};
use infinilab::solver::SolverConfig;

fn main() {
    println!("power-profile margins on the annulus 1 <= |x| <= 3 (h = 1/256):");
    println!(
        "{:>8} {:>12} {:>14} {:>12} {:>6}",
        "alpha", "min margin", "vs closed form", "checked", "pass"
    );
    for alpha in [-0.25, -0.5, -0.75] {
        let rep = certify_theta_subsolution(&ThetaConfig {
            dim: 1,
            gamma: 0.0,
            alpha,
            eps: 1.0,
            grad_coeff: 1.0,
            inner: 1.0,
            outer: 3.0,
            h: 1.0 / 256.0,
        })
        .expect("theta certificate");
        println!(
            "{:>8} {:>12.3e} {:>14.2e} {:>12} {:>6}",
            alpha, rep.min_margin, rep.max_deviation, rep.checked, rep.pass
        );
    }

    let witness = sharpness_witness(3.0, 1e-3, 1e-2).expect("sharpness witness");
    println!();
    println!("sharpness witness at drift growth 4 (|x| <= 3, h = 1e-3):");
    println!(
        "residual deviation {:.2e}, max operator value {:.2e} (<= 0), value range {:.4}, pass {}",
        witness.sup_deviation, witness.max_value, witness.value_range, witness.pass
    );

    let env = GrowthEnvelope::for_absorption(0.0, 1.0).expect("envelope");
    let seed = Sampler::radial("bump seed", [0.0; 3], |r| {
        if r < 0.5 {
            (1.0 - (2.0 * r).powi(2)).max(0.0)
        } else {
            0.0
        }
    });
    let rep = absorption_decay_experiment(
        1,
        &env,
        -9.0,
        0.0,
        4.0,
        1.0 / 16.0,
        &seed,
        &[0.2, 0.1, 0.0],
        1e-3,
        &SolverConfig::default(),
    )
    .expect("absorption decay");
    println!();
    println!(
        "absorption decay, beta = 1, c = -9 (required strength {:.2}):",
        rep.certificate.required
    );
    println!("{:>8} {:>16} {:>12}", "kappa", "inner pos. sup", "outcome");
    for s in &rep.stages {
        println!(
            "{:>8} {:>16.3e} {:>12?}",
            s.kappa, s.inner_pos_sup, s.outcome
        );
    }
    println!(
        "final positive mass {:.3e} <= 1e-3: {}",
        rep.final_inner_pos_sup, rep.pass
    );
}
