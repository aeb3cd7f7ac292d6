//! Numerical laboratory for the degenerate elliptic operator
//!
//! ```text
//!     L u = D_inf^g u + q(x) . grad(u) |grad(u)|^(2-g),    g in [0, 2],
//! ```
//!
//! where `D_inf^g u = |grad(u)|^(-g) <grad(u), D2u grad(u)>` interpolates
//! between the normalized (g = 2) and unnormalized (g = 0) infinity
//! Laplacians. The crate discretizes `L` with a monotone wide-stencil scheme,
//! solves Dirichlet problems by parabolic relaxation, computes Dirichlet
//! principal eigenvalues by feasibility bisection, runs KPP-type steady-state
//! iterations on balls and on exhaustions of the whole space, and checks
//! Liouville-type rigidity claims with discrete certificates.
//!
//! Module map:
//! - [`grid`]: lattices, shapes, node masks, samplers, scalar fields;
//! - [`oracles`]: closed-form radial profiles with exact `L`-values, used to
//!   validate the discretization against independent calculus;
//! - [`operator`]: the wide-stencil discretization of `L` and reaction terms;
//! - [`solver`]: parabolic relaxation and monotone source iteration;
//! - [`eigen`]: principal eigenvalues, maximum-principle probes, explicit
//!   eigenvalue upper bounds;
//! - [`kpp`]: reaction profiles, subsolution certificates, ball and
//!   whole-space steady states, uniqueness and nonexistence probes;
//! - [`liouville`]: certificate sweeps and decay experiments for rigidity
//!   statements;
//! - [`config`], [`driver`]: TOML-configured runs with CSV/JSON artifacts.

pub mod config;
pub mod driver;
pub mod eigen;
pub mod grid;
pub mod kpp;
pub mod liouville;
pub mod operator;
pub mod oracles;
pub mod solver;
