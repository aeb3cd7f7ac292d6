//! Steady-state solvers: damped parabolic relaxation and a shifted
//! source-iteration for semilinear problems.
//!
//! [`relax_to_steady`] integrates `u_t = L u + f(x, u) - rhs` with explicit
//! Jacobi sweeps and a per-node step `dt_x = safety / (a_x + Lip f)`, where
//! `a_x` bounds the scheme's sensitivity at the node (so each update stays a
//! convex combination plus forcing). Convergence is declared on the sup norm
//! of the residual; runaway fields are reported as blowup, which the
//! eigenvalue feasibility probes use as a signal rather than an error.
//!
//! [`shifted_fixed_point`] solves `L u + f(x, u) = rhs` by the damped outer
//! iteration `L v - sigma v = rhs - f(x, u_k) - sigma u_k`, which is order
//! preserving once `sigma` dominates the Lipschitz constant of `f` on the
//! active range. Started from a supersolution it descends monotonically;
//! the adaptive mode re-estimates `sigma` from the current iterate's range so
//! that collapsing solutions keep contracting at a fixed rate instead of
//! stalling on a vanishing reaction.

use rayon::prelude::*;

use crate::grid::{Sampler, ScalarField};
use crate::operator::{OperatorEngine, Reaction};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Sup-norm residual target.
    pub tol_residual: f64,
    /// Hard cap on relaxation sweeps per solve.
    pub max_sweeps: usize,
    /// Fraction of the stability limit used for the explicit step; must be
    /// below 1 to keep updates convex combinations.
    pub cfl_safety: f64,
    /// Shift for the outer iteration; 0 selects the adaptive estimate.
    pub sigma: f64,
    /// Sup-norm level that classifies a run as blown up.
    pub blowup_cap: f64,
    /// Cap on outer iterations of the shifted fixed point.
    pub outer_cap: usize,
    /// Interior size from which sweeps use the thread pool. The parallel and
    /// serial paths compute identical bytes.
    pub parallel_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_residual: 1e-8,
            max_sweeps: 2_000_000,
            cfl_safety: 0.45,
            sigma: 0.0,
            blowup_cap: 1e6,
            outer_cap: 400,
            parallel_threshold: 4096,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    /// Residual reached the tolerance.
    Converged,
    /// Sweep budget exhausted first.
    MaxSweeps,
    /// The field or residual lost finiteness (numerical breakdown).
    Diverged,
    /// Sup norm passed the blowup cap.
    Blowup,
    /// A monitor asked to stop.
    Halted,
}

/// Per-sweep summary handed to monitors and kept (strided) in the report.
#[derive(Copy, Clone, Debug)]
pub struct SweepStats {
    pub sweep: usize,
    pub residual_sup: f64,
    pub sup_abs: f64,
    pub u_min: f64,
    pub u_max: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SolveControl {
    Continue,
    Halt,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    pub sweeps: usize,
    pub final_residual: f64,
    /// Strided trajectory: dense at the head, geometrically thinned later,
    /// final state always included.
    pub history: Vec<SweepStats>,
}

const HISTORY_CAP: usize = 4096;

struct HistoryKeeper {
    samples: Vec<SweepStats>,
    stride: usize,
}

impl HistoryKeeper {
    fn new() -> Self {
        HistoryKeeper {
            samples: Vec::new(),
            stride: 1,
        }
    }
    fn push(&mut self, s: SweepStats) {
        if s.sweep % self.stride != 0 {
            return;
        }
        self.samples.push(s);
        if self.samples.len() >= HISTORY_CAP {
            let mut keep = Vec::with_capacity(HISTORY_CAP / 2);
            for (i, v) in self.samples.drain(..).enumerate() {
                if i % 2 == 0 {
                    keep.push(v);
                }
            }
            self.samples = keep;
            self.stride *= 2;
        }
    }
    fn finish(mut self, last: SweepStats) -> Vec<SweepStats> {
        if self.samples.last().map(|s| s.sweep) != Some(last.sweep) {
            self.samples.push(last);
        }
        self.samples
    }
}

/// Relaxes `u_t = L u + f(x, u) - rhs` to steady state. `rhs` is indexed by
/// interior position. Boundary values of `start` are kept verbatim.
pub fn relax_to_steady(
    engine: &OperatorEngine,
    start: &ScalarField,
    reaction: &dyn Reaction,
    rhs: &[f64],
    config: &SolverConfig,
) -> (ScalarField, SolveReport) {
    relax_with_monitor(engine, start, reaction, rhs, config, &mut |_| {
        SolveControl::Continue
    })
}

/// [`relax_to_steady`] with a per-sweep monitor that may halt the run early
/// (outcome [`SolveOutcome::Halted`]). The monitor sees every sweep.
pub fn relax_with_monitor(
    engine: &OperatorEngine,
    start: &ScalarField,
    reaction: &dyn Reaction,
    rhs: &[f64],
    config: &SolverConfig,
    monitor: &mut dyn FnMut(&SweepStats) -> SolveControl,
) -> (ScalarField, SolveReport) {
    let mask = engine.mask().clone();
    let grid = mask.grid().clone();
    let dim = grid.dim;
    let n_int = engine.n_interior();
    assert_eq!(rhs.len(), n_int, "rhs must be indexed by interior position");

    let mut cur = start.values().to_vec();
    let mut next = cur.clone();
    let mut upd: Vec<(f64, f64)> = vec![(0.0, 0.0); n_int];

    // Boundary nodes never change; fold their range in once.
    let mut bd_min = f64::INFINITY;
    let mut bd_max = f64::NEG_INFINITY;
    let mut bd_abs: f64 = 0.0;
    for &b in mask.boundary() {
        let v = cur[b as usize];
        bd_min = bd_min.min(v);
        bd_max = bd_max.max(v);
        bd_abs = bd_abs.max(v.abs());
    }

    let mut lo = bd_min;
    let mut hi = bd_max;
    for &i in mask.interior() {
        let v = cur[i as usize];
        lo = lo.min(v);
        hi = hi.max(v);
    }

    let cfl = config.cfl_safety;
    let rhs_sup = rhs.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut history = HistoryKeeper::new();
    let mut outcome = SolveOutcome::MaxSweeps;
    let mut last = SweepStats {
        sweep: 0,
        residual_sup: f64::INFINITY,
        sup_abs: hi.abs().max(lo.abs()),
        u_min: lo,
        u_max: hi,
    };
    let mut sweeps_done = 0usize;
    for m in 1..=config.max_sweeps {
        let scales = engine.scales_for_forced((hi - lo).max(0.0), rhs_sup);
        let lip = reaction
            .lipschitz(lo.min(0.0), hi.max(0.0))
            .min(1e300)
            .max(0.0);

        let step = |j: usize| -> (f64, f64) {
            let ev = engine.eval_node(&cur, j, &scales);
            let idx = engine.node_index(j);
            let u = cur[idx];
            let x = &engine.node_position(j)[..dim];
            let r = ev.l_value + reaction.eval(x, u) - rhs[j];
            let dt = cfl / (ev.stiff + lip + 1e-300);
            (u + dt * r, r)
        };
        if n_int >= config.parallel_threshold {
            upd.par_iter_mut()
                .enumerate()
                .for_each(|(j, slot)| *slot = step(j));
        } else {
            for (j, slot) in upd.iter_mut().enumerate() {
                *slot = step(j);
            }
        }

        let mut res_sup: f64 = 0.0;
        let mut nlo = bd_min;
        let mut nhi = bd_max;
        for (j, &(v, r)) in upd.iter().enumerate() {
            next[engine.node_index(j)] = v;
            res_sup = res_sup.max(r.abs());
            nlo = nlo.min(v);
            nhi = nhi.max(v);
        }
        std::mem::swap(&mut cur, &mut next);
        lo = nlo;
        hi = nhi;
        sweeps_done = m;

        let stats = SweepStats {
            sweep: m,
            residual_sup: res_sup,
            sup_abs: bd_abs.max(nlo.abs()).max(nhi.abs()),
            u_min: nlo,
            u_max: nhi,
        };
        last = stats;
        history.push(stats);

        if !res_sup.is_finite() || !stats.sup_abs.is_finite() {
            outcome = SolveOutcome::Diverged;
            break;
        }
        if res_sup <= config.tol_residual {
            outcome = SolveOutcome::Converged;
            break;
        }
        if stats.sup_abs > config.blowup_cap {
            outcome = SolveOutcome::Blowup;
            break;
        }
        if monitor(&stats) == SolveControl::Halt {
            outcome = SolveOutcome::Halted;
            break;
        }
    }

    let field = ScalarField::from_values(&mask, cur);
    let field = match start.boundary_data() {
        Some(g) => field.with_boundary_data(g.clone()),
        None => field,
    };
    let report = SolveReport {
        outcome,
        sweeps: sweeps_done,
        final_residual: last.residual_sup,
        history: history.finish(last),
    };
    (field, report)
}

/// Shift mode for the outer iteration.
#[derive(Copy, Clone, Debug)]
pub enum SigmaMode {
    Fixed(f64),
    /// `sigma_k = (1 + rel_margin) * Lip(f on the iterate's range)`, floored
    /// away from zero.
    Auto { rel_margin: f64 },
}

impl SigmaMode {
    pub fn from_config(sigma: f64) -> Self {
        if sigma > 0.0 {
            SigmaMode::Fixed(sigma)
        } else {
            SigmaMode::Auto { rel_margin: 0.25 }
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointOpts {
    pub sigma: SigmaMode,
    /// Require each outer step to stay below the previous iterate (up to
    /// `10 * tol`); violations abort with `NonMonotoneStep`.
    pub enforce_descent: bool,
    /// Clamp iterates from below (positivity preservation).
    pub clamp_floor: Option<f64>,
    /// Stop successfully once the interior sup falls below this level.
    pub stop_when_sup_below: Option<f64>,
}

impl Default for FixedPointOpts {
    fn default() -> Self {
        FixedPointOpts {
            sigma: SigmaMode::Auto { rel_margin: 0.25 },
            enforce_descent: false,
            clamp_floor: None,
            stop_when_sup_below: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FixedPointOutcome {
    /// Outer steps fell below the tolerance.
    Converged,
    /// The iterate's sup passed `stop_when_sup_below`.
    CollapsedBelowTarget,
    /// Descent was requested and an outer step rose by more than allowed.
    NonMonotoneStep { iter: usize, rise: f64 },
    /// The iterates passed the blowup cap.
    Blowup,
    OuterCapReached,
    /// An inner relaxation failed (diverged or hit its sweep cap).
    InnerTrouble(SolveOutcome),
}

#[derive(Clone, Debug)]
pub struct FixedPointReport {
    pub outcome: FixedPointOutcome,
    pub outer_iters: usize,
    pub total_sweeps: usize,
    /// Sup norm of the last outer step.
    pub last_step: f64,
    pub sigma_last: f64,
    /// Residual of the original semilinear equation at the final iterate.
    pub true_residual_sup: f64,
    /// Sup norm of each outer step.
    pub step_history: Vec<f64>,
}

struct ShiftReaction {
    sigma: f64,
}

impl Reaction for ShiftReaction {
    #[inline]
    fn eval(&self, _x: &[f64], s: f64) -> f64 {
        -self.sigma * s
    }
    fn lipschitz(&self, _lo: f64, _hi: f64) -> f64 {
        self.sigma
    }
}

/// Solves `L u + f(x, u) = rhs` by the damped outer iteration described in
/// the module docs. `start` supplies both the first iterate and the pinned
/// boundary values.
pub fn shifted_fixed_point(
    engine: &OperatorEngine,
    reaction: &dyn Reaction,
    start: ScalarField,
    rhs: &[f64],
    opts: &FixedPointOpts,
    config: &SolverConfig,
) -> (ScalarField, FixedPointReport) {
    let n_int = engine.n_interior();
    assert_eq!(rhs.len(), n_int, "rhs must be indexed by interior position");
    let dim = engine.mask().grid().dim;

    let mut u = start;
    let mut inner_rhs = vec![0.0; n_int];
    let mut step_history = Vec::new();
    let mut total_sweeps = 0usize;
    let mut sigma_last = 0.0;
    let mut outcome = FixedPointOutcome::OuterCapReached;
    let mut last_step = f64::INFINITY;
    let mut outer_done = 0usize;

    for k in 1..=config.outer_cap {
        outer_done = k;
        let (lo, hi) = u.interior_min_max();
        let sup = lo.abs().max(hi.abs());
        if sup > config.blowup_cap {
            outcome = FixedPointOutcome::Blowup;
            break;
        }
        if let Some(target) = opts.stop_when_sup_below {
            if sup <= target {
                outcome = FixedPointOutcome::CollapsedBelowTarget;
                break;
            }
        }

        let sigma = match opts.sigma {
            SigmaMode::Fixed(s) => s,
            SigmaMode::Auto { rel_margin } => {
                let lip = reaction.lipschitz(lo.min(0.0), hi.max(0.0)).min(1e300);
                ((1.0 + rel_margin) * lip).max(1e-12)
            }
        };
        sigma_last = sigma;

        for j in 0..n_int {
            let idx = engine.node_index(j);
            let x = &engine.node_position(j)[..dim];
            let uk = u.get(idx);
            inner_rhs[j] = rhs[j] - reaction.eval(x, uk) - sigma * uk;
        }

        let shift = ShiftReaction { sigma };
        let (mut v, inner) = relax_to_steady(engine, &u, &shift, &inner_rhs, config);
        total_sweeps += inner.sweeps;
        match inner.outcome {
            SolveOutcome::Converged => {}
            SolveOutcome::Blowup => {
                outcome = FixedPointOutcome::Blowup;
                u = v;
                break;
            }
            other => {
                outcome = FixedPointOutcome::InnerTrouble(other);
                u = v;
                break;
            }
        }

        if let Some(floor) = opts.clamp_floor {
            for &i in engine.mask().interior() {
                let val = &mut v.values_mut()[i as usize];
                if *val < floor {
                    *val = floor;
                }
            }
        }

        let mut step: f64 = 0.0;
        let mut rise: f64 = 0.0;
        for &i in engine.mask().interior() {
            let d = v.get(i as usize) - u.get(i as usize);
            step = step.max(d.abs());
            rise = rise.max(d);
        }
        step_history.push(step);
        last_step = step;

        if opts.enforce_descent && rise > 10.0 * config.tol_residual {
            outcome = FixedPointOutcome::NonMonotoneStep { iter: k, rise };
            u = v;
            break;
        }

        u = v;
        if step <= config.tol_residual {
            outcome = FixedPointOutcome::Converged;
            break;
        }
    }

    // Check the collapse target one last time: the final inner solve may
    // have crossed it.
    if outcome == FixedPointOutcome::OuterCapReached {
        if let Some(target) = opts.stop_when_sup_below {
            let (lo, hi) = u.interior_min_max();
            if lo.abs().max(hi.abs()) <= target {
                outcome = FixedPointOutcome::CollapsedBelowTarget;
            }
        }
    }

    let scales = engine.scales_for(u.oscillation());
    let mut res = vec![0.0; n_int];
    engine.residual_into(u.values(), reaction, rhs, &scales, &mut res);
    let true_residual_sup = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));

    let report = FixedPointReport {
        outcome,
        outer_iters: outer_done,
        total_sweeps,
        last_step,
        sigma_last,
        true_residual_sup,
        step_history,
    };
    (u, report)
}

/// Builds a start field at a constant interior level with boundary data `g`
/// pinned (a common entry state for the iterations above).
pub fn constant_start(
    mask: &std::sync::Arc<crate::grid::DomainMask>,
    level: f64,
    g: &Sampler,
) -> ScalarField {
    let mut f = ScalarField::constant(mask, level);
    f.pin_boundary(g);
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mask, DomainMask, Grid, Sampler, Shape, VectorSampler};
    use crate::operator::{NoReaction, PotentialPower};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn ball_mask_1d(radius: f64, h: f64) -> Arc<DomainMask> {
        let shape = Shape::Ball {
            center: [0.0; 3],
            radius,
        };
        let grid = Grid::covering(&shape, 1, h, 1).unwrap();
        build_mask(grid, shape).unwrap()
    }

    #[test]
    fn normalized_poisson_recovers_parabola() {
        // u'' = -1 on (-1, 1), zero boundary: u = (1 - x^2)/2. The scheme is
        // exact on parabolas, so the relaxed solution matches to solver
        // tolerance.
        let mask = ball_mask_1d(1.0, 1.0 / 32.0);
        let g = Sampler::zero();
        let engine = OperatorEngine::build(&mask, 2.0, &VectorSampler::zero(), Some(&g)).unwrap();
        let start = constant_start(&mask, 0.0, &g);
        let rhs = vec![-1.0; engine.n_interior()];
        let config = SolverConfig::default();
        let (u, report) = relax_to_steady(&engine, &start, &NoReaction, &rhs, &config);
        assert_eq!(report.outcome, SolveOutcome::Converged);
        for &i in mask.interior() {
            let x = mask.grid().node_coords(i as usize)[0];
            assert_abs_diff_eq!(u.get(i as usize), 0.5 * (1.0 - x * x), epsilon = 1e-6);
        }
    }

    #[test]
    fn cubic_absorption_holds_constant_state() {
        // L u - u^3 = -1 with boundary data 1 has the exact solution u = 1
        // (flat field: L u = 0 for g = 0). A perturbed start relaxes back.
        let mask = ball_mask_1d(1.0, 1.0 / 16.0);
        let g = Sampler::constant(1.0);
        let engine = OperatorEngine::build(&mask, 0.0, &VectorSampler::zero(), Some(&g)).unwrap();
        let bump = Sampler::new("start", |x| 1.0 + 0.3 * (1.0 - x[0] * x[0]));
        let mut start = crate::grid::sample(&bump, &mask).unwrap();
        start.pin_boundary(&g);
        let reaction = PotentialPower::new(Sampler::constant(-1.0), 1.0, 3.0);
        let rhs = vec![-1.0; engine.n_interior()];
        let (u, report) = relax_to_steady(&engine, &start, &reaction, &rhs, &SolverConfig::default());
        assert_eq!(report.outcome, SolveOutcome::Converged);
        for &i in mask.interior() {
            assert_abs_diff_eq!(u.get(i as usize), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn forced_growth_flow_separates_feasible_from_blowup() {
        // L u + lambda u^3 = -1, zero data, flow from zero: for lambda well
        // below the principal eigenvalue (about 1.52 on this interval) the
        // flow climbs to the minimal positive solution; far above it the
        // field runs away and the solver reports blowup.
        let mask = ball_mask_1d(1.0, 1.0 / 16.0);
        let g = Sampler::zero();
        let engine = OperatorEngine::build(&mask, 0.0, &VectorSampler::zero(), Some(&g)).unwrap();
        let rhs = vec![-1.0; engine.n_interior()];
        let mut config = SolverConfig::default();
        config.blowup_cap = 1e4;

        let start = constant_start(&mask, 0.0, &g);
        let feasible = PotentialPower::new(Sampler::constant(0.5), 0.5, 3.0);
        let (u, report) = relax_to_steady(&engine, &start, &feasible, &rhs, &config);
        assert_eq!(report.outcome, SolveOutcome::Converged);
        let (lo, hi) = u.interior_min_max();
        assert!(lo > 0.0 && hi < 100.0, "minimal solution in ({lo}, {hi})");

        let infeasible = PotentialPower::new(Sampler::constant(5.0), 5.0, 3.0);
        let (_, report) = relax_to_steady(&engine, &start, &infeasible, &rhs, &config);
        assert_eq!(report.outcome, SolveOutcome::Blowup);
    }

    #[test]
    fn shifted_iteration_matches_linear_absorption_profile() {
        // g = 2: L u - 2u = -2 on (-1, 1) with zero data has the closed form
        // u = 1 - cosh(sqrt(2) x) / cosh(sqrt(2)).
        let mask = ball_mask_1d(1.0, 1.0 / 32.0);
        let g = Sampler::zero();
        let engine = OperatorEngine::build(&mask, 2.0, &VectorSampler::zero(), Some(&g)).unwrap();
        let reaction = PotentialPower::new(Sampler::constant(-2.0), 2.0, 1.0);
        let rhs = vec![-2.0; engine.n_interior()];
        let start = constant_start(&mask, 0.0, &g);
        let (u, report) = shifted_fixed_point(
            &engine,
            &reaction,
            start,
            &rhs,
            &FixedPointOpts::default(),
            &SolverConfig::default(),
        );
        assert_eq!(report.outcome, FixedPointOutcome::Converged);
        assert!(report.true_residual_sup < 1e-6);
        let s2 = 2.0f64.sqrt();
        for &i in mask.interior() {
            let x = mask.grid().node_coords(i as usize)[0];
            let exact = 1.0 - (s2 * x).cosh() / s2.cosh();
            assert_abs_diff_eq!(u.get(i as usize), exact, epsilon = 5e-3);
        }
        // Spot value at the center, pinned from the closed form.
        let mid = mask
            .interior()
            .iter()
            .find(|&&i| mask.grid().node_coords(i as usize)[0].abs() < 1e-12)
            .copied()
            .unwrap();
        assert_abs_diff_eq!(u.get(mid as usize), 0.5409044, epsilon = 5e-3);
    }

    #[test]
    fn descending_iteration_respects_supersolution_start() {
        // KPP-type reaction f = u^3 (1 - u): starting at the carrying level
        // M = 1 the outer iteration must descend monotonically (f(M) = 0).
        let mask = ball_mask_1d(3.0, 1.0 / 8.0);
        let g = Sampler::zero();
        let engine = OperatorEngine::build(&mask, 0.0, &VectorSampler::zero(), Some(&g)).unwrap();
        struct Kpp;
        impl Reaction for Kpp {
            fn eval(&self, _x: &[f64], s: f64) -> f64 {
                s * s * s * (1.0 - s)
            }
            fn lipschitz(&self, lo: f64, hi: f64) -> f64 {
                let m = lo.abs().max(hi.abs()).max(1.0);
                3.0 * m * m + 4.0 * m * m * m
            }
        }
        let rhs = vec![0.0; engine.n_interior()];
        let opts = FixedPointOpts {
            enforce_descent: true,
            clamp_floor: Some(0.0),
            ..FixedPointOpts::default()
        };
        let start = constant_start(&mask, 1.0, &g);
        let mut config = SolverConfig::default();
        config.tol_residual = 1e-7;
        let (u, report) = shifted_fixed_point(&engine, &Kpp, start, &rhs, &opts, &config);
        assert_eq!(report.outcome, FixedPointOutcome::Converged);
        let (lo, hi) = u.interior_min_max();
        assert!(lo >= 0.0);
        assert!(hi <= 1.0 + 1e-6);
        assert!(report.true_residual_sup < 1e-5);
    }

    #[test]
    fn monitor_can_halt_and_reports_say_so() {
        let mask = ball_mask_1d(1.0, 1.0 / 16.0);
        let g = Sampler::zero();
        let engine = OperatorEngine::build(&mask, 2.0, &VectorSampler::zero(), Some(&g)).unwrap();
        let start = constant_start(&mask, 0.0, &g);
        let rhs = vec![-1.0; engine.n_interior()];
        let mut halted_at = 0usize;
        let (_, report) = relax_with_monitor(
            &engine,
            &start,
            &NoReaction,
            &rhs,
            &SolverConfig::default(),
            &mut |s| {
                if s.sweep >= 500 {
                    halted_at = s.sweep;
                    SolveControl::Halt
                } else {
                    SolveControl::Continue
                }
            },
        );
        assert_eq!(report.outcome, SolveOutcome::Halted);
        assert_eq!(report.sweeps, 500);
        assert_eq!(halted_at, 500);
        assert_eq!(report.history.last().unwrap().sweep, 500);
    }

    #[test]
    fn sweep_budget_exhaustion_is_reported() {
        let mask = ball_mask_1d(1.0, 1.0 / 16.0);
        let g = Sampler::zero();
        let engine = OperatorEngine::build(&mask, 2.0, &VectorSampler::zero(), Some(&g)).unwrap();
        let start = constant_start(&mask, 0.0, &g);
        let rhs = vec![-1.0; engine.n_interior()];
        let config = SolverConfig {
            max_sweeps: 37,
            ..SolverConfig::default()
        };
        let (_, report) = relax_to_steady(&engine, &start, &NoReaction, &rhs, &config);
        assert_eq!(report.outcome, SolveOutcome::MaxSweeps);
        assert_eq!(report.sweeps, 37);
        assert_eq!(report.history.last().unwrap().sweep, 37);
    }

    #[test]
    fn parallel_and_serial_sweeps_agree_bitwise() {
        let shape = Shape::Ball {
            center: [0.0; 3],
            radius: 1.0,
        };
        let grid = Grid::covering(&shape, 2, 0.125, 1).unwrap();
        let mask = build_mask(grid, shape).unwrap();
        let g = Sampler::new("rim", |x| x[0] - 0.5 * x[1]);
        let engine = OperatorEngine::build(
            &mask,
            1.0,
            &VectorSampler::constant([0.3, -0.2, 0.0]),
            Some(&g),
        )
        .unwrap();
        let start = constant_start(&mask, 0.0, &g);
        let rhs = vec![-0.5; engine.n_interior()];
        let run = |threshold: usize| {
            let config = SolverConfig {
                max_sweeps: 400,
                parallel_threshold: threshold,
                ..SolverConfig::default()
            };
            let (u, _) = relax_to_steady(&engine, &start, &NoReaction, &rhs, &config);
            u.values().to_vec()
        };
        let serial = run(usize::MAX);
        let parallel = run(1);
        assert_eq!(serial.len(), parallel.len());
        for (a, b) in serial.iter().zip(parallel.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
