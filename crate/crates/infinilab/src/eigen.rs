//! Principal (Dirichlet) eigenvalue of `u -> L u + c(x) |u|^{2-g} u` via the
//! solvability dichotomy of the forced problem.
//!
//! For `lambda` below the principal eigenvalue, `L u + (c + lambda) |u|^{2-g} u
//! = -1` with zero boundary data has a minimal positive solution, and the
//! parabolic flow started from zero climbs monotonically to it. Above the
//! eigenvalue the flow runs away. [`principal_eigenvalue`] brackets the
//! crossover by bisection on probe runs of [`solve_forced`].
//!
//! Near the crossover both convergence and runaway are slow (their rates are
//! proportional to the distance from the eigenvalue), so probes classify the
//! *residual trajectory* instead of waiting: once transients die, the sup
//! residual evolves geometrically with a per-window ratio `exp(±delta T)`.
//! A run of consecutive, mutually consistent window ratios on one side of 1
//! decides the probe. Hard outcomes (residual tolerance reached, amplitude
//! past the cap) always take precedence; undecidable probes stop the
//! refinement honestly rather than guessing.

use std::sync::Arc;

use thiserror::Error;

use crate::grid::{
    build_mask, DomainMask, Grid, GridError, MaskError, Sampler, ScalarField, Shape, VectorSampler,
};
use crate::operator::{OperatorEngine, OperatorError, PotentialPower, Reaction};
use crate::solver::{
    constant_start, relax_with_monitor, SolveControl, SolveOutcome, SolverConfig, SweepStats,
};

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("no feasible lower end found down to lambda = {tried}")]
    NoFeasibleFloor { tried: f64 },
    #[error("no infeasible upper end found up to lambda = {tried}")]
    NoInfeasibleCeiling { tried: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Clone, Debug)]
pub struct EigenConfig {
    pub solver: SolverConfig,
    /// Stop refining once the bracket is this narrow.
    pub bracket_tol: f64,
    /// Sweeps per trajectory-measurement window.
    pub window_sweeps: usize,
    /// Relative dead band around ratio 1; window ratios inside it never
    /// classify a probe.
    pub ratio_band: f64,
    /// Consecutive consistent windows required for a classification.
    pub consistent_windows: usize,
    /// Ratio level above which growth counts even before it stabilizes.
    pub strong_ratio: f64,
    /// Hard cap on bisection probes.
    pub max_probes: usize,
    /// Extra sweeps spent polishing the returned eigenfunction candidate.
    pub refine_sweeps: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            solver: SolverConfig::default(),
            bracket_tol: 0.04,
            window_sweeps: 4000,
            ratio_band: 2e-4,
            consistent_windows: 6,
            strong_ratio: 1.2,
            max_probes: 64,
            refine_sweeps: 200_000,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum FeasibleSignal {
    /// The flow reached the residual tolerance.
    ResidualConverged,
    /// The residual contracted geometrically window over window.
    GeometricDecay { ratio: f64 },
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum InfeasibleSignal {
    /// The field passed the blowup cap.
    AmplitudeBlowup,
    /// The residual grew geometrically window over window.
    GeometricGrowth { ratio: f64 },
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Feasibility {
    Feasible(FeasibleSignal),
    Infeasible(InfeasibleSignal),
    /// The run ended (sweep budget, breakdown) without a usable signal.
    Undecided(SolveOutcome),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Feasibility::Infeasible(_))
    }
}

/// Watches the sup-residual trajectory at window edges and classifies its
/// settled geometric behaviour.
struct GrowthClassifier {
    window: usize,
    band: f64,
    strong: f64,
    needed: usize,
    /// Ratios are ignored while the residual sits near the convergence
    /// tolerance, where they are dominated by rounding.
    floor: f64,
    prev: Option<f64>,
    ratios: Vec<f64>,
}

impl GrowthClassifier {
    fn new(cfg: &EigenConfig) -> Self {
        GrowthClassifier {
            window: cfg.window_sweeps.max(1),
            band: cfg.ratio_band,
            strong: cfg.strong_ratio,
            needed: cfg.consistent_windows.max(2),
            floor: cfg.solver.tol_residual * 1e3,
            prev: None,
            ratios: Vec::new(),
        }
    }

    fn observe(&mut self, s: &SweepStats) -> Option<Feasibility> {
        if s.sweep % self.window != 0 {
            return None;
        }
        let r = s.residual_sup;
        let prev = self.prev.replace(r);
        let p = prev?;
        if !(r.is_finite() && r > self.floor && p > self.floor) {
            self.ratios.clear();
            return None;
        }
        self.ratios.push(r / p);
        if self.ratios.len() < self.needed {
            return None;
        }
        let tail = &self.ratios[self.ratios.len() - self.needed..];
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &q in tail {
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if lo >= self.strong {
            return Some(Feasibility::Infeasible(InfeasibleSignal::GeometricGrowth {
                ratio: lo,
            }));
        }
        // Near ratio 1 a verdict needs the ratios themselves to have
        // stabilized; transients drift through the band too fast to qualify.
        let stable = hi <= lo * (1.0 + self.band);
        if stable && lo > 1.0 + self.band {
            return Some(Feasibility::Infeasible(InfeasibleSignal::GeometricGrowth {
                ratio: 0.5 * (lo + hi),
            }));
        }
        if stable && hi < 1.0 - self.band {
            return Some(Feasibility::Feasible(FeasibleSignal::GeometricDecay {
                ratio: 0.5 * (lo + hi),
            }));
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct ForcedRun {
    pub field: ScalarField,
    pub verdict: Feasibility,
    pub sweeps: usize,
    pub final_residual: f64,
}

/// Runs the parabolic flow for `L u + f(x, u) = rhs` from `start` and reports
/// solvability evidence. With `probe` set, settled geometric growth or decay
/// of the residual ends the run early; without it only the hard outcomes
/// (tolerance, cap, budget) apply, which suits extracting the actual field.
pub fn solve_forced(
    engine: &OperatorEngine,
    reaction: &dyn Reaction,
    rhs: &[f64],
    start: &ScalarField,
    probe: bool,
    cfg: &EigenConfig,
) -> ForcedRun {
    let mut classifier = probe.then(|| GrowthClassifier::new(cfg));
    let mut early: Option<Feasibility> = None;
    let (field, report) = relax_with_monitor(
        engine,
        start,
        reaction,
        rhs,
        &cfg.solver,
        &mut |stats| match classifier.as_mut().and_then(|c| c.observe(stats)) {
            Some(v) => {
                early = Some(v);
                SolveControl::Halt
            }
            None => SolveControl::Continue,
        },
    );
    let verdict = match report.outcome {
        SolveOutcome::Converged => Feasibility::Feasible(FeasibleSignal::ResidualConverged),
        SolveOutcome::Blowup => Feasibility::Infeasible(InfeasibleSignal::AmplitudeBlowup),
        SolveOutcome::Halted => early.unwrap_or(Feasibility::Undecided(SolveOutcome::Halted)),
        other => Feasibility::Undecided(other),
    };
    ForcedRun {
        field,
        verdict,
        sweeps: report.sweeps,
        final_residual: report.final_residual,
    }
}

/// Zero-order term `(c(x) + lambda) |s|^{2-g} s` for the order-matched
/// eigenvalue family.
pub fn forced_reaction(c: &Sampler, c_lo: f64, c_hi: f64, lambda: f64, gamma: f64) -> PotentialPower {
    let shifted = c.clone();
    let sampler = Sampler::new(format!("c+{lambda:.6}"), move |x| shifted.eval(x) + lambda);
    let sup = (c_lo + lambda).abs().max((c_hi + lambda).abs());
    PotentialPower::new(sampler, sup, 3.0 - gamma)
}

/// Analytic upper end for the bisection bracket: the sharpest level at which
/// a centered Gaussian `exp(-2 |x|^2 / R^2)` stops being a positive
/// supersolution on a ball of radius `R`. Scales like `R^(g-4)`. The
/// bisection verifies it and extends upward if a probe disagrees.
pub fn gaussian_upper_bound(gamma: f64, radius: f64) -> f64 {
    let k = 2.0 / (radius * radius);
    if gamma >= 2.0 {
        return 2.0 * k;
    }
    let rstar2 = (2.0 - gamma) / (2.0 * k * (4.0 - gamma));
    (2.0 * k).powf(3.0 - gamma) * rstar2.powf(0.5 * (2.0 - gamma)) * 2.0 / (4.0 - gamma)
}

#[derive(Clone, Debug)]
pub struct ProbeRecord {
    pub lambda: f64,
    pub verdict: Feasibility,
    pub sweeps: usize,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Largest level whose forced problem looked solvable.
    pub lower: f64,
    /// Smallest level whose forced problem looked unsolvable.
    pub upper: f64,
    /// Whether the bracket reached the requested width (false when a probe
    /// came back undecided first).
    pub resolved: bool,
    pub probes: Vec<ProbeRecord>,
    /// Sup-normalized forced profile at `lower`; near the crossover this is
    /// the principal eigenfunction shape.
    pub eigenfunction: ScalarField,
    /// Forced-equation residual of the (unnormalized) profile at `lower`.
    pub eigenfunction_residual: f64,
}

impl EigenResult {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn potential_range(engine: &OperatorEngine, c: &Sampler) -> (f64, f64) {
    let dim = engine.mask().grid().dim;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..engine.n_interior() {
        let v = c.eval(&engine.node_position(j)[..dim]);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// Brackets the principal eigenvalue of `L u + c(x) |u|^{2-g} u` with zero
/// boundary data by bisection on forced-problem feasibility. The engine must
/// have been built with zero boundary data on the target domain.
pub fn principal_eigenvalue(
    engine: &OperatorEngine,
    c: &Sampler,
    cfg: &EigenConfig,
) -> Result<EigenResult, EigenError> {
    let gamma = engine.gamma();
    let (c_lo, c_hi) = potential_range(engine, c);
    let radius = 0.5 * engine.shape_diameter();
    let zero = Sampler::zero();
    let rhs = vec![-1.0; engine.n_interior()];

    let mut probes = Vec::new();
    // Feasible probes monotonically increase the minimal solution, so the
    // best field so far is a valid (and fast) start for every later probe.
    let mut warm = constant_start(engine.mask(), 0.0, &zero);

    let run_probe = |lambda: f64, warm: &mut ScalarField, probes: &mut Vec<ProbeRecord>| {
        let reaction = forced_reaction(c, c_lo, c_hi, lambda, gamma);
        let run = solve_forced(engine, &reaction, &rhs, warm, true, cfg);
        if run.verdict.is_feasible() {
            *warm = run.field;
        }
        let verdict = run.verdict;
        probes.push(ProbeRecord {
            lambda,
            verdict,
            sweeps: run.sweeps,
        });
        verdict
    };

    // Lower end: deep absorption is always solvable; extend down defensively.
    let mut lo = -c_hi - 1.0;
    let mut hi = gaussian_upper_bound(gamma, radius) + (-c_lo).max(0.0) + 0.1;
    let mut ok = false;
    for _ in 0..4 {
        if run_probe(lo, &mut warm, &mut probes).is_feasible() {
            ok = true;
            break;
        }
        lo -= (hi - lo).max(1.0);
    }
    if !ok {
        return Err(EigenError::NoFeasibleFloor { tried: lo });
    }

    // Upper end: certified analytically, still verified; extend up if needed.
    let mut ok = false;
    for _ in 0..7 {
        match run_probe(hi, &mut warm, &mut probes) {
            Feasibility::Infeasible(_) => {
                ok = true;
                break;
            }
            Feasibility::Feasible(_) => {
                let span = hi - lo;
                lo = hi;
                hi += 2.0 * span;
            }
            Feasibility::Undecided(_) => break,
        }
    }
    if !ok {
        return Err(EigenError::NoInfeasibleCeiling { tried: hi });
    }

    let mut resolved = true;
    while hi - lo > cfg.bracket_tol && probes.len() < cfg.max_probes {
        let mid = 0.5 * (lo + hi);
        match run_probe(mid, &mut warm, &mut probes) {
            Feasibility::Feasible(_) => lo = mid,
            Feasibility::Infeasible(_) => hi = mid,
            Feasibility::Undecided(_) => {
                resolved = false;
                break;
            }
        }
    }
    resolved = resolved && (hi - lo) <= cfg.bracket_tol;

    // Polish the profile at the last feasible level, then normalize.
    let reaction = forced_reaction(c, c_lo, c_hi, lo, gamma);
    let mut polish_cfg = cfg.clone();
    polish_cfg.solver.max_sweeps = cfg.refine_sweeps;
    let run = solve_forced(engine, &reaction, &rhs, &warm, false, &polish_cfg);
    let mut eigenfunction = if run.verdict.is_infeasible() {
        warm
    } else {
        run.field
    };
    let residual = run.final_residual;
    let (_, sup) = eigenfunction.interior_min_max();
    if sup > 0.0 {
        for v in eigenfunction.values_mut() {
            *v /= sup;
        }
    }

    Ok(EigenResult {
        lower: lo,
        upper: hi,
        resolved,
        probes,
        eigenfunction,
        eigenfunction_residual: residual,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MaxPrincipleVerdict {
    /// Positive perturbations decay: the maximum principle holds at this
    /// level.
    Holds,
    /// Positive perturbations grow: the maximum principle fails.
    Fails,
    Undecided,
}

/// Probes the maximum principle for `L u + (c + lambda) |u|^{2-g} u` by
/// releasing a positive interior bump (the boundary-distance profile) under
/// zero forcing and watching whether it collapses or takes off. By the
/// eigenvalue dichotomy this flips at the principal eigenvalue.
pub fn max_principle_probe(
    engine: &OperatorEngine,
    c: &Sampler,
    lambda: f64,
    cfg: &EigenConfig,
) -> MaxPrincipleVerdict {
    let mask = engine.mask().clone();
    let grid = mask.grid().clone();
    let dim = grid.dim;
    let shape = mask.shape().clone();
    let zero = Sampler::zero();
    let mut start = ScalarField::constant(&mask, 0.0);
    let mut init_sup: f64 = 0.0;
    for &i in mask.interior() {
        let x = grid.node_coords(i as usize);
        let d = shape.boundary_distance(&x, dim);
        start.values_mut()[i as usize] = d;
        init_sup = init_sup.max(d);
    }
    start.pin_boundary(&zero);

    let (c_lo, c_hi) = potential_range(engine, c);
    let reaction = forced_reaction(c, c_lo, c_hi, lambda, engine.gamma());
    let rhs = vec![0.0; engine.n_interior()];
    let decay_level = 1e-3 * init_sup;
    let growth_level = 1e3 * init_sup;

    let mut classifier = GrowthClassifier::new(cfg);
    let mut early: Option<Feasibility> = None;
    let mut amplitude: Option<MaxPrincipleVerdict> = None;
    let (_, report) = relax_with_monitor(
        engine,
        &start,
        &reaction,
        &rhs,
        &cfg.solver,
        &mut |stats| {
            if stats.sup_abs <= decay_level {
                amplitude = Some(MaxPrincipleVerdict::Holds);
                return SolveControl::Halt;
            }
            if stats.sup_abs >= growth_level {
                amplitude = Some(MaxPrincipleVerdict::Fails);
                return SolveControl::Halt;
            }
            match classifier.observe(stats) {
                Some(v) => {
                    early = Some(v);
                    SolveControl::Halt
                }
                None => SolveControl::Continue,
            }
        },
    );
    match report.outcome {
        SolveOutcome::Converged => MaxPrincipleVerdict::Holds,
        SolveOutcome::Blowup => MaxPrincipleVerdict::Fails,
        SolveOutcome::Halted => amplitude.unwrap_or(match early {
            Some(Feasibility::Feasible(_)) => MaxPrincipleVerdict::Holds,
            Some(Feasibility::Infeasible(_)) => MaxPrincipleVerdict::Fails,
            _ => MaxPrincipleVerdict::Undecided,
        }),
        _ => MaxPrincipleVerdict::Undecided,
    }
}

/// Minimum of `u(x) / dist(x, boundary)` over interior nodes within
/// `band_width` of the boundary; a positive value is the discrete form of a
/// Hopf-type boundary slope bound.
pub fn hopf_ratio(u: &ScalarField, band_width: f64) -> f64 {
    let mask = u.mask().clone();
    let grid = mask.grid().clone();
    let dim = grid.dim;
    let shape = mask.shape();
    let mut min_ratio = f64::INFINITY;
    for &i in mask.interior() {
        let x = grid.node_coords(i as usize);
        let d = shape.boundary_distance(&x, dim);
        if d <= band_width && d > 0.0 {
            min_ratio = min_ratio.min(u.get(i as usize) / d);
        }
    }
    min_ratio
}

#[derive(Clone, Debug)]
pub struct RadiusEigen {
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Eigenvalue brackets on centered balls of several radii (same spacing),
/// e.g. to check domain monotonicity and the `R^(g-4)` scaling.
pub fn nested_domain_eigenvalues(
    gamma: f64,
    drift: &VectorSampler,
    c: &Sampler,
    radii: &[f64],
    h: f64,
    cfg: &EigenConfig,
) -> Result<Vec<RadiusEigen>, EigenError> {
    let zero = Sampler::zero();
    let mut out = Vec::with_capacity(radii.len());
    for &radius in radii {
        let shape = Shape::Ball {
            center: [0.0; 3],
            radius,
        };
        let grid = Grid::covering(&shape, 1, h, 1)?;
        let mask: Arc<DomainMask> = build_mask(grid, shape)?;
        let engine = OperatorEngine::build(&mask, gamma, drift, Some(&zero))?;
        let r = principal_eigenvalue(&engine, c, cfg)?;
        out.push(RadiusEigen {
            radius,
            lower: r.lower,
            upper: r.upper,
        });
    }
    Ok(out)
}

/// Bracket midpoints of the eigenvalue for scaled potentials `alpha c`,
/// reported as `(alpha, mid / alpha)`; for large `alpha` the second entry
/// approaches `-min c`.
pub fn alpha_scaling_ratios(
    engine: &OperatorEngine,
    c: &Sampler,
    alphas: &[f64],
    cfg: &EigenConfig,
) -> Result<Vec<(f64, f64)>, EigenError> {
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let base = c.clone();
        let scaled = Sampler::new(format!("{alpha}*c"), move |x| alpha * base.eval(x));
        let r = principal_eigenvalue(engine, &scaled, cfg)?;
        out.push((alpha, r.mid() / alpha));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mask, Grid, Sampler, Shape, VectorSampler};
    use approx::assert_abs_diff_eq;

    fn interval_engine(radius: f64, h: f64, gamma: f64) -> (Arc<DomainMask>, OperatorEngine) {
        let shape = Shape::Ball {
            center: [0.0; 3],
            radius,
        };
        let grid = Grid::covering(&shape, 1, h, 1).unwrap();
        let mask = build_mask(grid, shape).unwrap();
        let zero = Sampler::zero();
        let engine = OperatorEngine::build(&mask, gamma, &VectorSampler::zero(), Some(&zero)).unwrap();
        (mask, engine)
    }

    #[test]
    fn gaussian_bound_matches_direct_maximization() {
        for &gamma in &[0.0, 0.7, 1.0, 1.6, 2.0] {
            for &radius in &[0.5, 1.0, 3.0] {
                let k = 2.0 / (radius * radius);
                let mut best = f64::NEG_INFINITY;
                let n = 100_000;
                for i in 0..=n {
                    let r = radius * i as f64 / n as f64;
                    let v = (2.0 * k * r).powf(2.0 - gamma)
                        * (2.0 * k - 4.0 * k * k * r * r);
                    best = best.max(v);
                }
                let closed = gaussian_upper_bound(gamma, radius);
                assert!(
                    closed >= best - 1e-9 && closed <= best * (1.0 + 1e-6) + 1e-9,
                    "gamma {gamma} radius {radius}: closed {closed} vs grid {best}"
                );
            }
        }
        // Pinned values at radius 1 (k = 2): both ends of the range give 4.
        assert_abs_diff_eq!(gaussian_upper_bound(2.0, 1.0), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gaussian_upper_bound(0.0, 1.0), 4.0, epsilon = 1e-12);
        // Homogeneity in the radius.
        let g = 1.3;
        assert_abs_diff_eq!(
            gaussian_upper_bound(g, 2.0),
            gaussian_upper_bound(g, 1.0) * 2.0f64.powf(g - 4.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn interval_bracket_contains_pi_squared_over_four() {
        // g = 2 on (-1, 1): the principal eigenvalue is (pi/2)^2.
        let (_, engine) = interval_engine(1.0, 1.0 / 32.0, 2.0);
        let cfg = EigenConfig::default();
        let r = principal_eigenvalue(&engine, &Sampler::zero(), &cfg).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 4.0;
        assert!(r.resolved, "bracket did not resolve: {:?}", (r.lower, r.upper));
        assert!(r.width() <= cfg.bracket_tol + 1e-12);
        assert!(
            r.lower <= exact && exact <= r.upper,
            "bracket [{}, {}] misses {exact}",
            r.lower,
            r.upper
        );
        // The normalized profile is positive inside and has nondegenerate
        // boundary slope.
        let (lo, hi) = r.eigenfunction.interior_min_max();
        assert!(lo > 0.0 && (hi - 1.0).abs() < 1e-12);
        assert!(hopf_ratio(&r.eigenfunction, 0.1) > 0.5);
    }

    #[test]
    fn constant_potential_shifts_the_bracket_exactly() {
        let (_, engine) = interval_engine(1.0, 1.0 / 32.0, 2.0);
        let cfg = EigenConfig::default();
        let base = principal_eigenvalue(&engine, &Sampler::zero(), &cfg).unwrap();
        let shifted = principal_eigenvalue(&engine, &Sampler::constant(-1.0), &cfg).unwrap();
        assert_abs_diff_eq!(shifted.mid(), base.mid() + 1.0, epsilon = 0.06);
    }

    #[test]
    fn degenerate_interval_bracket_matches_quartic_first_integral() {
        // g = 0 on (-1, 1): the one-dimensional eigenvalue is pi^4 / 64,
        // from the first integral (u')^4 / 4 + lambda u^4 / 4 = const of
        // |u'|^2 u'' + lambda u^3 = 0.
        let (_, engine) = interval_engine(1.0, 1.0 / 16.0, 0.0);
        let cfg = EigenConfig::default();
        let r = principal_eigenvalue(&engine, &Sampler::zero(), &cfg).unwrap();
        let exact = std::f64::consts::PI.powi(4) / 64.0;
        assert!(r.resolved);
        assert!(
            (r.mid() - exact).abs() <= 0.2,
            "mid {} vs {exact}",
            r.mid()
        );
    }

    #[test]
    fn doubling_the_interval_divides_the_level_by_sixteen_over_four() {
        // g = 2 scaling: lambda(R) = R^{-2} lambda(1).
        let (_, engine) = interval_engine(2.0, 1.0 / 16.0, 2.0);
        let cfg = EigenConfig {
            bracket_tol: 0.02,
            ..EigenConfig::default()
        };
        let r = principal_eigenvalue(&engine, &Sampler::zero(), &cfg).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 16.0;
        assert!(
            (r.mid() - exact).abs() <= 0.05,
            "mid {} vs {exact}",
            r.mid()
        );
    }

    #[test]
    fn maximum_principle_flips_across_the_eigenvalue() {
        let (_, engine) = interval_engine(1.0, 1.0 / 32.0, 2.0);
        let cfg = EigenConfig::default();
        assert_eq!(
            max_principle_probe(&engine, &Sampler::zero(), 1.0, &cfg),
            MaxPrincipleVerdict::Holds
        );
        assert_eq!(
            max_principle_probe(&engine, &Sampler::zero(), 4.0, &cfg),
            MaxPrincipleVerdict::Fails
        );
    }
}
