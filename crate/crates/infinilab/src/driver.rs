//! Batch execution: resolve a [`RunConfig`], run the named command, and
//! serialize artifacts into a directory.
//!
//! Every run writes `metadata.json` with the tool version, the seed, the full
//! resolved config, and the command's headline numbers. Field snapshots go to
//! CSV with header `x[,y[,z]],value`, rows in flat grid order over interior
//! and boundary nodes, physical coordinates, and 17-significant-digit floats
//! (`{:.16e}`), which round-trip `f64` exactly: re-reading and re-emitting a
//! field is byte-identical. Relaxation traces go to CSV `iter,residual_sup`;
//! tabular results (oracle error tables, experiment stages, eigen probes) go
//! to the configured table file.
//!
//! The worker count only sizes the thread pool; parallel and serial sweeps
//! compute identical bytes, so artifacts are reproducible across `--workers`
//! settings. The seed only drives the oracle cross-check's sample radii and
//! is recorded in the metadata.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::config::{ConfigError, LiouvilleSpec, ProblemBlock, RunConfig, ShapeSpec};
use crate::eigen::{principal_eigenvalue, EigenConfig, EigenError, Feasibility};
use crate::grid::{
    build_mask, sample, Grid, GridError, MaskError, SampleError, Sampler, ScalarField, Shape,
};
use crate::kpp::{solve_on_ball, solve_whole_space, KppConfig, KppError, KppProblem};
use crate::liouville::{
    absorption_decay_experiment, certify_theta_subsolution, constancy_experiment,
    sharpness_witness, GrowthEnvelope, LiouvilleError, ThetaConfig,
};
use crate::operator::{NoReaction, OperatorEngine, OperatorError, PotentialPower, Reaction};
use crate::oracles::l_radial;
use crate::solver::{
    constant_start, relax_to_steady, FixedPointOutcome, SolveOutcome, SolveReport,
};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("certificate failed: {0}")]
    Certificate(String),
}

impl DriverError {
    /// Process exit code: 0 success, 2 validation, 3 solver divergence,
    /// 4 certificate failure, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Config(_) => 2,
            DriverError::Io { .. } => 1,
            DriverError::Solver(_) => 3,
            DriverError::Certificate(_) => 4,
        }
    }
}

fn setup_err(e: impl std::fmt::Display) -> DriverError {
    DriverError::Config(ConfigError::Invalid(e.to_string()))
}

impl From<GridError> for DriverError {
    fn from(e: GridError) -> Self {
        setup_err(e)
    }
}
impl From<MaskError> for DriverError {
    fn from(e: MaskError) -> Self {
        setup_err(e)
    }
}
impl From<SampleError> for DriverError {
    fn from(e: SampleError) -> Self {
        setup_err(e)
    }
}
impl From<OperatorError> for DriverError {
    fn from(e: OperatorError) -> Self {
        setup_err(e)
    }
}
impl From<KppError> for DriverError {
    fn from(e: KppError) -> Self {
        setup_err(e)
    }
}
impl From<EigenError> for DriverError {
    fn from(e: EigenError) -> Self {
        match e {
            EigenError::NoFeasibleFloor { .. } | EigenError::NoInfeasibleCeiling { .. } => {
                DriverError::Solver(e.to_string())
            }
            other => setup_err(other),
        }
    }
}
impl From<LiouvilleError> for DriverError {
    fn from(e: LiouvilleError) -> Self {
        match e {
            LiouvilleError::Envelope { .. } | LiouvilleError::Absorption { .. } => {
                DriverError::Certificate(e.to_string())
            }
            other => setup_err(other),
        }
    }
}

/// Files written plus the headline numbers, mirrored into the metadata.
#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

// ---------------------------------------------------------------------------
// CSV emission.
// ---------------------------------------------------------------------------

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<(), DriverError> {
    std::fs::write(path, text).map_err(|source| DriverError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Field CSV: header `x[,y[,z]],value`, one row per interior or boundary
/// node in flat grid (row-major) order.
pub fn field_csv_string(field: &ScalarField) -> String {
    let mask = field.mask();
    let grid = mask.grid();
    let dim = grid.dim;
    let mut out = String::new();
    let headers = ["x", "y", "z"];
    out.push_str(&headers[..dim].join(","));
    out.push_str(",value\n");

    let interior = mask.interior();
    let boundary = mask.boundary();
    let (mut i, mut b) = (0usize, 0usize);
    while i < interior.len() || b < boundary.len() {
        let next_i = interior.get(i).copied().unwrap_or(u32::MAX);
        let next_b = boundary.get(b).copied().unwrap_or(u32::MAX);
        let idx = if next_i < next_b {
            i += 1;
            next_i
        } else {
            b += 1;
            next_b
        } as usize;
        let x = grid.node_coords(idx);
        for c in &x[..dim] {
            out.push_str(&fmt_f(*c));
            out.push(',');
        }
        out.push_str(&fmt_f(field.get(idx)));
        out.push('\n');
    }
    out
}

pub fn emit_field(field: &ScalarField, path: &Path) -> Result<(), DriverError> {
    write_text(path, &field_csv_string(field))
}

/// Parses a CSV in the field format back into coordinate rows and values.
pub fn read_field_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>), DriverError> {
    let text = std::fs::read_to_string(path).map_err(|source| DriverError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let bad = |line: usize, what: &str| {
        DriverError::Config(ConfigError::Invalid(format!(
            "{}:{line}: {what}",
            path.display()
        )))
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty field file"))?;
    let cols = header.split(',').count();
    if !(2..=4).contains(&cols) {
        return Err(bad(1, "field header must be x[,y[,z]],value"));
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(bad(n + 1, "wrong column count"));
        }
        let mut row = Vec::with_capacity(cols - 1);
        for f in &fields[..cols - 1] {
            row.push(f.parse::<f64>().map_err(|_| bad(n + 1, "bad float"))?);
        }
        coords.push(row);
        values.push(
            fields[cols - 1]
                .parse::<f64>()
                .map_err(|_| bad(n + 1, "bad float"))?,
        );
    }
    Ok((coords, values))
}

/// Re-emits parsed field rows in the canonical format (used to check
/// round-trip byte identity).
pub fn field_rows_csv_string(coords: &[Vec<f64>], values: &[f64]) -> String {
    let dim = coords.first().map(|c| c.len()).unwrap_or(1);
    let mut out = String::new();
    let headers = ["x", "y", "z"];
    out.push_str(&headers[..dim].join(","));
    out.push_str(",value\n");
    for (row, v) in coords.iter().zip(values) {
        for c in row {
            out.push_str(&fmt_f(*c));
            out.push(',');
        }
        out.push_str(&fmt_f(*v));
        out.push('\n');
    }
    out
}

fn trace_csv_string(report: &SolveReport) -> String {
    let mut out = String::from("iter,residual_sup\n");
    for s in &report.history {
        let _ = writeln!(out, "{},{}", s.sweep, fmt_f(s.residual_sup));
    }
    out
}

fn table_csv_string(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::with_capacity(rows.len() * 32);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// The run entry point.
// ---------------------------------------------------------------------------

/// Executes the configured command. `out_override` replaces the config's
/// output directory (the CLI `--out` flag); `workers` sizes a dedicated
/// thread pool (`None` uses the process default); `seed` drives the
/// oracle-check sample radii.
pub fn run(
    cfg: &RunConfig,
    out_override: Option<&Path>,
    workers: Option<usize>,
    seed: u64,
) -> Result<RunOutcome, DriverError> {
    cfg.validate()?;
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match workers {
        None => execute(cfg, &out_dir, seed),
        Some(n) => {
            if n == 0 {
                return Err(setup_err("--workers must be >= 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| setup_err(format!("thread pool: {e}")))?;
            pool.install(|| execute(cfg, &out_dir, seed))
        }
    }
}

struct Emitter<'a> {
    dir: &'a Path,
    cfg: &'a RunConfig,
    seed: u64,
    files: Vec<PathBuf>,
}

impl<'a> Emitter<'a> {
    fn new(dir: &'a Path, cfg: &'a RunConfig, seed: u64) -> Result<Self, DriverError> {
        std::fs::create_dir_all(dir).map_err(|source| DriverError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Emitter {
            dir,
            cfg,
            seed,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), DriverError> {
        let path = self.dir.join(name);
        write_text(&path, text)?;
        self.files.push(path);
        Ok(())
    }

    fn field(&mut self, field: &ScalarField) -> Result<(), DriverError> {
        let name = self.cfg.output.field_file.clone();
        self.write(&name, &field_csv_string(field))
    }

    fn trace(&mut self, report: &SolveReport) -> Result<(), DriverError> {
        if !self.cfg.output.emit_trace {
            return Ok(());
        }
        let name = self.cfg.output.trace_file.clone();
        self.write(&name, &trace_csv_string(report))
    }

    fn table(&mut self, header: &str, rows: &[Vec<String>]) -> Result<(), DriverError> {
        let name = self.cfg.output.table_file.clone();
        self.write(&name, &table_csv_string(header, rows))
    }

    fn finish(mut self, results: serde_json::Value) -> Result<RunOutcome, DriverError> {
        let metadata = json!({
            "tool": { "name": "infinilab", "version": env!("CARGO_PKG_VERSION") },
            "command": self.cfg.command.to_string(),
            "seed": self.seed,
            "config": serde_json::to_value(self.cfg)
                .map_err(|e| setup_err(format!("config serialization: {e}")))?,
            "results": results,
        });
        let text = serde_json::to_string_pretty(&metadata)
            .map_err(|e| setup_err(format!("metadata serialization: {e}")))?
            + "\n";
        let name = self.cfg.output.metadata_file.clone();
        self.write(&name, &text)?;
        Ok(RunOutcome {
            files: self.files,
            summary: results_of(metadata),
        })
    }
}

fn results_of(metadata: serde_json::Value) -> serde_json::Value {
    metadata
        .get("results")
        .cloned()
        .unwrap_or(serde_json::Value::Null)
}

fn execute(cfg: &RunConfig, out_dir: &Path, seed: u64) -> Result<RunOutcome, DriverError> {
    let emitter = Emitter::new(out_dir, cfg, seed)?;
    match &cfg.problem {
        ProblemBlock::Dirichlet { .. } => run_solve(cfg, emitter),
        ProblemBlock::Eigen { .. } => run_eigen(cfg, emitter),
        ProblemBlock::Kpp { .. } => run_kpp(cfg, emitter),
        ProblemBlock::Liouville(spec) => run_liouville(cfg, spec, emitter),
        ProblemBlock::OracleCheck { .. } => run_oracle_check(cfg, emitter),
    }
}

fn domain_shape(cfg: &RunConfig) -> Result<Shape, DriverError> {
    Ok(cfg.domain.shape.to_shape(cfg.domain.dim)?)
}

/// Radius of a ball around the origin containing the shape; bounds radial
/// coefficient sups.
fn circumradius(shape: &Shape, dim: usize) -> f64 {
    let (lo, hi) = shape.bounding_box();
    let mut r2 = 0.0;
    for a in 0..dim {
        let m = lo[a].abs().max(hi[a].abs());
        r2 += m * m;
    }
    r2.sqrt()
}

fn outcome_str(o: SolveOutcome) -> &'static str {
    match o {
        SolveOutcome::Converged => "converged",
        SolveOutcome::MaxSweeps => "max-sweeps",
        SolveOutcome::Diverged => "diverged",
        SolveOutcome::Blowup => "blowup",
        SolveOutcome::Halted => "halted",
    }
}

fn fixed_outcome_str(o: &FixedPointOutcome) -> String {
    match o {
        FixedPointOutcome::Converged => "converged".into(),
        FixedPointOutcome::CollapsedBelowTarget => "collapsed-below-target".into(),
        FixedPointOutcome::NonMonotoneStep { iter, rise } => {
            format!("non-monotone-step(iter {iter}, rise {rise:.3e})")
        }
        FixedPointOutcome::Blowup => "blowup".into(),
        FixedPointOutcome::OuterCapReached => "outer-cap-reached".into(),
        FixedPointOutcome::InnerTrouble(inner) => format!("inner-{}", outcome_str(*inner)),
    }
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn run_solve(cfg: &RunConfig, mut em: Emitter) -> Result<RunOutcome, DriverError> {
    let ProblemBlock::Dirichlet {
        rhs,
        boundary,
        start_level,
    } = &cfg.problem
    else {
        unreachable!("dispatch checked the problem kind");
    };
    let shape = domain_shape(cfg)?;
    let dim = cfg.domain.dim;
    let grid = Grid::covering(&shape, dim, cfg.domain.h, cfg.domain.stencil)?;
    let mask = build_mask(grid, shape.clone())?;
    let g = boundary.sampler();
    let drift = cfg.operator.drift.sampler();
    let engine = OperatorEngine::build_with_order(
        &mask,
        cfg.operator.gamma,
        &drift,
        Some(&g),
        cfg.domain.stencil as i64,
    )?;

    let reaction: Box<dyn Reaction> = if cfg.operator.potential.is_zero() {
        Box::new(NoReaction)
    } else {
        let bound = circumradius(&shape, dim);
        let c_sup = cfg
            .operator
            .potential
            .abs_sup_within(bound)
            .ok_or_else(|| setup_err("operator.potential has no closed sup bound"))?;
        Box::new(PotentialPower::new(
            cfg.operator.potential.sampler(),
            c_sup,
            3.0 - cfg.operator.gamma,
        ))
    };

    let rhs_sampler = rhs.sampler();
    let mut rhs_vec = vec![0.0; engine.n_interior()];
    for (j, r) in rhs_vec.iter_mut().enumerate() {
        *r = rhs_sampler.eval(&engine.node_position(j)[..dim]);
    }

    let start = match start_level {
        Some(level) => constant_start(&mask, *level, &g),
        None => sample(&g, &mask)?,
    };
    let (field, report) = relax_to_steady(&engine, &start, reaction.as_ref(), &rhs_vec, &cfg.solver_config());

    em.field(&field)?;
    em.trace(&report)?;
    let (lo, hi) = field.interior_min_max();
    let results = json!({
        "outcome": outcome_str(report.outcome),
        "sweeps": report.sweeps,
        "final_residual": report.final_residual,
        "interior_min": lo,
        "interior_max": hi,
    });
    let outcome = report.outcome;
    let run = em.finish(results)?;
    if outcome != SolveOutcome::Converged {
        return Err(DriverError::Solver(format!(
            "relaxation ended {} after {} sweeps (residual {:.3e})",
            outcome_str(outcome),
            report.sweeps,
            report.final_residual
        )));
    }
    Ok(run)
}

// ---------------------------------------------------------------------------
// eigen
// ---------------------------------------------------------------------------

fn run_eigen(cfg: &RunConfig, mut em: Emitter) -> Result<RunOutcome, DriverError> {
    let ProblemBlock::Eigen { bracket_tol } = &cfg.problem else {
        unreachable!("dispatch checked the problem kind");
    };
    let shape = domain_shape(cfg)?;
    let grid = Grid::covering(&shape, cfg.domain.dim, cfg.domain.h, cfg.domain.stencil)?;
    let mask = build_mask(grid, shape)?;
    let zero = Sampler::zero();
    let drift = cfg.operator.drift.sampler();
    let engine = OperatorEngine::build_with_order(
        &mask,
        cfg.operator.gamma,
        &drift,
        Some(&zero),
        cfg.domain.stencil as i64,
    )?;
    let c = cfg.operator.potential.sampler();
    let eigen_cfg = EigenConfig {
        solver: cfg.solver_config(),
        bracket_tol: *bracket_tol,
        ..EigenConfig::default()
    };
    let result = principal_eigenvalue(&engine, &c, &eigen_cfg)?;

    em.field(&result.eigenfunction)?;
    let rows: Vec<Vec<String>> = result
        .probes
        .iter()
        .map(|p| {
            let verdict = match p.verdict {
                Feasibility::Feasible(_) => "feasible",
                Feasibility::Infeasible(_) => "infeasible",
                Feasibility::Undecided(_) => "undecided",
            };
            vec![fmt_f(p.lambda), verdict.to_string(), p.sweeps.to_string()]
        })
        .collect();
    em.table("lambda,verdict,sweeps", &rows)?;

    let results = json!({
        "lambda_lo": result.lower,
        "lambda_hi": result.upper,
        "width": result.width(),
        "resolved": result.resolved,
        "probes": result.probes.len(),
        "eigenfunction_residual": result.eigenfunction_residual,
    });
    let resolved = result.resolved;
    let (lower, upper) = (result.lower, result.upper);
    let run = em.finish(results)?;
    if !resolved {
        return Err(DriverError::Solver(format!(
            "eigenvalue bracket [{lower:.6}, {upper:.6}] did not reach width {bracket_tol}: a probe came back undecided"
        )));
    }
    Ok(run)
}

// ---------------------------------------------------------------------------
// kpp
// ---------------------------------------------------------------------------

fn run_kpp(cfg: &RunConfig, mut em: Emitter) -> Result<RunOutcome, DriverError> {
    let ProblemBlock::Kpp {
        carrying,
        carrying_sup,
        start_level,
        whole_space,
        max_doublings,
        inner_fraction,
        doubling_gap_tol,
    } = &cfg.problem
    else {
        unreachable!("dispatch checked the problem kind");
    };
    let radius = match &cfg.domain.shape {
        ShapeSpec::Ball { radius, .. } => *radius,
        _ => return Err(setup_err("kpp runs need a ball domain")),
    };
    let a_sup = match carrying_sup {
        Some(s) => *s,
        None => carrying
            .abs_sup_within(if *whole_space {
                radius * (1u64 << *max_doublings) as f64
            } else {
                radius
            })
            .ok_or_else(|| setup_err("kpp carrying profile has no closed sup bound"))?,
    };
    let problem = KppProblem {
        dim: cfg.domain.dim,
        gamma: cfg.operator.gamma,
        drift: cfg.operator.drift.sampler(),
        a: carrying.sampler(),
        a_sup,
        a_abs_sup: a_sup,
    };
    let kpp_cfg = KppConfig {
        solver: cfg.solver_config(),
        r0: radius,
        max_doublings: *max_doublings,
        inner_fraction: *inner_fraction,
        doubling_gap_tol: *doubling_gap_tol,
    };
    let start = start_level.unwrap_or(2.0 * a_sup.max(0.5));

    let (field, results, ok, how) = if *whole_space {
        let run = solve_whole_space(&problem, cfg.domain.h, start, &kpp_cfg)?;
        let rows: Vec<Vec<String>> = run
            .stages
            .iter()
            .map(|s| {
                vec![
                    fmt_f(s.radius),
                    fmt_f(s.sup),
                    s.inner_gap.map(fmt_f).unwrap_or_default(),
                ]
            })
            .collect();
        em.table("radius,sup,inner_gap", &rows)?;
        let center = center_value(&run.field);
        let (lo, hi) = run.field.interior_min_max();
        let results = json!({
            "mode": "whole-space",
            "converged": run.converged,
            "stages": run.stages.len(),
            "interior_min": lo,
            "interior_max": hi,
            "center_value": center,
        });
        let how = format!(
            "whole-space exhaustion did not settle within {} doublings",
            max_doublings
        );
        (run.field, results, run.converged, how)
    } else {
        let run = solve_on_ball(&problem, radius, cfg.domain.h, start, &kpp_cfg)?;
        let rows: Vec<Vec<String>> = run
            .report
            .step_history
            .iter()
            .enumerate()
            .map(|(i, s)| vec![i.to_string(), fmt_f(*s)])
            .collect();
        em.table("iter,step_sup", &rows)?;
        let center = center_value(&run.field);
        let (lo, hi) = run.field.interior_min_max();
        let ok = matches!(run.report.outcome, FixedPointOutcome::Converged);
        let results = json!({
            "mode": "ball",
            "outcome": fixed_outcome_str(&run.report.outcome),
            "outer_iters": run.report.outer_iters,
            "total_sweeps": run.report.total_sweeps,
            "true_residual_sup": run.report.true_residual_sup,
            "interior_min": lo,
            "interior_max": hi,
            "center_value": center,
        });
        let how = format!(
            "monotone iteration ended {}",
            fixed_outcome_str(&run.report.outcome)
        );
        (run.field, results, ok, how)
    };

    em.field(&field)?;
    let run = em.finish(results)?;
    if !ok {
        return Err(DriverError::Solver(how));
    }
    Ok(run)
}

fn center_value(field: &ScalarField) -> Option<f64> {
    let mask = field.mask();
    let anchor = mask.shape().anchor();
    mask.grid().node_at(&anchor).map(|idx| field.get(idx))
}

// ---------------------------------------------------------------------------
// liouville
// ---------------------------------------------------------------------------

fn run_liouville(
    cfg: &RunConfig,
    spec: &LiouvilleSpec,
    mut em: Emitter,
) -> Result<RunOutcome, DriverError> {
    let gamma = cfg.operator.gamma;
    let dim = cfg.domain.dim;
    let h = cfg.domain.h;
    match spec {
        LiouvilleSpec::Theta {
            alpha,
            eps,
            grad_coeff,
            inner,
            outer,
        } => {
            let rep = certify_theta_subsolution(&ThetaConfig {
                dim,
                gamma,
                alpha: *alpha,
                eps: *eps,
                grad_coeff: *grad_coeff,
                inner: *inner,
                outer: *outer,
                h,
            })?;
            let results = json!({
                "experiment": "theta",
                "checked": rep.checked,
                "min_margin": rep.min_margin,
                "min_margin_at": rep.min_margin_at,
                "max_deviation": rep.max_deviation,
                "max_deviation_at": rep.max_deviation_at,
                "pass": rep.pass,
                "thin_margin": rep.thin_margin,
            });
            let pass = rep.pass;
            let min_margin = rep.min_margin;
            let run = em.finish(results)?;
            if !pass {
                return Err(DriverError::Certificate(format!(
                    "power-profile subsolution margin is not positive (min {min_margin:.3e})"
                )));
            }
            Ok(run)
        }
        LiouvilleSpec::Constancy {
            envelope_bound,
            r_in,
            outers,
            osc_tol,
        } => {
            let drift = cfg.operator.drift.sampler();
            let rep = constancy_experiment(
                dim,
                gamma,
                &drift,
                *envelope_bound,
                *r_in,
                outers,
                h,
                *osc_tol,
                &cfg.solver_config(),
            )?;
            let rows: Vec<Vec<String>> = rep
                .stages
                .iter()
                .map(|s| {
                    vec![
                        fmt_f(s.outer_radius),
                        fmt_f(s.window_inf),
                        fmt_f(s.window_osc),
                        outcome_str(s.outcome).to_string(),
                    ]
                })
                .collect();
            em.table("outer_radius,window_inf,window_osc,outcome", &rows)?;
            let solved = rep
                .stages
                .iter()
                .all(|s| s.outcome == SolveOutcome::Converged);
            let results = json!({
                "experiment": "constancy",
                "envelope_worst": rep.envelope.worst,
                "envelope_bound": rep.envelope.bound,
                "stages": rep.stages.len(),
                "monotone": rep.monotone,
                "final_window_osc": rep.final_window_osc,
            });
            let monotone = rep.monotone;
            let run = em.finish(results)?;
            if !solved {
                return Err(DriverError::Solver(
                    "an annulus stage did not converge".into(),
                ));
            }
            if !monotone {
                return Err(DriverError::Certificate(
                    "window oscillation did not decrease along the exhaustion".into(),
                ));
            }
            Ok(run)
        }
        LiouvilleSpec::Sharpness { radius, tol } => {
            let rep = sharpness_witness(*radius, h, *tol)?;
            let results = json!({
                "experiment": "sharpness",
                "checked": rep.checked,
                "sup_deviation": rep.sup_deviation,
                "max_value": rep.max_value,
                "value_range": rep.value_range,
                "pass": rep.pass,
            });
            let pass = rep.pass;
            let dev = rep.sup_deviation;
            let run = em.finish(results)?;
            if !pass {
                return Err(DriverError::Certificate(format!(
                    "sharpness witness failed (sup deviation {dev:.3e})"
                )));
            }
            Ok(run)
        }
        LiouvilleSpec::Absorption {
            beta,
            c_value,
            drift_growth_sup,
            radius,
            seed,
            kappas,
            threshold,
        } => {
            let env = GrowthEnvelope::for_absorption(gamma, *beta)?;
            let seed_sampler = seed.sampler();
            let rep = absorption_decay_experiment(
                dim,
                &env,
                *c_value,
                *drift_growth_sup,
                *radius,
                h,
                &seed_sampler,
                kappas,
                *threshold,
                &cfg.solver_config(),
            )?;
            let rows: Vec<Vec<String>> = rep
                .stages
                .iter()
                .map(|s| {
                    vec![
                        fmt_f(s.kappa),
                        fmt_f(s.inner_pos_sup),
                        outcome_str(s.outcome).to_string(),
                    ]
                })
                .collect();
            em.table("kappa,inner_pos_sup,outcome", &rows)?;
            let results = json!({
                "experiment": "absorption",
                "alpha": rep.certificate.alpha,
                "required_absorption": rep.certificate.required,
                "c_value": rep.certificate.c_value,
                "stages": rep.stages.len(),
                "final_inner_pos_sup": rep.final_inner_pos_sup,
                "pass": rep.pass,
            });
            let pass = rep.pass;
            let left = rep.final_inner_pos_sup;
            let run = em.finish(results)?;
            if !pass {
                return Err(DriverError::Certificate(format!(
                    "absorption decay left positive mass {left:.3e}"
                )));
            }
            Ok(run)
        }
    }
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

fn run_oracle_check(cfg: &RunConfig, mut em: Emitter) -> Result<RunOutcome, DriverError> {
    let ProblemBlock::OracleCheck {
        profiles,
        gammas,
        hs,
        inner,
        outer,
        random_radii,
    } = &cfg.problem
    else {
        unreachable!("dispatch checked the problem kind");
    };
    let dim = cfg.domain.dim;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut worst_rel = 0.0f64;
    let mut worst_label = String::new();

    for spec in profiles {
        let profile = spec.to_profile();
        for &gamma in gammas {
            for &h in hs {
                let shape = Shape::Annulus {
                    center: [0.0; 3],
                    inner: *inner,
                    outer: *outer,
                };
                let grid = Grid::covering(&shape, dim, h, cfg.domain.stencil)?;
                let mask = build_mask(grid, shape)?;
                let p = profile.clone();
                let u = Sampler::radial(spec.name(), [0.0; 3], move |r| p.value(r));
                let engine = OperatorEngine::build_with_order(
                    &mask,
                    gamma,
                    &crate::grid::VectorSampler::zero(),
                    Some(&u),
                    cfg.domain.stencil as i64,
                )?;
                let field = sample(&u, &mask)?;
                let scales = engine.scales_for(field.oscillation());
                let mut sup_err = 0.0f64;
                let mut l_scale = 0.0f64;
                for j in 0..engine.n_interior() {
                    let x = engine.node_position(j);
                    let r = x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
                    let ev = engine.eval_node(field.values(), j, &scales);
                    let exact = l_radial(gamma, profile.d1(r), profile.d2(r), 0.0);
                    sup_err = sup_err.max((ev.l_value - exact).abs());
                    l_scale = l_scale.max(exact.abs());
                }
                let rel = sup_err / l_scale.max(1e-300);
                if rel > worst_rel {
                    worst_rel = rel;
                    worst_label = format!("{} gamma={gamma} h={h}", spec.name());
                }
                rows.push(vec![
                    spec.name().to_string(),
                    fmt_f(gamma),
                    fmt_f(h),
                    engine.n_interior().to_string(),
                    fmt_f(sup_err),
                    fmt_f(rel),
                ]);
            }
        }
    }
    em.table("profile,gamma,h,nodes,sup_error,rel_error", &rows)?;

    // Seeded cross-check of the closed forms themselves: centered finite
    // differences of the profile values must reproduce d1/d2 at random radii.
    let mut rng = ChaCha8Rng::seed_from_u64(em.seed);
    let span = outer - inner;
    let mut fd_max_dev = 0.0f64;
    for spec in profiles {
        let profile = spec.to_profile();
        for _ in 0..*random_radii {
            let r = inner + span * (0.05 + 0.9 * rng.random::<f64>());
            let d = 1e-5 * r;
            let (vm, v0, vp) = (
                profile.value(r - d),
                profile.value(r),
                profile.value(r + d),
            );
            let d1_fd = (vp - vm) / (2.0 * d);
            let d2_fd = (vp - 2.0 * v0 + vm) / (d * d);
            let dev1 = (d1_fd - profile.d1(r)).abs() / (1.0 + profile.d1(r).abs());
            let dev2 = (d2_fd - profile.d2(r)).abs() / (1.0 + profile.d2(r).abs());
            fd_max_dev = fd_max_dev.max(dev1.max(dev2));
        }
    }

    let results = json!({
        "cases": rows.len(),
        "worst_rel_error": worst_rel,
        "worst_case": worst_label,
        "fd_cross_check_max_dev": fd_max_dev,
        "fd_samples_per_profile": random_radii,
    });
    em.finish(results)
}
