//! Declarative run configuration.
//!
//! A single TOML document selects a command, the operator coefficients, the
//! domain, the problem data, solver tolerances, and output paths. Environment
//! variables prefixed `INFINILAB_` override individual keys before
//! validation, with `__` separating nesting levels:
//!
//! ```text
//! INFINILAB_OPERATOR__GAMMA=2.0
//! INFINILAB_SOLVER__TOL_RESIDUAL=1e-10
//! INFINILAB_OUTPUT__DIR=/tmp/run7
//! ```
//!
//! Every config is validated up front — an invalid document is rejected
//! before any grid is built. The resolved config is serialized verbatim into
//! each run's metadata file, so an artifact directory always records exactly
//! what produced it.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Sampler, Shape, VectorSampler};
use crate::oracles::RadialProfile;
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Solve,
    Eigen,
    Kpp,
    Liouville,
    OracleCheck,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandName::Solve => "solve",
            CommandName::Eigen => "eigen",
            CommandName::Kpp => "kpp",
            CommandName::Liouville => "liouville",
            CommandName::OracleCheck => "oracle-check",
        };
        f.write_str(s)
    }
}

// ---------------------------------------------------------------------------
// Scalar and vector coefficient specs.
// ---------------------------------------------------------------------------

/// Closed-form scalar coefficient, resolvable to a [`Sampler`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FnSpec {
    Zero,
    Constant { value: f64 },
    /// `coeff * |x|^power`.
    RadialPower { coeff: f64, power: f64 },
    /// `amp * exp(-k |x|^2)`.
    Gaussian { amp: f64, k: f64 },
    /// `amp * exp(-1 / (1 - (eps |x|)^2))` on `|x| < 1/eps`, zero outside.
    Bump { amp: f64, eps: f64 },
    /// `1 / (1 + |x|^2)`.
    RationalDecay,
    /// `inside` on `|x| <= at`, `outside` beyond.
    Step { at: f64, inside: f64, outside: f64 },
}

impl Default for FnSpec {
    fn default() -> Self {
        FnSpec::Zero
    }
}

impl FnSpec {
    pub fn sampler(&self) -> Sampler {
        match self.clone() {
            FnSpec::Zero => Sampler::zero(),
            FnSpec::Constant { value } => Sampler::constant(value),
            FnSpec::RadialPower { coeff, power } => {
                Sampler::radial("radial-power", [0.0; 3], move |r| coeff * r.powf(power))
            }
            FnSpec::Gaussian { amp, k } => {
                Sampler::radial("gaussian", [0.0; 3], move |r| amp * (-k * r * r).exp())
            }
            FnSpec::Bump { amp, eps } => Sampler::radial("bump", [0.0; 3], move |r| {
                let s = 1.0 - (eps * r) * (eps * r);
                if s > 0.0 {
                    amp * (-1.0 / s).exp()
                } else {
                    0.0
                }
            }),
            FnSpec::RationalDecay => {
                Sampler::radial("rational-decay", [0.0; 3], |r| 1.0 / (1.0 + r * r))
            }
            FnSpec::Step { at, inside, outside } => {
                Sampler::radial("step", [0.0; 3], move |r| if r <= at { inside } else { outside })
            }
        }
    }

    /// Sup of `|f|` over the ball `|x| <= radius`, when the form admits one.
    pub fn abs_sup_within(&self, radius: f64) -> Option<f64> {
        match self {
            FnSpec::Zero => Some(0.0),
            FnSpec::Constant { value } => Some(value.abs()),
            FnSpec::RadialPower { coeff, power } => {
                if *power >= 0.0 {
                    Some(coeff.abs() * radius.powf(*power))
                } else {
                    None
                }
            }
            FnSpec::Gaussian { amp, .. } => Some(amp.abs()),
            FnSpec::Bump { amp, .. } => Some(amp.abs() * (-1.0f64).exp()),
            FnSpec::RationalDecay => Some(1.0),
            FnSpec::Step { inside, outside, .. } => Some(inside.abs().max(outside.abs())),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FnSpec::Zero)
    }
}

/// Closed-form drift coefficient, resolvable to a [`VectorSampler`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriftSpec {
    Zero,
    /// Constant vector (padded with zeros beyond the domain dimension).
    Constant { vector: Vec<f64> },
    /// `q = growth * x / |x|^2`, so `q . x = growth` at every point.
    RadialGrowth { growth: f64 },
    /// Outward radial field `coeff * |x|^power * x/|x|`.
    RadialPower { coeff: f64, power: f64 },
    /// `strength * x / (1 + |x|^2)`: bounded drift whose radial growth
    /// `(q . x)_+` climbs to `strength`.
    Saturating { strength: f64 },
}

impl Default for DriftSpec {
    fn default() -> Self {
        DriftSpec::Zero
    }
}

impl DriftSpec {
    pub fn sampler(&self) -> VectorSampler {
        match self.clone() {
            DriftSpec::Zero => VectorSampler::zero(),
            DriftSpec::Constant { vector } => {
                let mut v = [0.0; 3];
                for (a, c) in vector.iter().take(3).enumerate() {
                    v[a] = *c;
                }
                VectorSampler::constant(v)
            }
            DriftSpec::RadialGrowth { growth } => {
                VectorSampler::radial_outward("radial-growth", move |r| growth / r.max(1e-300))
            }
            DriftSpec::RadialPower { coeff, power } => {
                VectorSampler::radial_outward("radial-power", move |r| coeff * r.powf(power))
            }
            DriftSpec::Saturating { strength } => {
                VectorSampler::radial_outward("saturating", move |r| strength * r / (1.0 + r * r))
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match self {
            DriftSpec::Constant { vector } if vector.len() > 3 => {
                Err(invalid("drift vector has more than 3 components"))
            }
            _ => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// Operator, domain, solver, output blocks.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorBlock {
    /// Homogeneity parameter of the operator family, in [0, 2].
    pub gamma: f64,
    pub drift: DriftSpec,
    /// Zeroth-order coefficient `c(x)` of the power reaction
    /// `c(x) sign(u) |u|^{3-gamma}` (solve) or the potential (eigen).
    pub potential: FnSpec,
}

impl Default for OperatorBlock {
    fn default() -> Self {
        OperatorBlock {
            gamma: 0.0,
            drift: DriftSpec::Zero,
            potential: FnSpec::Zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeSpec {
    Ball {
        #[serde(default)]
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        #[serde(default)]
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    Rect {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

fn pad3(v: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (a, c) in v.iter().take(3).enumerate() {
        out[a] = *c;
    }
    out
}

impl ShapeSpec {
    pub fn to_shape(&self, dim: usize) -> Result<Shape, ConfigError> {
        let shape = match self {
            ShapeSpec::Ball { center, radius } => {
                if center.len() > 3 {
                    return Err(invalid("ball center has more than 3 components"));
                }
                Shape::Ball {
                    center: pad3(center),
                    radius: *radius,
                }
            }
            ShapeSpec::Annulus { center, inner, outer } => {
                if center.len() > 3 {
                    return Err(invalid("annulus center has more than 3 components"));
                }
                Shape::Annulus {
                    center: pad3(center),
                    inner: *inner,
                    outer: *outer,
                }
            }
            ShapeSpec::Rect { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(invalid(format!(
                        "rect bounds must have exactly dim = {dim} components"
                    )));
                }
                let mut l = pad3(lo);
                let mut h = pad3(hi);
                for a in dim..3 {
                    l[a] = 0.0;
                    h[a] = 0.0;
                }
                Shape::Rect { lo: l, hi: h }
            }
        };
        shape
            .validate(dim)
            .map_err(|e| invalid(format!("domain shape: {e}")))?;
        Ok(shape)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainBlock {
    pub dim: usize,
    pub h: f64,
    /// Wide-stencil order: arms reach lattice neighbors up to this
    /// Chebyshev distance.
    pub stencil: usize,
    pub shape: ShapeSpec,
}

impl Default for DomainBlock {
    fn default() -> Self {
        DomainBlock {
            dim: 1,
            h: 0.05,
            stencil: 1,
            shape: ShapeSpec::Ball {
                center: vec![],
                radius: 1.0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub tol_residual: f64,
    pub max_sweeps: usize,
    pub cfl_safety: f64,
    pub sigma: f64,
    pub blowup_cap: f64,
    pub outer_cap: usize,
    pub parallel_threshold: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverConfig::default().into()
    }
}

impl From<SolverConfig> for SolverBlock {
    fn from(c: SolverConfig) -> Self {
        SolverBlock {
            tol_residual: c.tol_residual,
            max_sweeps: c.max_sweeps,
            cfl_safety: c.cfl_safety,
            sigma: c.sigma,
            blowup_cap: c.blowup_cap,
            outer_cap: c.outer_cap,
            parallel_threshold: c.parallel_threshold,
        }
    }
}

impl From<&SolverBlock> for SolverConfig {
    fn from(b: &SolverBlock) -> Self {
        SolverConfig {
            tol_residual: b.tol_residual,
            max_sweeps: b.max_sweeps,
            cfl_safety: b.cfl_safety,
            sigma: b.sigma,
            blowup_cap: b.blowup_cap,
            outer_cap: b.outer_cap,
            parallel_threshold: b.parallel_threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// Artifact directory; the CLI `--out` flag overrides it.
    pub dir: String,
    pub field_file: String,
    pub trace_file: String,
    pub metadata_file: String,
    /// Tabular artifacts (oracle tables, experiment stages).
    pub table_file: String,
    pub emit_trace: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: "out".into(),
            field_file: "field.csv".into(),
            trace_file: "trace.csv".into(),
            metadata_file: "metadata.json".into(),
            table_file: "table.csv".into(),
            emit_trace: true,
        }
    }
}

// ---------------------------------------------------------------------------
// Problem blocks, one per command.
// ---------------------------------------------------------------------------

/// Oracle profile selection, mirroring the closed-form radial profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileSpec {
    Power { alpha: f64 },
    Exponential { a: f64, r0: f64 },
    Gaussian { k: f64, r_outer: f64 },
    Bump { eps: f64 },
    RationalDecay,
}

impl ProfileSpec {
    pub fn to_profile(&self) -> RadialProfile {
        match *self {
            ProfileSpec::Power { alpha } => RadialProfile::Power { alpha },
            ProfileSpec::Exponential { a, r0 } => RadialProfile::Exponential { a, r0 },
            ProfileSpec::Gaussian { k, r_outer } => RadialProfile::Gaussian { k, r_outer },
            ProfileSpec::Bump { eps } => RadialProfile::Bump { eps },
            ProfileSpec::RationalDecay => RadialProfile::RationalDecay,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProfileSpec::Power { .. } => "power",
            ProfileSpec::Exponential { .. } => "exponential",
            ProfileSpec::Gaussian { .. } => "gaussian",
            ProfileSpec::Bump { .. } => "bump",
            ProfileSpec::RationalDecay => "rational-decay",
        }
    }
}

fn default_oracle_profiles() -> Vec<ProfileSpec> {
    vec![
        ProfileSpec::Power { alpha: 4.0 / 3.0 },
        ProfileSpec::Exponential { a: 1.0, r0: 2.0 },
        ProfileSpec::Gaussian { k: 1.0, r_outer: 2.0 },
        ProfileSpec::Bump { eps: 0.4 },
        ProfileSpec::RationalDecay,
    ]
}

fn default_gammas() -> Vec<f64> {
    vec![0.0, 1.0, 2.0]
}

fn default_hs() -> Vec<f64> {
    vec![1.0 / 16.0, 1.0 / 32.0]
}

fn default_annulus() -> (f64, f64) {
    (0.5, 2.0)
}
fn default_oracle_inner() -> f64 {
    default_annulus().0
}
fn default_oracle_outer() -> f64 {
    default_annulus().1
}
fn default_random_radii() -> usize {
    8
}
fn default_bracket_tol() -> f64 {
    0.04
}
fn default_max_doublings() -> usize {
    4
}
fn default_inner_fraction() -> f64 {
    0.5
}
fn default_doubling_gap_tol() -> f64 {
    2e-3
}
fn default_theta_alpha() -> f64 {
    -0.5
}
fn default_one() -> f64 {
    1.0
}
fn default_osc_tol() -> f64 {
    1e-6
}
fn default_sharpness_radius() -> f64 {
    3.0
}
fn default_sharpness_tol() -> f64 {
    1e-2
}
fn default_decay_threshold() -> f64 {
    1e-3
}

/// Rigidity experiment selection for the `liouville` command. The operator
/// block supplies `gamma` and (where used) the drift; the domain block
/// supplies `dim` and `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum LiouvilleSpec {
    /// Decreasing-power subsolution certificate on an annulus.
    Theta {
        #[serde(default = "default_theta_alpha")]
        alpha: f64,
        #[serde(default = "default_one")]
        eps: f64,
        #[serde(default = "default_one")]
        grad_coeff: f64,
        #[serde(default = "default_one")]
        inner: f64,
        #[serde(default = "default_sharpness_radius")]
        outer: f64,
    },
    /// Growing-annulus constancy trace under a drift growth certificate.
    Constancy {
        envelope_bound: f64,
        #[serde(default = "default_one")]
        r_in: f64,
        outers: Vec<f64>,
        #[serde(default = "default_osc_tol")]
        osc_tol: f64,
    },
    /// Bounded nonconstant supersolution at drift growth 4.
    Sharpness {
        #[serde(default = "default_sharpness_radius")]
        radius: f64,
        #[serde(default = "default_sharpness_tol")]
        tol: f64,
    },
    /// Sign decay under strong absorption `c u_+^beta`.
    Absorption {
        beta: f64,
        c_value: f64,
        #[serde(default)]
        drift_growth_sup: f64,
        radius: f64,
        #[serde(default)]
        seed: FnSpec,
        kappas: Vec<f64>,
        #[serde(default = "default_decay_threshold")]
        threshold: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemBlock {
    /// Dirichlet problem `L u + c(x) sign(u)|u|^{3-gamma} = rhs` with the
    /// potential taken from the operator block (omit it for `L u = rhs`).
    Dirichlet {
        #[serde(default)]
        rhs: FnSpec,
        #[serde(default)]
        boundary: FnSpec,
        /// Start level for the relaxation; defaults to the boundary data.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start_level: Option<f64>,
    },
    /// Principal Dirichlet eigenvalue of `L + (c + lambda) |.|^{3-gamma}`.
    Eigen {
        #[serde(default = "default_bracket_tol")]
        bracket_tol: f64,
    },
    /// KPP steady states `L u + u^{3-gamma} (a(x) - u) = 0`, on the domain
    /// ball or on a doubling exhaustion of the whole space.
    Kpp {
        carrying: FnSpec,
        /// Sup of `|a|`; required when the spec form has no closed bound.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        carrying_sup: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start_level: Option<f64>,
        #[serde(default)]
        whole_space: bool,
        #[serde(default = "default_max_doublings")]
        max_doublings: usize,
        #[serde(default = "default_inner_fraction")]
        inner_fraction: f64,
        #[serde(default = "default_doubling_gap_tol")]
        doubling_gap_tol: f64,
    },
    Liouville(LiouvilleSpec),
    /// Discrete-vs-closed-form error table over profiles and gammas, plus a
    /// seeded finite-difference cross-check of the closed forms themselves.
    OracleCheck {
        #[serde(default = "default_oracle_profiles")]
        profiles: Vec<ProfileSpec>,
        #[serde(default = "default_gammas")]
        gammas: Vec<f64>,
        #[serde(default = "default_hs")]
        hs: Vec<f64>,
        #[serde(default = "default_oracle_inner")]
        inner: f64,
        #[serde(default = "default_oracle_outer")]
        outer: f64,
        #[serde(default = "default_random_radii")]
        random_radii: usize,
    },
}

impl ProblemBlock {
    pub fn command(&self) -> CommandName {
        match self {
            ProblemBlock::Dirichlet { .. } => CommandName::Solve,
            ProblemBlock::Eigen { .. } => CommandName::Eigen,
            ProblemBlock::Kpp { .. } => CommandName::Kpp,
            ProblemBlock::Liouville(_) => CommandName::Liouville,
            ProblemBlock::OracleCheck { .. } => CommandName::OracleCheck,
        }
    }
}

// ---------------------------------------------------------------------------
// The top-level document.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandName,
    #[serde(default)]
    pub operator: OperatorBlock,
    #[serde(default)]
    pub domain: DomainBlock,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl RunConfig {
    /// Ready-to-run defaults for each command, used when no config file is
    /// given.
    pub fn default_for(command: CommandName) -> RunConfig {
        let mut cfg = RunConfig {
            command,
            operator: OperatorBlock::default(),
            domain: DomainBlock::default(),
            problem: ProblemBlock::OracleCheck {
                profiles: default_oracle_profiles(),
                gammas: default_gammas(),
                hs: default_hs(),
                inner: default_oracle_inner(),
                outer: default_oracle_outer(),
                random_radii: default_random_radii(),
            },
            solver: SolverBlock::default(),
            output: OutputBlock::default(),
        };
        match command {
            CommandName::OracleCheck => {}
            CommandName::Solve => {
                // L u = -1 on the unit interval, zero boundary data.
                cfg.problem = ProblemBlock::Dirichlet {
                    rhs: FnSpec::Constant { value: -1.0 },
                    boundary: FnSpec::Zero,
                    start_level: None,
                };
                cfg.domain.h = 0.02;
            }
            CommandName::Eigen => {
                cfg.operator.gamma = 2.0;
                // Probe classification watches growth over fixed sweep
                // windows; the default budget resolves h = 1/32 comfortably.
                cfg.domain.h = 1.0 / 32.0;
                cfg.problem = ProblemBlock::Eigen {
                    bracket_tol: default_bracket_tol(),
                };
            }
            CommandName::Kpp => {
                cfg.domain.h = 0.125;
                cfg.domain.shape = ShapeSpec::Ball {
                    center: vec![],
                    radius: 8.0,
                };
                cfg.problem = ProblemBlock::Kpp {
                    carrying: FnSpec::Constant { value: 1.0 },
                    carrying_sup: None,
                    start_level: None,
                    whole_space: false,
                    max_doublings: default_max_doublings(),
                    inner_fraction: default_inner_fraction(),
                    doubling_gap_tol: default_doubling_gap_tol(),
                };
            }
            CommandName::Liouville => {
                cfg.domain.h = 1.0 / 32.0;
                cfg.problem = ProblemBlock::Liouville(LiouvilleSpec::Theta {
                    alpha: default_theta_alpha(),
                    eps: default_one(),
                    grad_coeff: default_one(),
                    inner: default_one(),
                    outer: default_sharpness_radius(),
                });
            }
        }
        cfg
    }

    /// The command's built-in configuration with `INFINILAB_` environment
    /// overrides applied, exactly as a loaded document receives them.
    pub fn default_for_env(
        command: CommandName,
        env: impl Iterator<Item = (String, String)>,
    ) -> Result<RunConfig, ConfigError> {
        let text = toml::to_string(&Self::default_for(command))
            .map_err(|e| invalid(format!("default config serialization: {e}")))?;
        Self::from_toml_str(&text, env)
    }

    /// Parses a TOML document, applies `INFINILAB_` environment overrides,
    /// and validates.
    pub fn from_toml_str(
        text: &str,
        env: impl Iterator<Item = (String, String)>,
    ) -> Result<RunConfig, ConfigError> {
        let mut table: toml::Table = toml::from_str(text)?;
        apply_env_overrides(&mut table, env);
        let cfg: RunConfig = toml::Value::Table(table).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config file, with overrides from the process
    /// environment.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, std::env::vars())
    }

    pub fn solver_config(&self) -> SolverConfig {
        (&self.solver).into()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.domain;
        if !(1..=3).contains(&d.dim) {
            return Err(invalid(format!("domain.dim {} (need 1..=3)", d.dim)));
        }
        if !(d.h > 0.0 && d.h.is_finite()) {
            return Err(invalid(format!("domain.h {}", d.h)));
        }
        if !(1..=4).contains(&d.stencil) {
            return Err(invalid(format!("domain.stencil {} (need 1..=4)", d.stencil)));
        }
        d.shape.to_shape(d.dim)?;

        let o = &self.operator;
        if !(0.0..=2.0).contains(&o.gamma) {
            return Err(invalid(format!("operator.gamma {} (need [0, 2])", o.gamma)));
        }
        o.drift.validate()?;

        let s = &self.solver;
        if !(s.tol_residual > 0.0) {
            return Err(invalid("solver.tol_residual must be positive"));
        }
        if s.max_sweeps == 0 || s.outer_cap == 0 {
            return Err(invalid("solver.max_sweeps and solver.outer_cap must be >= 1"));
        }
        if !(s.cfl_safety > 0.0 && s.cfl_safety < 1.0) {
            return Err(invalid(format!(
                "solver.cfl_safety {} (need (0, 1))",
                s.cfl_safety
            )));
        }
        if !(s.blowup_cap > 0.0) {
            return Err(invalid("solver.blowup_cap must be positive"));
        }

        if self.output.dir.is_empty() {
            return Err(invalid("output.dir must be nonempty"));
        }

        if self.problem.command() != self.command {
            return Err(invalid(format!(
                "command '{}' does not match problem kind '{}'",
                self.command,
                self.problem.command()
            )));
        }
        self.validate_problem()
    }

    fn validate_problem(&self) -> Result<(), ConfigError> {
        match &self.problem {
            ProblemBlock::Dirichlet { .. } => Ok(()),
            ProblemBlock::Eigen { bracket_tol } => {
                if !(*bracket_tol > 0.0) {
                    return Err(invalid("eigen bracket_tol must be positive"));
                }
                Ok(())
            }
            ProblemBlock::Kpp {
                carrying,
                carrying_sup,
                start_level,
                max_doublings,
                inner_fraction,
                doubling_gap_tol,
                ..
            } => {
                let radius = match &self.domain.shape {
                    ShapeSpec::Ball { radius, .. } => *radius,
                    _ => return Err(invalid("kpp runs need a ball domain")),
                };
                if carrying_sup.is_none() && carrying.abs_sup_within(radius).is_none() {
                    return Err(invalid(
                        "kpp carrying profile has no closed sup bound; set carrying_sup",
                    ));
                }
                if let Some(sup) = carrying_sup {
                    if !(*sup >= 0.0) {
                        return Err(invalid("kpp carrying_sup must be >= 0"));
                    }
                }
                if let Some(level) = start_level {
                    if !(*level > 0.0) {
                        return Err(invalid("kpp start_level must be positive"));
                    }
                }
                if *max_doublings > 12 {
                    return Err(invalid("kpp max_doublings > 12 is not supported"));
                }
                if !(*inner_fraction > 0.0 && *inner_fraction < 1.0) {
                    return Err(invalid("kpp inner_fraction must lie in (0, 1)"));
                }
                if !(*doubling_gap_tol > 0.0) {
                    return Err(invalid("kpp doubling_gap_tol must be positive"));
                }
                Ok(())
            }
            ProblemBlock::Liouville(spec) => self.validate_liouville(spec),
            ProblemBlock::OracleCheck {
                profiles,
                gammas,
                hs,
                inner,
                outer,
                random_radii,
            } => {
                if profiles.is_empty() || gammas.is_empty() || hs.is_empty() {
                    return Err(invalid("oracle-check needs profiles, gammas, and hs"));
                }
                for g in gammas {
                    if !(0.0..=2.0).contains(g) {
                        return Err(invalid(format!("oracle-check gamma {g} (need [0, 2])")));
                    }
                }
                for h in hs {
                    if !(*h > 0.0 && *h < (outer - inner) / 4.0) {
                        return Err(invalid(format!("oracle-check h {h}")));
                    }
                }
                if !(*inner > 0.0 && outer > inner) {
                    return Err(invalid("oracle-check annulus must satisfy 0 < inner < outer"));
                }
                if *random_radii > 64 {
                    return Err(invalid("oracle-check random_radii > 64 is not supported"));
                }
                Ok(())
            }
        }
    }

    fn validate_liouville(&self, spec: &LiouvilleSpec) -> Result<(), ConfigError> {
        match spec {
            LiouvilleSpec::Theta {
                alpha,
                eps,
                grad_coeff,
                inner,
                outer,
            } => {
                if !(*alpha > -1.0 && *alpha < 0.0) {
                    return Err(invalid(format!("theta alpha {alpha} (need (-1, 0))")));
                }
                if !(*eps > 0.0 && *inner >= *eps && *outer > *inner) {
                    return Err(invalid("theta needs 0 < eps <= inner < outer"));
                }
                if *grad_coeff != 0.0 && *grad_coeff != 1.0 {
                    return Err(invalid("theta grad_coeff must be 0 or 1"));
                }
                Ok(())
            }
            LiouvilleSpec::Constancy {
                envelope_bound,
                r_in,
                outers,
                osc_tol,
            } => {
                if !(*envelope_bound >= 0.0 && *envelope_bound < 1.0) {
                    return Err(invalid("constancy envelope_bound must lie in [0, 1)"));
                }
                if !(*r_in > 0.0) || outers.is_empty() {
                    return Err(invalid("constancy needs r_in > 0 and outer radii"));
                }
                for r in outers {
                    if !(*r > 2.0 * r_in) {
                        return Err(invalid(format!(
                            "constancy outer radius {r} must exceed 2 r_in"
                        )));
                    }
                }
                if !(*osc_tol >= 0.0) {
                    return Err(invalid("constancy osc_tol must be >= 0"));
                }
                Ok(())
            }
            LiouvilleSpec::Sharpness { radius, tol } => {
                if !(*radius > 0.0 && *tol > 0.0) {
                    return Err(invalid("sharpness needs positive radius and tol"));
                }
                Ok(())
            }
            LiouvilleSpec::Absorption {
                beta,
                c_value,
                drift_growth_sup,
                radius,
                kappas,
                threshold,
                ..
            } => {
                if !(*beta >= 1.0 && *beta < 3.0 - self.operator.gamma) {
                    return Err(invalid(format!(
                        "absorption beta {beta} (need [1, 3 - gamma))"
                    )));
                }
                if !(*c_value < 0.0) {
                    return Err(invalid("absorption c_value must be negative"));
                }
                if !(*drift_growth_sup >= 0.0) {
                    return Err(invalid("absorption drift_growth_sup must be >= 0"));
                }
                if !(*radius > 0.0) || kappas.is_empty() {
                    return Err(invalid("absorption needs a radius and kappa stages"));
                }
                if !(*threshold > 0.0) {
                    return Err(invalid("absorption threshold must be positive"));
                }
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Environment overrides.
// ---------------------------------------------------------------------------

pub const ENV_PREFIX: &str = "INFINILAB_";

/// Applies `INFINILAB_SECTION__KEY=value` overrides onto a parsed TOML tree.
/// Key segments are lowercased; values are parsed as TOML scalars (numbers,
/// booleans, arrays, inline tables) and fall back to strings.
pub fn apply_env_overrides(
    table: &mut toml::Table,
    env: impl Iterator<Item = (String, String)>,
) {
    let mut overrides: Vec<(String, String)> = env
        .filter_map(|(k, v)| {
            k.strip_prefix(ENV_PREFIX)
                .map(|rest| (rest.to_string(), v))
        })
        .collect();
    // Fixed application order keeps runs reproducible regardless of how the
    // process enumerates its environment.
    overrides.sort();
    for (key, raw) in overrides {
        let path: Vec<String> = key.split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.iter().any(|s| s.is_empty()) {
            continue;
        }
        set_path(table, &path, parse_env_value(&raw));
    }
}

fn parse_env_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&probe) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) {
    if path.len() == 1 {
        table.insert(path[0].clone(), value);
        return;
    }
    let entry = table
        .entry(path[0].clone())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if !entry.is_table() {
        *entry = toml::Value::Table(toml::Table::new());
    }
    if let toml::Value::Table(inner) = entry {
        set_path(inner, &path[1..], value);
    }
}
