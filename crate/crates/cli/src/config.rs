//! Experiment configuration files (TOML, or JSON by extension).
//!
//! ```toml
//! seed = 7
//! comparisons = ["vs_cn", "vs_lm", "to_opt"]
//!
//! [objective]
//! family = "gauss_quad"
//! n = 10
//!
//! [solver]
//! gamma = 0.1
//! horizon = 50.0
//!
//! [[sweep]]
//! eps = { family = "power", c0 = 1.0, a = 1 }
//! alpha = { family = "zero" }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vmlab_core::objectives::{Family, QuadraticSpec};
use vmlab_core::schedules::{Role, Schedule};

pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_N: usize = 100;
pub const DEFAULT_KAPPA: f64 = 100.0;
/// Largest eigenvalue of the default log-spaced spectrum.
pub const DEFAULT_LAMBDA_MAX: f64 = 10.0;
/// Shift applied to the default spectrum of `gauss_quad` so that the
/// Gaussian bump cannot break convexity.
pub const GAUSS_SPECTRUM_SHIFT: f64 = 3.0;
pub const DEFAULT_HORIZON: f64 = 50.0;
pub const DEFAULT_RATE_HORIZON: f64 = 200.0;

/// A configuration error, with the 1-based line of the offending key when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn at(src: &str, key: &str, message: impl Into<String>) -> Self {
        ConfigError { message: message.into(), line: line_of(src, key) }
    }
}

// First line assigning `key`, as `key =` or inside an inline table.
fn line_of(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let l = l.trim_start();
            let quoted = format!("\"{key}\"");
            let bare = l.strip_prefix(key).or_else(|| l.strip_prefix(quoted.as_str()));
            bare.is_some_and(|rest| rest.trim_start().starts_with(['=', ':']))
        })
        .map(|i| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    VsCn,
    VsLm,
    ToOpt,
    Bounds,
    Lg,
    Classify,
}

impl Comparison {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::VsCn => "vs_cn",
            Comparison::VsLm => "vs_lm",
            Comparison::ToOpt => "to_opt",
            Comparison::Bounds => "bounds",
            Comparison::Lg => "lg",
            Comparison::Classify => "classify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum X0Mode {
    /// Seeded uniform `±1` coordinates.
    Signs,
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub label: String,
    pub eps: Schedule,
    pub alpha: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveConfig {
    pub family: Family,
    pub spec: QuadraticSpec,
}

/// A validated configuration with every default resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub objective: ObjectiveConfig,
    pub sweep: Vec<SweepEntry>,
    pub gamma: f64,
    pub beta: f64,
    pub horizon: f64,
    pub x0: X0Mode,
    pub v0: Option<Vec<f64>>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub comparisons: Vec<Comparison>,
    pub strict: bool,
    pub write_trajectories: bool,
    /// Values that were filled in by default rather than given.
    pub defaulted: Vec<String>,
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.objective.spec.dim()
    }

    pub fn wants(&self, c: Comparison) -> bool {
        self.comparisons.contains(&c)
    }

    pub fn initial_state(&self) -> DVector<f64> {
        make_x0(&self.x0, self.dim(), self.seed)
    }

    pub fn initial_velocity(&self) -> DVector<f64> {
        match &self.v0 {
            Some(v) => DVector::from_column_slice(v),
            None => DVector::zeros(self.dim()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    objective: RawObjective,
    #[serde(default)]
    solver: RawSolver,
    x0: Option<X0Mode>,
    v0: Option<Vec<f64>>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    comparisons: Option<Vec<Comparison>>,
    #[serde(default)]
    sweep: Vec<RawSweep>,
    strict: Option<bool>,
    write_trajectories: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    family: Family,
    n: Option<usize>,
    kappa: Option<f64>,
    spectrum: Option<Vec<f64>>,
    matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    gamma: Option<f64>,
    beta: Option<f64>,
    horizon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    label: Option<String>,
    eps: Schedule,
    #[serde(default = "zero")]
    alpha: Schedule,
}

fn zero() -> Schedule {
    Schedule::Zero
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { message: format!("cannot read {}: {e}", path.display()), line: None })?;
    let json = path.extension().is_some_and(|e| e == "json");
    parse_str(&src, json)
}

/// Parses configuration text; `json` selects JSON instead of TOML.
pub fn parse_str(src: &str, json: bool) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = if json {
        serde_json::from_str(src).map_err(|e| ConfigError { message: e.to_string(), line: Some(e.line()) })?
    } else {
        toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
            ConfigError { message: e.message().to_string(), line }
        })?
    };
    resolve(raw, src)
}

fn resolve(raw: RawConfig, src: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut defaulted = Vec::new();
    let o = raw.objective;
    let spec = match (o.spectrum, o.matrix) {
        (Some(_), Some(_)) => return Err(ConfigError::at(src, "matrix", "give either spectrum or matrix, not both")),
        (Some(l), None) => QuadraticSpec::Spectrum(l),
        (None, Some(m)) => QuadraticSpec::Matrix(m),
        (None, None) => {
            let n = o.n.unwrap_or_else(|| {
                defaulted.push(format!("n = {DEFAULT_N}"));
                DEFAULT_N
            });
            let kappa = o.kappa.unwrap_or_else(|| {
                defaulted.push(format!("kappa = {DEFAULT_KAPPA}"));
                DEFAULT_KAPPA
            });
            if n == 0 {
                return Err(ConfigError::at(src, "n", "n must be at least 1"));
            }
            if !(kappa >= 1.0) {
                return Err(ConfigError::at(src, "kappa", format!("kappa must be >= 1, got {kappa}")));
            }
            defaulted.push("spectrum: log-spaced on [lambda_max/kappa, lambda_max]".into());
            let base = QuadraticSpec::log_spaced(n, kappa, DEFAULT_LAMBDA_MAX);
            match (o.family, base) {
                (Family::GaussQuad, QuadraticSpec::Spectrum(l)) => {
                    defaulted.push(format!("spectrum shifted by {GAUSS_SPECTRUM_SHIFT} for gauss_quad"));
                    QuadraticSpec::Spectrum(l.into_iter().map(|v| v + GAUSS_SPECTRUM_SHIFT).collect())
                }
                (_, s) => s,
            }
        }
    };
    if let Some(n) = o.n {
        if n != spec.dim() {
            return Err(ConfigError::at(
                src,
                "n",
                format!("n = {n} disagrees with the spectrum/matrix dimension {}", spec.dim()),
            ));
        }
    }
    spec.eigen().map_err(|e| ConfigError::at(src, "spectrum", e.to_string()).or_line(src, "matrix"))?;

    let gamma = positive(src, "gamma", raw.solver.gamma, DEFAULT_GAMMA, &mut defaulted)?;
    let beta = positive(src, "beta", raw.solver.beta, DEFAULT_BETA, &mut defaulted)?;
    let horizon = positive(src, "horizon", raw.solver.horizon, DEFAULT_HORIZON, &mut defaulted)?;
    if horizon < gamma {
        return Err(ConfigError::at(src, "horizon", format!("horizon {horizon} is shorter than gamma {gamma}")));
    }

    let n = spec.dim();
    let x0 = raw.x0.unwrap_or_else(|| {
        defaulted.push("x0 mode = signs".into());
        X0Mode::Signs
    });
    if let X0Mode::Explicit { values } = &x0 {
        if values.len() != n {
            return Err(ConfigError::at(src, "values", format!("x0 has {} entries, expected {n}", values.len())));
        }
    }
    if let Some(v) = &raw.v0 {
        if v.len() != n {
            return Err(ConfigError::at(src, "v0", format!("v0 has {} entries, expected {n}", v.len())));
        }
    }

    let mut sweep = Vec::with_capacity(raw.sweep.len());
    for (i, s) in raw.sweep.into_iter().enumerate() {
        for (sched, role, key) in [(&s.eps, Role::Mass, "eps"), (&s.alpha, Role::Damping, "alpha")] {
            sched
                .check_structure(role, horizon)
                .map_err(|e| ConfigError::at(src, key, format!("sweep entry {}: {key}: {e}", i + 1)))?;
        }
        let label = s.label.unwrap_or_else(|| format!("eps={} alpha={}", s.eps.label(), s.alpha.label()));
        sweep.push(SweepEntry { label, eps: s.eps, alpha: s.alpha });
    }

    let comparisons = raw.comparisons.unwrap_or_else(|| {
        defaulted.push("comparisons = [vs_cn, vs_lm, to_opt]".into());
        vec![Comparison::VsCn, Comparison::VsLm, Comparison::ToOpt]
    });
    if comparisons.contains(&Comparison::Lg) && o.family != Family::Quadratic {
        return Err(ConfigError::at(src, "comparisons", "the lg comparison needs family = \"quadratic\""));
    }

    Ok(ExperimentConfig {
        objective: ObjectiveConfig { family: o.family, spec },
        sweep,
        gamma,
        beta,
        horizon,
        x0,
        v0: raw.v0,
        seed: raw.seed.unwrap_or(0),
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("runs")),
        comparisons,
        strict: raw.strict.unwrap_or(false),
        write_trajectories: raw.write_trajectories.unwrap_or(true),
        defaulted,
    })
}

impl ConfigError {
    fn or_line(mut self, src: &str, key: &str) -> Self {
        if self.line.is_none() {
            self.line = line_of(src, key);
        }
        self
    }
}

fn positive(
    src: &str,
    key: &str,
    v: Option<f64>,
    default: f64,
    defaulted: &mut Vec<String>,
) -> Result<f64, ConfigError> {
    match v {
        None => {
            defaulted.push(format!("{key} = {default}"));
            Ok(default)
        }
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(ConfigError::at(src, key, format!("{key} must be positive, got {x}"))),
    }
}

/// Initial point: seeded `±1` coordinates, or the explicit vector.
pub fn make_x0(mode: &X0Mode, n: usize, seed: u64) -> DVector<f64> {
    match mode {
        X0Mode::Signs => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            DVector::from_fn(n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
        }
        X0Mode::Explicit { values } => DVector::from_column_slice(values),
    }
}
