//! Experiment orchestration: integrates the CN, LM and VM runs of a sweep in
//! parallel, writes the comparison CSVs and assembles the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use log::{info, warn};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use vmlab_core::bounds::{
    distances, envelope_c35, envelope_t32, envelope_t36_shape, fit_constant, BoundEnvelope, BoundInputs, TheoremId,
};
use vmlab_core::integrators::{integrate, lyapunov_series, Scheme, SolverConfig, Trajectory};
use vmlab_core::objectives::{estimate_mu, make_objective, Family, Objective, QuadraticSpec, MU_FLOOR};
use vmlab_core::quadratic_lg::{classify_rates, closed_form_cn, closed_form_lm, eigenmodes, fit_ab, LG_TOL};
use vmlab_core::quadrature::QuadratureRule;
use vmlab_core::schedules::{
    check_a31, check_a35, check_a42, check_a46, AssumptionId, AssumptionReport, CheckGrid, Schedule, Status,
};

use crate::config::{Comparison, ConfigError, ExperimentConfig, SweepEntry, DEFAULT_RATE_HORIZON};
use crate::output::{header, write_json, write_table};

/// Environment variable capping the number of parallel runs.
pub const WORKERS_ENV: &str = "VMLAB_WORKERS";

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("assumption violated in strict mode: {0}")]
    Assumption(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    /// 2-D ill-conditioned quadratic: VM paths approach the CN path as eps0 shrinks.
    #[value(name = "fig1_right")]
    Fig1Right,
    /// Gaussian bump plus quadratic.
    Fig2,
    /// Log-sum-exp plus quadratic.
    Fig3,
    /// Degree-50 polynomial plus quadratic, with bound envelopes.
    Fig4,
    /// Rate trichotomy on a quadratic, with per-mode Liouville-Green curves.
    Fig5,
    /// Unit step size and unit geometric damping (outside the analysed regime).
    Fig6,
}

impl FigureId {
    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig1Right => "fig1_right",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }

    fn family(self) -> Option<Family> {
        match self {
            FigureId::Fig1Right | FigureId::Fig5 => Some(Family::Quadratic),
            FigureId::Fig2 => Some(Family::GaussQuad),
            FigureId::Fig3 => Some(Family::LogsumexpQuad),
            FigureId::Fig4 => Some(Family::Poly50Quad),
            FigureId::Fig6 => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub run: String,
    pub kind: String,
    /// Relative to the manifest directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub id: String,
    pub scheme: Scheme,
    pub label: String,
    pub eps: Schedule,
    pub alpha: Schedule,
    /// LM run sharing this run's damping.
    pub lm_reference: Option<String>,
    pub status: RunStatus,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAssumptions {
    pub label: String,
    pub reports: Vec<AssumptionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub figure: Option<String>,
    pub created: String,
    pub out_dir: PathBuf,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub gamma: f64,
    pub beta: f64,
    pub horizon: f64,
    /// Values filled in by default rather than configured.
    pub choices: Vec<String>,
    pub warnings: Vec<String>,
    pub assumptions: Vec<SweepAssumptions>,
    pub runs: Vec<RunEntry>,
    pub files: Vec<FileEntry>,
    pub wall_ms: f64,
}

impl RunManifest {
    pub fn failed(&self) -> bool {
        self.runs.iter().any(|r| r.status != RunStatus::Ok)
    }

    pub fn files_of(&self, kind: &str) -> impl Iterator<Item = &FileEntry> {
        let kind = kind.to_string();
        self.files.iter().filter(move |f| f.kind == kind)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// `(ε₀, a, optional (α₀, b))` for `ε₀/(t+1)^a` and `α₀/(t+1)^b`.
type PowerPair = (f64, f64, Option<(f64, f64)>);

fn power_sweep(pairs: &[PowerPair]) -> Vec<SweepEntry> {
    pairs
        .iter()
        .map(|&(c0, a, alpha)| {
            let eps = Schedule::power(c0, a);
            let alpha = alpha.map_or(Schedule::Zero, |(c, b)| Schedule::power(c, b));
            SweepEntry { label: format!("eps={} alpha={}", eps.label(), alpha.label()), eps, alpha }
        })
        .collect()
}

/// Default sweep of a figure: `ε₀/(t+1)^a` and `α₀/(t+1)^b` families with
/// `ε₀ = α₀ = 1`.
pub fn default_sweep(fig: FigureId) -> Vec<SweepEntry> {
    match fig {
        FigureId::Fig1Right => power_sweep(&[(1.0, 1.0, None), (0.1, 1.0, None), (0.01, 1.0, None)]),
        FigureId::Fig5 => power_sweep(&[
            (1.0, 1.0, None),
            (1.0, 2.0, None),
            (1.0, 3.0, Some((1.0, 1.0))),
            (1.0, 3.0, Some((1.0, 2.0))),
        ]),
        _ => power_sweep(&[
            (1.0, 0.0, None),
            (1.0, 1.0, None),
            (1.0, 2.0, None),
            (1.0, 3.0, None),
            (1.0, 3.0, Some((1.0, 1.0))),
            (1.0, 3.0, Some((1.0, 2.0))),
        ]),
    }
}

fn was_defaulted(cfg: &ExperimentConfig, key: &str) -> bool {
    cfg.defaulted.iter().any(|d| d.starts_with(&format!("{key} =")))
}

/// Applies a figure's presets to a configuration.
pub fn apply_figure(cfg: &ExperimentConfig, fig: FigureId) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    let mut cfg = cfg.clone();
    let mut warnings = Vec::new();
    if let Some(family) = fig.family() {
        if cfg.objective.family != family {
            return Err(ConfigError {
                message: format!(
                    "{} needs objective family {}, config has {}",
                    fig.as_str(),
                    family.as_str(),
                    cfg.objective.family.as_str()
                ),
                line: None,
            });
        }
    }
    if cfg.sweep.is_empty() {
        cfg.sweep = default_sweep(fig);
        cfg.defaulted.push(format!("sweep: default families for {}", fig.as_str()));
    }
    match fig {
        FigureId::Fig1Right => {
            if was_defaulted(&cfg, "n") {
                if let QuadraticSpec::Spectrum(l) = &cfg.objective.spec {
                    let (lo, hi) = (l[0], l[l.len() - 1]);
                    cfg.objective.spec = QuadraticSpec::Spectrum(vec![lo, hi]);
                    cfg.defaulted.push("n = 2 for the planar illustration".into());
                }
            }
            if cfg.dim() != 2 {
                return Err(ConfigError { message: "fig1_right needs a 2-D quadratic".into(), line: None });
            }
            if was_defaulted(&cfg, "comparisons") {
                cfg.comparisons = vec![Comparison::VsCn, Comparison::VsLm, Comparison::ToOpt];
            }
        }
        FigureId::Fig4 => {
            if was_defaulted(&cfg, "comparisons") {
                cfg.comparisons.push(Comparison::Bounds);
            }
        }
        FigureId::Fig5 => {
            if was_defaulted(&cfg, "horizon") {
                cfg.horizon = DEFAULT_RATE_HORIZON;
                cfg.defaulted.push(format!("horizon = {DEFAULT_RATE_HORIZON} for rate figures"));
            }
            if was_defaulted(&cfg, "comparisons") {
                cfg.comparisons.extend([Comparison::Lg, Comparison::Classify]);
            }
        }
        FigureId::Fig6 => {
            cfg.gamma = 1.0;
            cfg.beta = 1.0;
            let msg =
                "fig6 runs with gamma = beta = 1, outside the regime covered by the analysis; results are unvalidated";
            warn!("{msg}");
            warnings.push(msg.into());
        }
        FigureId::Fig2 | FigureId::Fig3 => {}
    }
    if was_defaulted(&cfg, "beta") {
        warnings.push("beta = 1 is a default choice, not a value taken from the experiments being reproduced".into());
    }
    Ok((cfg, warnings))
}

/// Creates `<root>/<label>-<timestamp>`, unique within `root`.
pub fn timestamped_dir(root: &Path, label: &str) -> anyhow::Result<PathBuf> {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.6f").to_string();
    let mut dir = root.join(format!("{label}-{stamp}"));
    let mut k = 1;
    while dir.exists() {
        dir = root.join(format!("{label}-{stamp}-{k}"));
        k += 1;
    }
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Runs a figure under a fresh timestamped directory of `cfg.output_dir`.
pub fn run_figure(cfg: &ExperimentConfig, fig: FigureId) -> Result<RunManifest, HarnessError> {
    let dir = timestamped_dir(&cfg.output_dir, fig.as_str())?;
    run_figure_in(cfg, fig, &dir)
}

/// Runs a figure, writing everything under `dir`.
pub fn run_figure_in(cfg: &ExperimentConfig, fig: FigureId, dir: &Path) -> Result<RunManifest, HarnessError> {
    let (cfg, warnings) = apply_figure(cfg, fig)?;
    if cfg.sweep.is_empty() {
        return Err(ConfigError { message: "empty sweep".into(), line: None }.into());
    }
    execute(&cfg, Some(fig), warnings, dir)
}

/// Runs the configured sweep as is, writing everything under `dir`.
pub fn run_integrate_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, HarnessError> {
    if cfg.sweep.is_empty() {
        return Err(ConfigError { message: "the config has no [[sweep]] entries".into(), line: None }.into());
    }
    execute(cfg, None, Vec::new(), dir)
}

/// Assumption reports of every sweep entry. On quadratics the eigenvalue
/// condition is checked for the extreme modes.
pub fn assumption_reports(cfg: &ExperimentConfig) -> anyhow::Result<Vec<SweepAssumptions>> {
    let grid = CheckGrid::geometric(cfg.gamma, cfg.horizon);
    let lambdas = cfg.objective.spec.eigen()?.0;
    let mut out = Vec::new();
    for s in &cfg.sweep {
        let mut reports =
            vec![check_a31(&s.eps, &s.alpha, &grid)?, check_a35(&s.eps, &s.alpha, &grid)?, check_a46(&s.eps, &s.alpha)];
        if cfg.objective.family == Family::Quadratic {
            for l in [lambdas[0], lambdas[lambdas.len() - 1]] {
                let mut r = check_a42(&s.eps, &s.alpha, l, cfg.beta, &grid)?;
                r.note = format!("lambda = {l}; {}", r.note).trim_end_matches("; ").to_string();
                reports.push(r);
            }
        }
        out.push(SweepAssumptions { label: s.label.clone(), reports });
    }
    Ok(out)
}

/// Every violated assumption, labelled by sweep entry.
pub fn violations(reports: &[SweepAssumptions]) -> Vec<(AssumptionId, String)> {
    reports
        .iter()
        .flat_map(|s| {
            s.reports
                .iter()
                .filter(|r| r.status == Status::Violated)
                .map(move |r| (r.id, format!("{}: {:?} {}", s.label, r.id, r.note)))
        })
        .collect()
}

/// Violations that abort a strict run: the hypotheses of the explicit
/// distance envelopes. The others only disable LG curves or rate claims.
pub fn strict_violations(reports: &[SweepAssumptions]) -> Vec<String> {
    violations(reports)
        .into_iter()
        .filter(|(id, _)| matches!(id, AssumptionId::A31 | AssumptionId::A35))
        .map(|(_, msg)| msg)
        .collect()
}

struct RunSpec {
    id: String,
    scheme: Scheme,
    label: String,
    eps: Schedule,
    alpha: Schedule,
    lm_reference: Option<String>,
}

fn plan(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let mut specs = vec![RunSpec {
        id: "cn".into(),
        scheme: Scheme::CN,
        label: "continuous Newton".into(),
        eps: Schedule::Zero,
        alpha: Schedule::Zero,
        lm_reference: None,
    }];
    let mut dampings: Vec<Schedule> = Vec::new();
    for s in &cfg.sweep {
        if !dampings.contains(&s.alpha) {
            dampings.push(s.alpha.clone());
        }
    }
    for (j, a) in dampings.iter().enumerate() {
        specs.push(RunSpec {
            id: format!("lm_{j:02}"),
            scheme: Scheme::LM,
            label: format!("Levenberg-Marquardt alpha={}", a.label()),
            eps: Schedule::Zero,
            alpha: a.clone(),
            lm_reference: None,
        });
    }
    for (i, s) in cfg.sweep.iter().enumerate() {
        let j = dampings.iter().position(|a| *a == s.alpha).unwrap();
        specs.push(RunSpec {
            id: format!("vm_{i:02}"),
            scheme: Scheme::VM,
            label: s.label.clone(),
            eps: s.eps.clone(),
            alpha: s.alpha.clone(),
            lm_reference: Some(format!("lm_{j:02}")),
        });
    }
    specs
}

fn worker_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?;
        b = b.num_threads(n.max(1));
    }
    Ok(b.build()?)
}

struct Context2<'a> {
    cfg: &'a ExperimentConfig,
    obj: &'a dyn Objective,
    dir: &'a Path,
    x0: DVector<f64>,
    v0: DVector<f64>,
    x_star: DVector<f64>,
    x_star_known: bool,
}

fn execute(
    cfg: &ExperimentConfig,
    fig: Option<FigureId>,
    mut warnings: Vec<String>,
    dir: &Path,
) -> Result<RunManifest, HarnessError> {
    let started = Instant::now();
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let assumptions = assumption_reports(cfg)?;
    let fatal = strict_violations(&assumptions);
    if cfg.strict && !fatal.is_empty() {
        return Err(HarnessError::Assumption(fatal.join("; ")));
    }
    for (_, v) in violations(&assumptions) {
        warnings.push(format!("assumption violated: {v}"));
    }

    let obj = make_objective(cfg.objective.family, &cfg.objective.spec).context("building objective")?;
    let x0 = cfg.initial_state();
    let v0 = cfg.initial_velocity();
    let pool = worker_pool()?;
    let specs = plan(cfg);
    info!("running {} integrations in {}", specs.len(), dir.display());

    let results: Vec<(Result<Trajectory, String>, f64)> = pool.install(|| {
        specs
            .par_iter()
            .map(|s| {
                let t0 = Instant::now();
                let sc = SolverConfig {
                    gamma: cfg.gamma,
                    beta: cfg.beta,
                    horizon: cfg.horizon,
                    x0: x0.clone(),
                    v0: v0.clone(),
                    scheme: s.scheme,
                };
                let r = integrate(obj.as_ref(), &s.eps, &s.alpha, &sc).map_err(|e| e.to_string());
                (r, t0.elapsed().as_secs_f64() * 1e3)
            })
            .collect()
    });

    let (x_star, x_star_known) = match obj.minimizer() {
        Some(x) => (x, true),
        None => match &results[0].0 {
            Ok(cn) => {
                warnings.push("minimizer unknown: distances to the optimum use the final CN iterate".into());
                (cn.states.last().unwrap().clone(), false)
            }
            Err(_) => (DVector::zeros(cfg.dim()), false),
        },
    };
    let ctx = Context2 { cfg, obj: obj.as_ref(), dir, x0, v0, x_star, x_star_known };

    let mut runs = Vec::with_capacity(specs.len());
    for (s, (r, ms)) in specs.iter().zip(&results) {
        let status = match r {
            Ok(_) => RunStatus::Ok,
            Err(e) => {
                warn!("run {} failed: {e}", s.id);
                RunStatus::Failed { error: e.clone() }
            }
        };
        runs.push(RunEntry {
            id: s.id.clone(),
            scheme: s.scheme,
            label: s.label.clone(),
            eps: s.eps.clone(),
            alpha: s.alpha.clone(),
            lm_reference: s.lm_reference.clone(),
            status,
            wall_ms: *ms,
        });
    }

    let find = |id: &str| specs.iter().position(|s| s.id == id).and_then(|k| results[k].0.as_ref().ok());
    let outputs: Vec<anyhow::Result<(Vec<FileEntry>, Vec<String>)>> = pool.install(|| {
        specs
            .par_iter()
            .zip(&results)
            .map(|(s, (r, _))| match r {
                Ok(traj) => write_run(&ctx, s, traj, find("cn"), s.lm_reference.as_deref().and_then(find)),
                Err(_) => Ok((Vec::new(), Vec::new())),
            })
            .collect()
    });
    let mut files = Vec::new();
    for o in outputs {
        let (f, w) = o?;
        files.extend(f);
        warnings.extend(w);
    }

    let config_json = serde_json::to_value(cfg).context("serializing config")?;
    let digest = Sha256::digest(serde_json::to_vec(&config_json).context("serializing config")?);
    let manifest = RunManifest {
        tool: format!("vmlab {}", env!("CARGO_PKG_VERSION")),
        figure: fig.map(|f| f.as_str().to_string()),
        created: chrono::Local::now().to_rfc3339(),
        out_dir: dir.to_path_buf(),
        config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        config: config_json,
        gamma: cfg.gamma,
        beta: cfg.beta,
        horizon: cfg.horizon,
        choices: cfg.defaulted.clone(),
        warnings,
        assumptions,
        runs,
        files,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    write_json(&dir.join(MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

fn entry(run: &str, kind: &str, rel: String) -> FileEntry {
    FileEntry { run: run.into(), kind: kind.into(), path: PathBuf::from(rel) }
}

fn write_run(
    ctx: &Context2,
    s: &RunSpec,
    traj: &Trajectory,
    cn: Option<&Trajectory>,
    lm: Option<&Trajectory>,
) -> anyhow::Result<(Vec<FileEntry>, Vec<String>)> {
    let cfg = ctx.cfg;
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    let id = s.id.as_str();

    if cfg.write_trajectories {
        let rel = format!("trajectory/{id}.csv");
        let mut cols = vec!["t".to_string()];
        cols.extend((0..traj.dim()).map(|i| format!("x_{i}")));
        let rows =
            traj.times.iter().zip(&traj.states).map(|(&t, x)| std::iter::once(t).chain(x.iter().copied()).collect());
        write_table(&ctx.dir.join(&rel), &cols, rows)?;
        files.push(entry(id, "trajectory", rel));
    }

    if cfg.wants(Comparison::ToOpt) {
        let rel = format!("to_opt/{id}.csv");
        let u = lyapunov_series(traj, &s.eps, ctx.obj);
        let rows = (0..traj.len()).map(|k| {
            let x = &traj.states[k];
            vec![traj.times[k], u[k], ctx.obj.gradient(x).norm(), (x - &ctx.x_star).norm()]
        });
        write_table(&ctx.dir.join(&rel), &header(&["t", "U", "grad_norm", "dist_to_opt"]), rows)?;
        files.push(entry(id, "to_opt", rel));
    }

    if s.scheme != Scheme::VM {
        return Ok((files, warnings));
    }

    for (cmp, reference) in [(Comparison::VsCn, cn), (Comparison::VsLm, lm)] {
        if !cfg.wants(cmp) {
            continue;
        }
        let Some(reference) = reference else {
            warnings.push(format!("{id}: {} skipped, reference run failed", cmp.as_str()));
            continue;
        };
        let d = distances(&traj.states, &reference.states)?;
        let rel = format!("{}/{id}.csv", cmp.as_str());
        write_table(
            &ctx.dir.join(&rel),
            &header(&["t", "distance"]),
            traj.times.iter().zip(&d).map(|(&t, &d)| vec![t, d]),
        )?;
        files.push(entry(id, cmp.as_str(), rel));
    }

    if cfg.wants(Comparison::Bounds) {
        match write_bounds(ctx, s, traj, cn, lm) {
            Ok((f, w)) => {
                files.extend(f);
                warnings.extend(w);
            }
            Err(e) => warnings.push(format!("{id}: bounds skipped: {e}")),
        }
    }

    if cfg.wants(Comparison::Lg) {
        let (f, w) = write_lg(ctx, s, traj)?;
        files.extend(f);
        warnings.extend(w);
    }

    if cfg.wants(Comparison::Classify) {
        let rel = format!("classify/{id}.json");
        match classify_rates(&s.eps, &s.alpha, &traj.times) {
            Ok(rep) => {
                write_json(&ctx.dir.join(&rel), &rep)?;
                files.push(entry(id, "classify", rel));
            }
            Err(e) => warnings.push(format!("{id}: classification unavailable: {e}")),
        }
    }
    Ok((files, warnings))
}

#[derive(Serialize)]
struct EnvelopeMeta<'a> {
    run: &'a str,
    theorem: TheoremId,
    reference: &'a str,
    constants: &'a vmlab_core::bounds::EnvelopeConstants,
    inputs: &'a Option<BoundInputs>,
    advisory: bool,
    mu_source: &'a str,
    warnings: &'a [String],
    violations: usize,
}

fn write_envelope(
    ctx: &Context2,
    id: &str,
    tag: &str,
    reference: &str,
    mu_source: &str,
    env: &BoundEnvelope,
    d: &[f64],
) -> anyhow::Result<Vec<FileEntry>> {
    let rel = format!("bounds/{id}_{tag}.csv");
    let rows = (0..d.len()).map(|k| {
        let e = env.values[k];
        vec![env.times[k], d[k], e, if e > 0.0 { d[k] / e } else { f64::NAN }]
    });
    write_table(&ctx.dir.join(&rel), &header(&["t", "distance", "envelope", "ratio"]), rows)?;
    let meta_rel = format!("bounds/{id}_{tag}.meta.json");
    let violations = d.iter().zip(&env.values).filter(|(d, e)| **d > **e).count();
    let meta = EnvelopeMeta {
        run: id,
        theorem: env.theorem,
        reference,
        constants: &env.constants,
        inputs: &env.inputs,
        advisory: env.advisory,
        mu_source,
        warnings: &env.warnings,
        violations,
    };
    write_json(&ctx.dir.join(&meta_rel), &meta)?;
    Ok(vec![entry(id, "envelope", rel), entry(id, "envelope_meta", meta_rel)])
}

fn write_bounds(
    ctx: &Context2,
    s: &RunSpec,
    traj: &Trajectory,
    cn: Option<&Trajectory>,
    lm: Option<&Trajectory>,
) -> anyhow::Result<(Vec<FileEntry>, Vec<String>)> {
    let cfg = ctx.cfg;
    let id = s.id.as_str();
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    let rule = QuadratureRule::AdaptiveSimpson { tol: 1e-10 };
    let grid = CheckGrid::geometric(cfg.gamma, cfg.horizon);

    // Quadratics: the CN flow is x0·e^{−t/β} in closed form.
    let (reference, cn_states): (&str, Vec<DVector<f64>>) = if cfg.objective.family == Family::Quadratic {
        ("closed-form CN", traj.times.iter().map(|&t| &ctx.x0 * (-t / cfg.beta).exp()).collect())
    } else {
        let cn = cn.context("CN run failed")?;
        ("CN scheme", cn.states.clone())
    };
    let d_cn = distances(&traj.states, &cn_states)?;

    let (mu, mu_source, mut advisory) = match ctx.obj.exact_modulus().or(ctx.obj.mu_hint()) {
        Some(mu) => (mu, "analytic", false),
        None => (estimate_mu(ctx.obj, &traj.states, MU_FLOOR)?, "estimated on trajectory", true),
    };
    advisory |= !ctx.x_star_known;
    let a31 = check_a31(&s.eps, &s.alpha, &grid)?;
    advisory |= !a31.holds();
    let f_star = ctx.obj.value(&ctx.x_star);
    let eps0 = s.eps.initial();
    let inputs = BoundInputs {
        u0: 0.5 * eps0 * ctx.v0.norm_squared() + ctx.obj.value(&ctx.x0) - f_star,
        mu,
        beta: cfg.beta,
        c1: a31.c1.unwrap_or(f64::INFINITY),
        c2: a31.c2.unwrap_or(f64::INFINITY),
        eps0,
        v0_norm: ctx.v0.norm(),
    };

    let mut t32 = envelope_t32(&s.eps, &inputs, &traj.times, rule)?;
    t32.advisory = advisory;
    files.extend(write_envelope(ctx, id, "t32", reference, mu_source, &t32, &d_cn)?);
    match envelope_c35(&s.eps, &inputs, &traj.times) {
        Ok(mut c35) => {
            c35.advisory = advisory;
            files.extend(write_envelope(ctx, id, "c35", reference, mu_source, &c35, &d_cn)?);
        }
        Err(e) => warnings.push(format!("{id}: closed-form relaxation skipped: {e}")),
    }

    let shape = envelope_t36_shape(TheoremId::T36N, &s.eps, &s.alpha, cfg.beta, &traj.times, rule);
    let c = fit_constant(&d_cn, &shape.values)?;
    files.extend(write_envelope(ctx, id, "t36n", reference, "fitted", &shape.scaled(c), &d_cn)?);
    if let Some(lm) = lm {
        let d_lm = distances(&traj.states, &lm.states)?;
        let shape = envelope_t36_shape(TheoremId::T36LM, &s.eps, &s.alpha, cfg.beta, &traj.times, rule);
        let c = fit_constant(&d_lm, &shape.values)?;
        files.extend(write_envelope(ctx, id, "t36lm", "LM scheme", "fitted", &shape.scaled(c), &d_lm)?);
    }
    Ok((files, warnings))
}

fn write_lg(ctx: &Context2, s: &RunSpec, traj: &Trajectory) -> anyhow::Result<(Vec<FileEntry>, Vec<String>)> {
    let cfg = ctx.cfg;
    let id = s.id.as_str();
    let dec = eigenmodes(&cfg.objective.spec, cfg.beta, &s.eps, &s.alpha, &ctx.x0, &ctx.v0)?;
    let n = dec.modes.len();
    let mut idx = vec![0, n - 1];
    idx.dedup();
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    for i in idx {
        let mode = &dec.modes[i];
        let q = dec.q.column(i);
        let x_vm: Vec<f64> = traj.states.iter().map(|x| q.dot(x)).collect();
        let lg = fit_ab(mode).and_then(|a| a.tabulate(&traj.times));
        let lg = match lg {
            Ok(t) => Some(t),
            Err(e) => {
                warnings.push(format!("{id}: mode {i} (lambda = {}): LG unavailable: {e}", mode.lambda));
                None
            }
        };
        let rows = (0..traj.len()).map(|k| {
            let t = traj.times[k];
            let (v, lo, hi) =
                lg.as_ref().map_or((f64::NAN, f64::NAN, f64::NAN), |l| (l.value[k], l.lower[k], l.upper[k]));
            vec![t, x_vm[k], closed_form_cn(mode.x0, mode.beta, t), closed_form_lm(mode, t, LG_TOL), v, lo, hi]
        });
        let rel = format!("lg/{id}_mode{i}.csv");
        write_table(
            &ctx.dir.join(&rel),
            &header(&["t", "x_vm", "x_cn", "x_lm", "x_lg", "lg_lower", "lg_upper"]),
            rows,
        )?;
        files.push(entry(id, "lg", rel));
    }
    Ok((files, warnings))
}
