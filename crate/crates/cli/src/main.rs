use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use vmlab::config::parse_config;
use vmlab::harness::{
    assumption_reports, run_figure_in, run_integrate_in, strict_violations, timestamped_dir, FigureId, HarnessError,
    RunManifest,
};
use vmlab::rates::report_rates;
use vmlab_core::quadratic_lg::classify_rates;

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_ASSUMPTION: u8 = 4;

#[derive(Parser)]
#[command(name = "vmlab", version, about = "Variable-mass Newton flow experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a config and print the resolved values and assumption checks.
    Validate { config: PathBuf },
    /// Run the configured sweep.
    Integrate {
        config: PathBuf,
        /// Output directory; defaults to a timestamped directory under `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a figure preset.
    Figure {
        #[arg(value_enum)]
        id: FigureId,
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the predicted rate classification of every sweep entry.
    Classify { config: PathBuf },
    /// Fit empirical decay rates of a finished run.
    Rates {
        manifest: PathBuf,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

fn finish(r: Result<RunManifest, HarnessError>) -> ExitCode {
    match r {
        Ok(m) => {
            println!("{}", m.out_dir.join(vmlab::harness::MANIFEST_NAME).display());
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            if m.failed() {
                error!("at least one run diverged; see the manifest");
                ExitCode::from(EXIT_DIVERGED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(e),
    }
}

fn fail(e: HarnessError) -> ExitCode {
    error!("{e:#}");
    eprintln!("error: {e:#}");
    match e {
        HarnessError::Config(_) => ExitCode::from(EXIT_CONFIG),
        HarnessError::Assumption(_) => ExitCode::from(EXIT_ASSUMPTION),
        HarnessError::Other(_) => ExitCode::FAILURE,
    }
}

fn out_dir(out: Option<PathBuf>, root: &Path, label: &str) -> Result<PathBuf, HarnessError> {
    match out {
        Some(d) => Ok(d),
        None => Ok(timestamped_dir(root, label)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let load = |p: &Path| parse_config(p).map_err(HarnessError::from);
    match cli.cmd {
        Cmd::Validate { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            println!(
                "family {} dim {} gamma {} beta {} horizon {}",
                cfg.objective.family.as_str(),
                cfg.dim(),
                cfg.gamma,
                cfg.beta,
                cfg.horizon
            );
            for d in &cfg.defaulted {
                println!("default: {d}");
            }
            let reports = match assumption_reports(&cfg) {
                Ok(r) => r,
                Err(e) => return fail(e.into()),
            };
            for s in &reports {
                for r in &s.reports {
                    println!("{}: {:?} {:?} {}", s.label, r.id, r.status, r.note);
                }
            }
            if cfg.strict && !strict_violations(&reports).is_empty() {
                return ExitCode::from(EXIT_ASSUMPTION);
            }
            ExitCode::SUCCESS
        }
        Cmd::Integrate { config, out } => {
            let r = load(&config).and_then(|cfg| {
                let dir = out_dir(out, &cfg.output_dir, "integrate")?;
                run_integrate_in(&cfg, &dir)
            });
            finish(r)
        }
        Cmd::Figure { id, config, out } => {
            let r = load(&config).and_then(|cfg| {
                let dir = out_dir(out, &cfg.output_dir, id.as_str())?;
                run_figure_in(&cfg, id, &dir)
            });
            finish(r)
        }
        Cmd::Classify { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let steps = (cfg.horizon / cfg.gamma).floor() as usize;
            let times: Vec<f64> = (0..=steps).map(|k| k as f64 * cfg.gamma).collect();
            let mut out = Vec::new();
            for s in &cfg.sweep {
                match classify_rates(&s.eps, &s.alpha, &times) {
                    Ok(r) => out.push(serde_json::json!({ "label": s.label, "report": r })),
                    Err(e) => out.push(serde_json::json!({ "label": s.label, "error": e.to_string() })),
                }
            }
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            ExitCode::SUCCESS
        }
        Cmd::Rates { manifest, json } => match report_rates(&manifest) {
            Ok(r) => {
                if json {
                    println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
                } else {
                    print!("{}", r.to_text());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e.into()),
        },
    }
}
