//! Empirical decay rates of a finished run, set against the predicted
//! classification.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use vmlab_core::integrators::Scheme;
use vmlab_core::quadratic_lg::{classify_rates, estimate_decay_rate, CnClass, Verdict};

use crate::harness::{RunManifest, RunStatus};
use crate::output::{read_table, write_json};

/// Log-ratio change over the window below which two rates count as equal.
pub const DRIFT_TOL: f64 = 0.1;

pub const RATES_NAME: &str = "rates.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub reference: String,
    /// Change of `ln(d_vm/d_ref)` across the window; negative means VM decays faster.
    pub drift: f64,
    pub observed: Verdict,
    /// `None` when the dominant coefficient could not be decided.
    pub predicted: Option<Verdict>,
    /// Agreement with the prediction, or with either branch when it is ambiguous.
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRates {
    pub run: String,
    pub label: String,
    pub slope: f64,
    pub window: (f64, f64),
    pub vs_cn: Option<Comparison>,
    pub vs_lm: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatesReport {
    pub window: (f64, f64),
    pub drift_tol: f64,
    pub cn_slope: Option<f64>,
    pub runs: Vec<RunRates>,
    /// Runs whose tail could not be fitted, with the reason.
    pub skipped: Vec<String>,
}

impl RatesReport {
    pub fn agreement(&self) -> (usize, usize) {
        let cmp = self.runs.iter().flat_map(|r| [&r.vs_cn, &r.vs_lm]).flatten();
        cmp.fold((0, 0), |(a, n), c| (a + c.agrees as usize, n + 1))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (a, b) = self.window;
        let _ = writeln!(s, "decay rates on [{a}, {b}], drift tolerance {}", self.drift_tol);
        if let Some(c) = self.cn_slope {
            let _ = writeln!(s, "  cn: slope {c:.4}");
        }
        for r in &self.runs {
            let _ = writeln!(s, "  {} ({}): slope {:.4}", r.run, r.label, r.slope);
            for c in [&r.vs_cn, &r.vs_lm].into_iter().flatten() {
                let predicted = c.predicted.map_or("ambiguous".to_string(), |v| format!("{v:?}"));
                let mark = if c.agrees { "agree" } else { "DISAGREE" };
                let _ = writeln!(
                    s,
                    "    vs {}: drift {:+.3} observed {:?} predicted {} [{mark}]",
                    c.reference, c.drift, c.observed, predicted
                );
            }
        }
        let (ok, n) = self.agreement();
        for sk in &self.skipped {
            let _ = writeln!(s, "  skipped {sk}");
        }
        let _ = writeln!(s, "agreement: {ok}/{n}");
        s
    }
}

fn observed(drift: f64) -> Verdict {
    if drift < -DRIFT_TOL {
        Verdict::Faster
    } else if drift > DRIFT_TOL {
        Verdict::Slower
    } else {
        Verdict::AsFast
    }
}

/// `ln(a/b)` change across the window, from a least-squares fit.
fn drift(t: &[f64], a: &[f64], b: &[f64], window: (f64, f64)) -> Result<f64> {
    let ratio: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| if x > 1e-290 && y > 1e-290 { x / y } else { 0.0 }).collect();
    let fit = estimate_decay_rate(t, &ratio, window)?;
    Ok(fit.slope * (fit.window.1 - fit.window.0))
}

fn load_dist(dir: &Path, m: &RunManifest, run: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let f = m
        .files_of("to_opt")
        .find(|f| f.run == run)
        .with_context(|| format!("run {run} has no to_opt table; enable the to_opt comparison"))?;
    let (h, mut cols) = read_table(&dir.join(&f.path))?;
    let k = h.iter().position(|c| c == "dist_to_opt").context("missing dist_to_opt column")?;
    let d = cols.swap_remove(k);
    Ok((cols.swap_remove(0), d))
}

/// Fits decay slopes of the distance to the optimum on `[T/2, T]` and compares
/// every VM run with CN and with the LM run sharing its damping.
pub fn report_rates(manifest_path: &Path) -> Result<RatesReport> {
    let m = RunManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let window = (0.5 * m.horizon, m.horizon);
    let ok = |id: &str| m.runs.iter().any(|r| r.id == id && r.status == RunStatus::Ok);
    let cn = if ok("cn") { Some(load_dist(dir, &m, "cn")?) } else { None };
    let mut skipped = Vec::new();
    let cn_slope = match &cn {
        Some((t, d)) => match estimate_decay_rate(t, d, window) {
            Ok(f) => Some(f.slope),
            Err(e) => {
                skipped.push(format!("cn: {e}"));
                None
            }
        },
        None => None,
    };
    // a reference that vanished on the window cannot anchor a ratio
    let cn = cn.filter(|_| cn_slope.is_some());
    let mut runs = Vec::new();
    for r in m.runs.iter().filter(|r| r.scheme == Scheme::VM && r.status == RunStatus::Ok) {
        let (t, d) = load_dist(dir, &m, &r.id)?;
        let fit = match estimate_decay_rate(&t, &d, window) {
            Ok(f) => f,
            Err(e) => {
                skipped.push(format!("{}: {e}", r.id));
                continue;
            }
        };
        let report = classify_rates(&r.eps, &r.alpha, &t).ok();
        let vs_cn = cn.as_ref().and_then(|(_, dc)| {
            let dr = drift(&t, &d, dc, window).ok()?;
            let obs = observed(dr);
            let (predicted, agrees) = match report.as_ref().map(|p| &p.vs_cn) {
                Some(CnClass::Decided(c)) => (Some(c.verdict), c.verdict == obs),
                Some(CnClass::Ambiguous { if_alpha_dominant, if_eps_dominant }) => {
                    (None, obs == if_alpha_dominant.verdict || obs == if_eps_dominant.verdict)
                }
                None => (None, false),
            };
            Some(Comparison { reference: "cn".into(), drift: dr, observed: obs, predicted, agrees })
        });
        let mut vs_lm = None;
        if let Some(lm) = r.lm_reference.as_deref().filter(|id| ok(id)) {
            let (_, dl) = load_dist(dir, &m, lm)?;
            match drift(&t, &d, &dl, window) {
                Ok(dr) => {
                    let obs = observed(dr);
                    let predicted = report.as_ref().map(|p| p.vs_lm.verdict);
                    vs_lm = Some(Comparison {
                        reference: lm.to_string(),
                        drift: dr,
                        observed: obs,
                        predicted,
                        agrees: predicted == Some(obs),
                    });
                }
                Err(_) => skipped.push(format!("{} vs {lm}: reference vanishes on the window", r.id)),
            }
        }
        runs.push(RunRates {
            run: r.id.clone(),
            label: r.label.clone(),
            slope: fit.slope,
            window: fit.window,
            vs_cn,
            vs_lm,
        });
    }
    if runs.is_empty() && skipped.is_empty() {
        bail!("no successful VM runs in {}", manifest_path.display());
    }
    let report = RatesReport { window, drift_tol: DRIFT_TOL, cn_slope, runs, skipped };
    write_json(&dir.join(RATES_NAME), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_thresholds() {
        assert_eq!(observed(-0.5), Verdict::Faster);
        assert_eq!(observed(0.05), Verdict::AsFast);
        assert_eq!(observed(0.2), Verdict::Slower);
    }

    #[test]
    fn drift_of_exponential_ratio() {
        let t: Vec<f64> = (0..=200).map(|k| k as f64).collect();
        let a: Vec<f64> = t.iter().map(|&t| (-1.1 * t).exp()).collect();
        let b: Vec<f64> = t.iter().map(|&t| (-t).exp()).collect();
        let d = drift(&t, &a, &b, (100.0, 200.0)).unwrap();
        assert!((d + 10.0).abs() < 1e-8, "{d}");
    }
}
