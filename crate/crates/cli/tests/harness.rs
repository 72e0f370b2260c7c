use std::process::Command;

use vmlab::config::parse_str;
use vmlab::harness::{run_figure_in, FigureId, RunStatus};
use vmlab::output::read_table;
use vmlab::report_rates;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vmlab"));
    c.env("RUST_LOG", "error");
    c
}

#[test]
fn manifest_lists_every_file_it_wrote() {
    let cfg = parse_str("comparisons = [\"vs_cn\", \"vs_lm\", \"to_opt\", \"bounds\", \"classify\"]\n[objective]\nfamily = \"poly50_quad\"\nn = 4\n[solver]\nhorizon = 10\n", false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run_figure_in(&cfg, FigureId::Fig4, dir.path()).unwrap();
    assert!(!m.failed());
    assert_eq!(m.runs.len(), 1 + 3 + 6);
    assert_eq!(m.assumptions.len(), 6);
    assert_eq!(m.config_sha256.len(), 64);

    let mut on_disk: Vec<String> = walk(dir.path()).into_iter().filter(|p| p != "manifest.json").collect();
    let mut listed: Vec<String> = m.files.iter().map(|f| f.path.to_string_lossy().into_owned()).collect();
    on_disk.sort();
    listed.sort();
    assert_eq!(on_disk, listed);

    for kind in ["trajectory", "to_opt", "vs_cn", "vs_lm", "envelope", "envelope_meta", "classify"] {
        assert!(m.files_of(kind).next().is_some(), "no {kind} files");
    }
    let (h, cols) = read_table(&dir.path().join("to_opt/vm_01.csv")).unwrap();
    assert_eq!(h, vec!["t", "U", "grad_norm", "dist_to_opt"]);
    assert_eq!(cols[0].len(), 101);
    let (h, _) = read_table(&dir.path().join("bounds/vm_01_t32.csv")).unwrap();
    assert_eq!(h, vec!["t", "distance", "envelope", "ratio"]);
}

fn walk(root: &std::path::Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out
}

#[test]
fn planar_paths_approach_cn_as_mass_shrinks() {
    let cfg = parse_str(
        "write_trajectories = false\n[objective]\nfamily = \"quadratic\"\n[solver]\ngamma = 0.01\nhorizon = 20\n",
        false,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run_figure_in(&cfg, FigureId::Fig1Right, dir.path()).unwrap();
    let gaps: Vec<f64> = (0..3)
        .map(|i| {
            let (_, cols) = read_table(&dir.path().join(format!("vs_cn/vm_{i:02}.csv"))).unwrap();
            cols[1].iter().copied().fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
    assert!(m.choices.iter().any(|c| c.starts_with("n = 2")));
}

#[test]
fn rate_figure_writes_mode_tables_and_agrees_with_classifier() {
    let cfg = parse_str("write_trajectories = false\n[objective]\nfamily = \"quadratic\"\nspectrum = [1.0, 4.0]\n[solver]\ngamma = 0.01\n", false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run_figure_in(&cfg, FigureId::Fig5, dir.path()).unwrap();
    assert_eq!(m.horizon, 200.0);
    let (h, cols) = read_table(&dir.path().join("lg/vm_01_mode1.csv")).unwrap();
    assert_eq!(h, vec!["t", "x_vm", "x_cn", "x_lm", "x_lg", "lg_lower", "lg_upper"]);
    // λ = 4 satisfies the LG condition only for light masses; default ε₀ = 1 does not
    assert!(cols[4].iter().all(|v| v.is_nan()));
    let r = report_rates(&dir.path().join("manifest.json")).unwrap();
    let (ok, n) = r.agreement();
    assert_eq!((ok, n), (8, 8), "{}", r.to_text());
}

#[test]
fn sweeps_with_light_mass_get_lg_curves() {
    let src = "comparisons = [\"lg\"]\nwrite_trajectories = false\n[objective]\nfamily = \"quadratic\"\nspectrum = [1.0, 4.0]\n[solver]\ngamma = 0.01\nhorizon = 10\n[[sweep]]\neps = { family = \"power\", c0 = 0.1, a = 2.0 }\n";
    let cfg = parse_str(src, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_figure_in(&cfg, FigureId::Fig5, dir.path()).unwrap();
    let (_, cols) = read_table(&dir.path().join("lg/vm_00_mode0.csv")).unwrap();
    for k in (100..cols[0].len()).step_by(100) {
        let (x, lg) = (cols[1][k], cols[4][k]);
        // LG error plus the first-order scheme error at γ = 0.01
        assert!((lg / x - 1.0).abs() < 0.15, "t = {}: {x} vs {lg}", cols[0][k]);
        assert!(cols[5][k] <= lg && lg <= cols[6][k]);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[objective]\nfamily = \"quadratic\"\n[solver]\ngamma = -1\n").unwrap();
    let out = bin().args(["validate", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let wrong = dir.path().join("wrong.toml");
    std::fs::write(&wrong, "[objective]\nfamily = \"quadratic\"\nn = 3\n").unwrap();
    let out =
        bin().args(["figure", "fig2", wrong.to_str().unwrap(), "--out"]).arg(dir.path().join("o1")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let strict = dir.path().join("strict.toml");
    let src = "strict = true\n[objective]\nfamily = \"quadratic\"\nn = 3\n[[sweep]]\neps = { family = \"power\", c0 = 1.0, a = 3.0 }\nalpha = { family = \"power\", c0 = 1.0, a = 1.0 }\n";
    std::fs::write(&strict, src).unwrap();
    let out = bin().args(["integrate", strict.to_str().unwrap(), "--out"]).arg(dir.path().join("o2")).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let ok = dir.path().join("ok.toml");
    std::fs::write(&ok, "[objective]\nfamily = \"quadratic\"\nn = 3\n[solver]\nhorizon = 5\n").unwrap();
    let out =
        bin().args(["figure", "fig6", ok.to_str().unwrap(), "--out"]).arg(dir.path().join("o3")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the regime"));
    // with γ = β = 1 a CN step lands on the quadratic's minimizer
    let out = bin().args(["rates"]).arg(dir.path().join("o3/manifest.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("skipped cn"), "{text}");
}

#[test]
fn failed_runs_are_recorded() {
    // eps/gamma overflows to infinity, so the VM step is non-finite while CN is untouched
    let src = "[objective]\nfamily = \"quadratic\"\nn = 2\n[solver]\nhorizon = 1\n[[sweep]]\neps = { family = \"constant\", c0 = 1e308 }\n";
    let cfg = parse_str(src, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = vmlab::run_integrate_in(&cfg, dir.path()).unwrap();
    assert!(m.failed());
    let status = |id: &str| m.runs.iter().find(|r| r.id == id).unwrap().status.clone();
    assert_eq!(status("cn"), RunStatus::Ok);
    assert!(matches!(status("vm_00"), RunStatus::Failed { .. }));
    let loaded = vmlab::RunManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(loaded.runs, m.runs);
}
