use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use risbeam_cli::{parse_config, ErrorCategory};

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn risbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risbeam")).args(args).output().expect("binary runs")
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().next().expect("error line on stderr");
    serde_json::from_str(line).expect("stderr starts with a JSON object")
}

const MINIMAL: &str = r#"
freq_ghz = 28.0

[ris]
ny = 64

[bs]
position_m = [80.0, 30.0, 0.0]

[target]
center_m = [70.0, 0.0, 0.0]
"#;

#[test]
fn minimal_config_gets_defaults() {
    let s = parse_config(MINIMAL).unwrap();
    assert_eq!(s.ris.nz, 1);
    assert_eq!(s.ris.spacing_wavelengths, 0.5);
    assert_eq!(s.bs.antennas, [1, 1]);
    assert_eq!(s.seed, risbeam_core::sim::DEFAULT_SEED);
    assert_eq!(s.trials, 100);
    assert_eq!(s.link.noise_figure_db, 6.0);
    assert_eq!(s.multipath.ground_loss_db, 8.0);
    assert!(s.is_single_point());
}

#[test]
fn negative_frequency_names_the_field() {
    let e = parse_config(&MINIMAL.replace("28.0", "-28.0")).unwrap_err();
    assert_eq!(e.category, ErrorCategory::Validation);
    assert_eq!(e.field.as_deref(), Some("freq_ghz"));
}

#[test]
fn unknown_key_reports_line_and_field() {
    let text = MINIMAL.replace("ny = 64", "ny = 64\nnumber_of_elements = 3");
    let e = parse_config(&text).unwrap_err();
    assert_eq!(e.category, ErrorCategory::Config);
    assert_eq!(e.field.as_deref(), Some("number_of_elements"));
    assert_eq!(e.line, Some(6));
}

#[test]
fn syntax_error_reports_line() {
    let e = parse_config("freq_ghz = 28.0\n[ris\nny = 4\n").unwrap_err();
    assert_eq!(e.category, ErrorCategory::Config);
    assert_eq!(e.line, Some(2));
}

#[test]
fn missing_key_named() {
    let e = parse_config(&MINIMAL.replace("freq_ghz = 28.0", "")).unwrap_err();
    assert_eq!(e.category, ErrorCategory::Config);
    assert_eq!(e.field.as_deref(), Some("freq_ghz"));
}

#[test]
fn shipped_3d_scenario_parses() {
    let s = parse_config(&std::fs::read_to_string(scenario_file("snr_3d.toml")).unwrap()).unwrap();
    assert_eq!(s.bs.position_m, [30.0, 80.0, 5.0]);
    assert_eq!(s.target.center_m, [30.0, -5.0, -5.0]);
    assert_eq!(s.ris.ny * s.ris.nz, 10_000);
    assert_eq!(s.multipath.nlos_paths(), 6);
    assert_eq!(s.link.direct_blockage_db, 40.0);
}

#[test]
fn all_shipped_scenarios_parse() {
    for entry in std::fs::read_dir(scenario_file("")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&p).unwrap();
            parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn regime_prints_distances() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = risbeam(&["regime", "--config", scenario_file("regime.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("f = 28 GHz, D = 0.707 m: d_FF = 93.4 m, d_qNF = 3.57 m"), "{stdout}");
    assert!(stdout.contains("f = 5 GHz, D = 0.707 m: d_FF = 16.7 m, d_qNF = 1.51 m"), "{stdout}");
    let csv = std::fs::read_to_string(out.join("regime.csv")).unwrap();
    assert!(csv.starts_with("# schema: risbeam/regime/v1\nfreq_ghz,d_m,d_ff_m,d_qnf_m\n"));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "regime");
    assert_eq!(manifest["seed"], risbeam_core::sim::DEFAULT_SEED);
    assert_eq!(manifest["outputs"][0]["file"], "regime.csv");
    assert_eq!(manifest["config"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn matched_profile_replays_to_zero_db_peak() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("point.toml");
    std::fs::write(&cfg, format!("{MINIMAL}\n[scan]\ncenter_m = [70.0, 0.0, 0.0]\nsize_m = [40.0, 40.0]\npoints = [41, 41]\n")).unwrap();
    let d = dir.path().join("d");
    let o = risbeam(&["design-analytic", "--design", "focus-nf", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let i = dir.path().join("i");
    let profile = d.join("profile_focus-nf.csv");
    let o = risbeam(&["illuminate", "--profile", profile.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--out", i.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(i.join("illumination_summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(2).unwrap().split(',').collect();
    let peak_db: f64 = row[4].parse().unwrap();
    assert!(peak_db.abs() < 1e-9, "peak {peak_db} dB");
    assert_eq!(row[5..8], ["70.0", "0.0", "0.0"]);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(i.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 1);
}

fn snr_config(dir: &Path) -> PathBuf {
    let cfg = dir.join("snr.toml");
    std::fs::write(
        &cfg,
        r#"
freq_ghz = 28.0
trials = 12

[ris]
ny = 12
nz = 12

[bs]
position_m = [30.0, 80.0, 5.0]
antennas = [2, 2]

[target]
center_m = [30.0, -5.0, -5.0]
size_m = [2.0, 2.0]

[multipath]
k_db = [0.0, 10.0]
scatterers = 2
subpaths = 4
v_est = 3
"#,
    )
    .unwrap();
    cfg
}

fn run_files(args: &[&str], out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    let o = risbeam(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn identical_runs_identical_bytes_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = snr_config(dir.path());
    let c = cfg.to_str().unwrap();
    let a = run_files(&["snr-vs-k", "--config", c, "--seed", "9", "--workers", "1"], &dir.path().join("a"));
    let b = run_files(&["snr-vs-k", "--config", c, "--seed", "9", "--workers", "1"], &dir.path().join("b"));
    let w = run_files(&["snr-vs-k", "--config", c, "--seed", "9", "--workers", "3"], &dir.path().join("w"));
    assert_eq!(a, b);
    assert_eq!(a, w);
    assert_eq!(a.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(), ["manifest.json", "snr_vs_k.csv"]);
    let other = run_files(&["snr-vs-k", "--config", c, "--seed", "10"], &dir.path().join("o"));
    assert_ne!(a[1].1, other[1].1);
}

#[test]
fn exit_codes_by_category() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();

    let r = risbeam(&["bogus"]);
    assert_eq!(r.status.code(), Some(64));
    assert_eq!(stderr_json(&r)["error"]["category"], "usage");

    let r = risbeam(&["regime", "--out", o]);
    assert_eq!(r.status.code(), Some(64));

    let missing = dir.path().join("missing.toml");
    let r = risbeam(&["regime", "--config", missing.to_str().unwrap(), "--out", o]);
    assert_eq!(r.status.code(), Some(4));
    assert_eq!(stderr_json(&r)["error"]["category"], "io");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "freq_ghz = \n").unwrap();
    let r = risbeam(&["regime", "--config", bad.to_str().unwrap(), "--out", o]);
    assert_eq!(r.status.code(), Some(2));
    let j = stderr_json(&r);
    assert_eq!(j["error"]["category"], "config");
    assert_eq!(j["error"]["line"], 1);

    let invalid = dir.path().join("invalid.toml");
    std::fs::write(&invalid, MINIMAL.replace("28.0", "0.0")).unwrap();
    let r = risbeam(&["regime", "--config", invalid.to_str().unwrap(), "--out", o]);
    assert_eq!(r.status.code(), Some(3));
    assert_eq!(stderr_json(&r)["error"]["field"], "freq_ghz");

    let ok = dir.path().join("ok.toml");
    std::fs::write(&ok, MINIMAL).unwrap();
    let r = risbeam(&["region-sweep", "--config", ok.to_str().unwrap(), "--out", o]);
    assert_eq!(r.status.code(), Some(3));
    assert_eq!(stderr_json(&r)["error"]["field"], "experiments.sweep_r_m");

    let r = risbeam(&["design-analytic", "--design", "optimized-nf", "--config", ok.to_str().unwrap(), "--out", o]);
    assert_eq!(r.status.code(), Some(64));
}

#[test]
fn optimize_and_convergence_write_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        r#"
freq_ghz = 28.0

[ris]
ny = 12

[bs]
position_m = [80.0, 30.0, 0.0]

[target]
center_m = [20.0, 0.0, 0.0]
size_m = [4.0, 4.0]
grid = [2, 2]

[experiments]
random_inits = 2
"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let files = run_files(&["design-optimize", "--config", c], &dir.path().join("opt"));
    let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["manifest.json", "profile_optimized-ff.csv", "profile_optimized-nf.csv", "trace_optimized-ff.csv", "trace_optimized-nf.csv"]);
    let trace = String::from_utf8(files[3].1.clone()).unwrap();
    assert!(trace.starts_with("# schema: risbeam/sca-trace/v1\niter,gamma_db,rank_residual,eta,status\n0,"));

    let files = run_files(&["convergence", "--config", c, "--seed", "4"], &dir.path().join("conv"));
    let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["manifest.json", "trace_analytic.csv", "trace_random_4.csv", "trace_random_5.csv"]);
}
