//! End-to-end tests of the compiled binary: file formats, exit codes, and
//! output determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn doa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_doa"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("doa-cli-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to spawn doa binary")
}

const SMALL_SCENARIO: &str = "\
[geometry]
type = uca
sensors = 12
radius_over_lambda = 1.0

[sources]
source = -40.0, 2.0, 0.0
source = 65.0, 1.0, 30.0

[solver]
gamma_db = -160
";

#[test]
fn estimate_writes_all_outputs_and_matches_sources() {
    let dir = tmp_dir("estimate");
    let scenario = dir.join("scene.scenario");
    write(&scenario, SMALL_SCENARIO);
    let out = dir.join("out");
    let output = run(doa()
        .arg("estimate")
        .arg("--scenario")
        .arg(&scenario)
        .arg("--out")
        .arg(&out));
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    for file in [
        "result.json",
        "dual_polynomial.csv",
        "nonneg_polynomial.csv",
        "roots.csv",
        "cbf_comparison.csv",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    let angles = json["angles_deg"].as_array().unwrap();
    assert_eq!(angles.len(), 2);
    assert!((angles[0].as_f64().unwrap() - (-40.0)).abs() < 1e-3);
    assert!((angles[1].as_f64().unwrap() - 65.0).abs() < 1e-3);
    let mags: Vec<f64> = json["amplitudes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["magnitude"].as_f64().unwrap())
        .collect();
    assert!((mags[0] - 2.0).abs() < 1e-3 && (mags[1] - 1.0).abs() < 1e-3);
    // emitted CSVs round-trip: parse back and re-render identically
    let text = std::fs::read_to_string(out.join("dual_polynomial.csv")).unwrap();
    for line in text.lines().skip(1).take(50) {
        let mut parts = line.split(',');
        let theta: f64 = parts.next().unwrap().parse().unwrap();
        let mag: f64 = parts.next().unwrap().parse().unwrap();
        assert_eq!(format!("{theta},{mag}"), line);
    }
}

#[test]
fn estimate_missing_geometry_file_exits_2_with_path_in_json() {
    let dir = tmp_dir("missing-geom");
    let scenario = dir.join("scene.scenario");
    write(
        &scenario,
        "[geometry]\ntype = csv\npath = nowhere.csv\n\n[sources]\nsource = 0, 1, 0\n",
    );
    let output = run(doa()
        .arg("estimate")
        .arg("--scenario")
        .arg(&scenario)
        .arg("--out")
        .arg(dir.join("out")));
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    let json: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(json["error"]["kind"], "config");
    assert!(json["error"]["path"]
        .as_str()
        .unwrap()
        .contains("nowhere.csv"));
}

#[test]
fn estimate_geometry_csv_override_works() {
    let dir = tmp_dir("geom-csv");
    let geom_path = dir.join("array.csv");
    let mut csv = String::from("x_over_lambda,y_over_lambda\n");
    for k in 0..10 {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / 10.0;
        csv.push_str(&format!("{},{}\n", phi.cos(), phi.sin()));
    }
    write(&geom_path, &csv);
    let scenario = dir.join("scene.scenario");
    write(
        &scenario,
        "[geometry]\ntype = csv\npath = array.csv\n\n[sources]\nsource = 20.0, 1.5, 0.0\n",
    );
    let out = dir.join("out");
    let output = run(doa()
        .arg("estimate")
        .arg("--scenario")
        .arg(&scenario)
        .arg("--out")
        .arg(&out));
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!((json["angles_deg"][0].as_f64().unwrap() - 20.0).abs() < 1e-3);
}

const TINY_SWEEP: &str = "\
[geometry]
type = uca
sensors = 10

[sweep]
p = 41
radius_over_lambda = 1.0
l = 1, 2
min_sep_deg = 40
trials = 2
threshold_deg = 0.001
seed = 3
";

#[test]
fn sweep_is_byte_identical_across_reruns() {
    let dir = tmp_dir("sweep-determinism");
    let cfg = dir.join("grid.sweep");
    write(&cfg, TINY_SWEEP);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let output = run(doa()
            .arg("sweep")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out));
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let a = std::fs::read(out_a.join("sweep.csv")).unwrap();
    let b = std::fs::read(out_b.join("sweep.csv")).unwrap();
    assert_eq!(a, b, "sweep.csv must be byte-identical for equal seeds");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("p,radius_over_lambda,l,min_sep_deg,success_prob,solver_fail_frac"));
    // single-source cell always succeeds
    assert!(text.lines().nth(1).unwrap().ends_with(",1,0"));
}

#[test]
fn sweep_resume_skips_completed_cells() {
    let dir = tmp_dir("sweep-resume");
    let cfg = dir.join("grid.sweep");
    write(&cfg, TINY_SWEEP);
    let out_full = dir.join("full");
    let output = run(doa()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_full));
    assert!(output.status.success());
    let full = std::fs::read_to_string(out_full.join("sweep.csv")).unwrap();

    // keep only the header and first row, then resume
    let out_part = dir.join("part");
    std::fs::create_dir_all(&out_part).unwrap();
    let partial: String = full.lines().take(2).map(|l| format!("{l}\n")).collect();
    write(&out_part.join("sweep.csv"), &partial);
    let output = run(doa()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_part)
        .arg("--resume"));
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let resumed = std::fs::read_to_string(out_part.join("sweep.csv")).unwrap();
    assert_eq!(resumed, full, "resumed output must complete the table");
}

#[test]
fn sweep_corrupt_partial_row_is_rejected() {
    let dir = tmp_dir("sweep-corrupt");
    let cfg = dir.join("grid.sweep");
    write(&cfg, TINY_SWEEP);
    let out = dir.join("out");
    std::fs::create_dir_all(&out).unwrap();
    write(
        &out.join("sweep.csv"),
        "p,radius_over_lambda,l,min_sep_deg,success_prob,solver_fail_frac\ngarbage,row\n",
    );
    let output = run(doa()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--resume"));
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn sweep_zero_trials_is_config_error() {
    let dir = tmp_dir("sweep-zero");
    let cfg = dir.join("grid.sweep");
    write(&cfg, TINY_SWEEP);
    let output = run(doa()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--trials")
        .arg("0"));
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn analyze_manifold_emits_monotone_table_and_fit() {
    let dir = tmp_dir("analyze");
    let out = dir.join("out");
    let output = run(doa()
        .arg("analyze-manifold")
        .arg("--radii")
        .arg("0,1,2,3")
        .arg("--gammas")
        .arg("-80,-160")
        .arg("--out")
        .arg(&out));
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = std::fs::read_to_string(out.join("bandwidth.csv")).unwrap();
    let mut by_gamma: std::collections::BTreeMap<String, Vec<usize>> = Default::default();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        by_gamma
            .entry(fields[1].to_string())
            .or_default()
            .push(fields[2].parse().unwrap());
    }
    for (gamma, ps) in &by_gamma {
        assert!(
            ps.windows(2).all(|w| w[0] <= w[1]),
            "gamma {gamma} not monotone: {ps:?}"
        );
    }
    assert!(out.join("fit.csv").exists());
}

#[test]
fn demo_runs_the_bundled_scenario() {
    let dir = tmp_dir("demo");
    let out = dir.join("out");
    let output = run(doa().arg("demo").arg("--out").arg(&out));
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["num_sources"], 3);
}
