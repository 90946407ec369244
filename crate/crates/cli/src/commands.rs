//! Subcommand implementations.
//!
//! All output files are deterministic for a given config and seed; wall
//! clock timings go to a sidecar log only.

use crate::config;
use crate::{AnalyzeArgs, CliError, DemoArgs, EstimateArgs, SweepArgs};
use doa_core::geometry::ReferencePoint;
use doa_core::manifold::{bandwidth_profile, fit_min_p_line};
use doa_core::pipeline::{
    estimate_detailed, report, synthesize, EstimateOptions, PipelineError, Scenario,
};
use doa_core::rooting::eval_nonneg_on_circle;
use doa_core::simulate::{
    cbf_grid_angle, cbf_spectrum, render_sweep_csv, render_sweep_row, success_sweep_resume,
    SweepRow, SWEEP_CSV_HEADER,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

const PLOT_GRID: usize = 3600;

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create output directory: {e}"), dir))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::io(format!("cannot write file: {e}"), path))
}

fn append_log(dir: &Path, line: &str) {
    // best effort: the log is a sidecar, never part of the deliverables
    let path = dir.join("run.log");
    let stamped = format!("{line}\n");
    let _ = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .and_then(|mut f| std::io::Write::write_all(&mut f, stamped.as_bytes()));
}

fn reference_from_flag(flag: &str) -> ReferencePoint {
    if flag == "origin" {
        ReferencePoint::Origin
    } else {
        ReferencePoint::Centroid
    }
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.scenario).map_err(|e| {
        CliError::config_with_path(format!("cannot read scenario: {e}"), &args.scenario)
    })?;
    let base_dir = args
        .scenario
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut scn = config::scenario_from_str(
        &text,
        &args.scenario.display().to_string(),
        reference_from_flag(&args.reference),
        &base_dir,
    )?;
    if let Some(path) = &args.geometry {
        scn.geometry = config::load_geometry_csv(path, reference_from_flag(&args.reference))?;
    }
    if let Some(p) = args.p {
        scn.p = Some(p);
    }
    if let Some(g) = args.gamma_db {
        scn.gamma_db = g;
    }
    run_estimate(&scn, &args.out)
}

fn run_estimate(scn: &Scenario, out: &Path) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let y = synthesize(scn);
    let opts = EstimateOptions {
        p: scn.p,
        gamma_db: scn.gamma_db,
        solver: scn.solver.clone(),
        ..Default::default()
    };
    let started = Instant::now();
    let (est, details) = estimate_detailed(&y, &scn.geometry, &opts).map_err(|e| match e {
        PipelineError::ShapeMismatch { .. } | PipelineError::Geometry(_) => {
            CliError::config(e.to_string())
        }
        other => CliError::estimation(other.to_string()),
    })?;
    let elapsed = started.elapsed().as_secs_f64();

    if details.basis_undersized {
        eprintln!(
            "warning: P is below the sizing-rule recommendation for this geometry; \
             results may be degraded"
        );
    }

    // result JSON
    let rec = report(&est, &details);
    let json = serde_json::to_string_pretty(&rec)
        .map_err(|e| CliError::estimation(format!("cannot serialize result: {e}")))?;
    write_file(&out.join("result.json"), &json)?;

    // dual polynomial magnitude and nonnegative polynomial vs angle
    let mut dual_csv = String::from("theta_deg,magnitude\n");
    let mut nonneg_csv = String::from("theta_deg,value\n");
    for g in 0..PLOT_GRID {
        let theta = cbf_grid_angle(g, PLOT_GRID);
        let mag = details.dual.eval_on_circle(theta).norm();
        let pval = eval_nonneg_on_circle(&details.autocorrelation, theta);
        let deg = theta.to_degrees();
        let _ = writeln!(dual_csv, "{deg},{mag}");
        let _ = writeln!(nonneg_csv, "{deg},{pval}");
    }
    write_file(&out.join("dual_polynomial.csv"), &dual_csv)?;
    write_file(&out.join("nonneg_polynomial.csv"), &nonneg_csv)?;

    // root scatter
    let mut roots_csv = String::from("re,im,radius,angle_deg,kept\n");
    for z in &details.roots {
        let kept = (z.norm() - 1.0).abs() <= doa_core::rooting::UNIT_CIRCLE_TOL;
        let _ = writeln!(
            roots_csv,
            "{},{},{},{},{}",
            z.re,
            z.im,
            z.norm(),
            z.arg().to_degrees(),
            kept
        );
    }
    write_file(&out.join("roots.csv"), &roots_csv)?;

    // CBF comparison: raw spectrum, spectrum scaled to the largest estimated
    // magnitude, and impulse markers at the estimated angles
    let spec = cbf_spectrum(&y, &scn.geometry, PLOT_GRID);
    let peak = spec.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let amp_max = est
        .amplitudes
        .iter()
        .map(|s| s.norm())
        .fold(0.0f64, f64::max);
    let scale = if amp_max > 0.0 { amp_max / peak } else { 1.0 };
    let mut marks = vec![0.0f64; PLOT_GRID];
    for (angle, amp) in est.angles.iter().zip(&est.amplitudes) {
        let gpos = ((angle + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)
            * PLOT_GRID as f64)
            .round() as usize;
        let gpos = gpos.min(PLOT_GRID - 1);
        marks[gpos] = amp.norm();
    }
    let mut cbf_csv = String::from("theta_deg,cbf,cbf_scaled,est_magnitude\n");
    for g in 0..PLOT_GRID {
        let _ = writeln!(
            cbf_csv,
            "{},{},{},{}",
            cbf_grid_angle(g, PLOT_GRID).to_degrees(),
            spec[g],
            spec[g] * scale,
            marks[g]
        );
    }
    write_file(&out.join("cbf_comparison.csv"), &cbf_csv)?;

    append_log(
        out,
        &format!(
            "estimate: {} sources, objective {:.6}, gap {:.3e}, {:.3}s",
            est.angles.len(),
            est.diagnostics.objective,
            est.diagnostics.duality_gap,
            elapsed
        ),
    );

    println!("{} source(s) estimated; results in {}", est.angles.len(), out.display());
    for (angle, amp) in est.angles.iter().zip(&est.amplitudes) {
        println!(
            "  {:>10.4} deg   |s| = {:.4}   phase = {:>8.3} deg",
            angle.to_degrees(),
            amp.norm(),
            amp.arg().to_degrees()
        );
    }
    Ok(())
}

pub fn cmd_analyze_manifold(args: &AnalyzeArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let radii = config::parse_radius_spec(&args.radii)?;
    if radii.is_empty() {
        return Err(CliError::config("radius list is empty"));
    }
    if radii.iter().any(|r| *r < 0.0) {
        return Err(CliError::config("radii must be nonnegative"));
    }
    let gammas = config::parse_f64_list(&args.gammas, "gamma list")?;
    let started = Instant::now();
    let rows = bandwidth_profile(&radii, &gammas);

    let mut csv = String::from("radius_over_lambda,gamma_db,min_p\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{}",
            row.radius_over_lambda, row.gamma_db, row.min_p
        );
    }
    write_file(&args.out.join("bandwidth.csv"), &csv)?;

    let mut fit_csv = String::from("gamma_db,slope,intercept\n");
    for &gamma in &gammas {
        let subset: Vec<_> = rows
            .iter()
            .filter(|r| r.gamma_db == gamma)
            .cloned()
            .collect();
        if let Some((slope, intercept)) = fit_min_p_line(&subset) {
            let _ = writeln!(fit_csv, "{gamma},{slope},{intercept}");
            println!("gamma {gamma} dB: min P fits {slope:.3} * (r/lambda) + {intercept:.3}");
        } else {
            println!("gamma {gamma} dB: not enough radii >= 2 for a line fit");
        }
    }
    write_file(&args.out.join("fit.csv"), &fit_csv)?;
    append_log(
        &args.out,
        &format!(
            "analyze-manifold: {} rows in {:.3}s",
            rows.len(),
            started.elapsed().as_secs_f64()
        ),
    );
    println!("bandwidth table in {}", args.out.join("bandwidth.csv").display());
    Ok(())
}

/// Parses completed cells from a partial sweep CSV; returns
/// `(header_ok, rows)` where rows are `(cell_index, line)` in file order.
fn parse_partial_sweep(
    text: &str,
    expected_rows: &[String],
    path: &Path,
) -> Result<Vec<usize>, CliError> {
    let mut done = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != SWEEP_CSV_HEADER {
                return Err(CliError::io(
                    "partial sweep output has an unexpected header at line 1".to_string(),
                    path,
                ));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        // a valid completed row must match a canonical cell prefix
        // (parameters), i.e. the first four comma fields
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CliError::io(
                format!("corrupt sweep row at line {}: '{line}'", lineno + 1),
                path,
            ));
        }
        let prefix = fields[..4].join(",");
        match expected_rows.iter().position(|r| *r == prefix) {
            Some(idx) => done.push(idx),
            None => {
                return Err(CliError::io(
                    format!(
                        "sweep row at line {} does not match any cell of this config: '{line}'",
                        lineno + 1
                    ),
                    path,
                ))
            }
        }
    }
    Ok(done)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::config_with_path(format!("cannot read sweep config: {e}"), &args.config)
    })?;
    let mut cfg = config::sweep_from_str(&text, &args.config.display().to_string())?;
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    if let Some(jobs) = args.jobs {
        // a sweep-local pool keeps determinism and bounds parallelism
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    ensure_out_dir(&args.out)?;
    let csv_path = args.out.join("sweep.csv");

    let cells = cfg.cells();
    let cell_prefixes: Vec<String> = cells
        .iter()
        .map(|c| format!("{},{},{},{}", c.p, c.radius_over_lambda, c.l, c.min_sep_deg))
        .collect();

    let done: Vec<usize> = if args.resume && csv_path.exists() {
        let existing = std::fs::read_to_string(&csv_path)
            .map_err(|e| CliError::io(format!("cannot read partial output: {e}"), &csv_path))?;
        parse_partial_sweep(&existing, &cell_prefixes, &csv_path)?
    } else {
        Vec::new()
    };

    let started = Instant::now();
    let fresh = success_sweep_resume(&cfg, &done)
        .map_err(|e| CliError::config(e.to_string()))?;

    if done.is_empty() {
        let rows: Vec<SweepRow> = fresh.iter().map(|(_, r)| r.clone()).collect();
        write_file(&csv_path, &render_sweep_csv(&rows))?;
        let mut timing = String::from("p,radius_over_lambda,l,min_sep_deg,mean_runtime_s\n");
        for (_, row) in &fresh {
            let _ = writeln!(
                timing,
                "{},{},{},{},{}",
                row.cell.p,
                row.cell.radius_over_lambda,
                row.cell.l,
                row.cell.min_sep_deg,
                row.mean_runtime_s
            );
        }
        write_file(&args.out.join("sweep_timing.csv"), &timing)?;
    } else {
        // append the missing cells to the partial file
        let mut tail = String::new();
        for (_, row) in &fresh {
            tail.push_str(&render_sweep_row(row));
            tail.push('\n');
        }
        let mut existing = std::fs::read_to_string(&csv_path)
            .map_err(|e| CliError::io(format!("cannot read partial output: {e}"), &csv_path))?;
        if !existing.ends_with('\n') && !existing.is_empty() {
            existing.push('\n');
        }
        existing.push_str(&tail);
        write_file(&csv_path, &existing)?;
    }

    append_log(
        &args.out,
        &format!(
            "sweep: {} cells run, {} skipped, {:.3}s",
            fresh.len(),
            done.len(),
            started.elapsed().as_secs_f64()
        ),
    );
    println!(
        "{} cell(s) computed ({} resumed); table in {}",
        fresh.len(),
        done.len(),
        csv_path.display()
    );
    Ok(())
}

pub fn cmd_demo(args: &DemoArgs) -> Result<(), CliError> {
    let text = include_str!("../../../scenarios/three_sources.scenario");
    let scn = config::scenario_from_str(
        text,
        "bundled demo scenario",
        ReferencePoint::Centroid,
        Path::new("."),
    )?;
    println!(
        "demo: {}-sensor circular array, {} sources, single snapshot",
        scn.geometry.sensors(),
        scn.sources.len()
    );
    run_estimate(&scn, &args.out)
}
