//! Experiment harness: delay-and-sum baseline, random scenes, and
//! Monte-Carlo success-probability sweeps.
//!
//! Sweeps are deterministic: every trial derives its own seed from
//! (master seed, cell index, trial index) through a counter-based mix, so
//! cells can run in any order or in parallel without changing results.

use crate::geometry::{wrap_angle, wraparound_separation, ArrayGeometry, SplitMix64};
use crate::pipeline::{estimate, synthesize, EstimateOptions, Scenario};
use crate::sdp::SolverOptions;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("cannot fit {l} sources with minimum separation {min_sep_deg} degrees on the circle")]
    InfeasibleSeparation { l: usize, min_sep_deg: f64 },
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
}

/// Normalized delay-and-sum beamformer spectrum `|a(theta)^H y| / M` on a
/// uniform grid over `(-pi, pi]`.
pub fn cbf_spectrum(y: &[Complex64], geom: &ArrayGeometry, grid: usize) -> Vec<f64> {
    assert!(grid >= 2, "cbf grid needs at least two points");
    let m = geom.sensors() as f64;
    (0..grid)
        .map(|g| {
            let theta = -PI + 2.0 * PI * (g + 1) as f64 / grid as f64;
            let a = geom.steering(theta);
            let dot: Complex64 = a
                .values
                .iter()
                .zip(y)
                .map(|(av, yv)| av.conj() * yv)
                .sum();
            dot.norm() / m
        })
        .collect()
}

/// Angle of the `g`-th point of the CBF grid.
pub fn cbf_grid_angle(g: usize, grid: usize) -> f64 {
    -PI + 2.0 * PI * (g + 1) as f64 / grid as f64
}

/// Counts strict local maxima above `threshold` whose angle falls in
/// `[lo, hi]` radians (wraparound-aware neighbors).
pub fn count_local_maxima_above(
    spectrum: &[f64],
    threshold: f64,
    lo: f64,
    hi: f64,
) -> usize {
    let n = spectrum.len();
    (0..n)
        .filter(|&g| {
            let theta = cbf_grid_angle(g, n);
            if theta < lo || theta > hi {
                return false;
            }
            let prev = spectrum[(g + n - 1) % n];
            let next = spectrum[(g + 1) % n];
            spectrum[g] > threshold && spectrum[g] >= prev && spectrum[g] > next
        })
        .count()
}

/// `L` source angles uniform on the circle conditioned on every pairwise
/// wraparound separation being at least `min_sep` radians, with equal unit
/// amplitudes. Sampling is by the exact gap construction: subtract the
/// minimum separation from every gap, place the remaining arc uniformly,
/// and rotate by a uniform offset. Deterministic for a fixed seed.
pub fn random_scene(
    l: usize,
    min_sep_deg: f64,
    seed: u64,
) -> Result<Vec<(f64, Complex64)>, SimulateError> {
    let min_sep = min_sep_deg.to_radians();
    if l == 0 || l as f64 * min_sep >= 2.0 * PI {
        return Err(SimulateError::InfeasibleSeparation {
            l,
            min_sep_deg,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let slack = 2.0 * PI - l as f64 * min_sep;
    let mut cuts: Vec<f64> = (0..l - 1).map(|_| rng.next_f64() * slack).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let offset = rng.next_f64() * 2.0 * PI;
    let mut angles: Vec<f64> = std::iter::once(0.0)
        .chain(cuts.iter().enumerate().map(|(k, u)| u + (k + 1) as f64 * min_sep))
        .map(|v| wrap_angle(v + offset))
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(angles
        .into_iter()
        .map(|a| (a, Complex64::new(1.0, 0.0)))
        .collect())
}

/// One cell of a sweep grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepCell {
    pub p: usize,
    pub radius_over_lambda: f64,
    pub l: usize,
    pub min_sep_deg: f64,
}

/// Sweep definition: UCA geometry, the swept parameter grid, and the
/// success criterion.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub sensors: usize,
    pub p_list: Vec<usize>,
    pub radius_list: Vec<f64>,
    pub l_list: Vec<usize>,
    pub min_sep_deg_list: Vec<f64>,
    pub trials: usize,
    /// Success threshold in degrees on every source.
    pub threshold_deg: f64,
    pub seed: u64,
    pub solver: SolverOptions,
    pub gamma_db: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.trials == 0 {
            return Err(SimulateError::BadConfig("trials must be at least 1".into()));
        }
        if self.threshold_deg <= 0.0 {
            return Err(SimulateError::BadConfig(
                "success threshold must be positive".into(),
            ));
        }
        if self.sensors < 2 {
            return Err(SimulateError::BadConfig("need at least 2 sensors".into()));
        }
        if self.p_list.is_empty()
            || self.radius_list.is_empty()
            || self.l_list.is_empty()
            || self.min_sep_deg_list.is_empty()
        {
            return Err(SimulateError::BadConfig("empty sweep axis".into()));
        }
        Ok(())
    }

    /// Cells in canonical order: P outermost, then radius, L, separation.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &p in &self.p_list {
            for &radius in &self.radius_list {
                for &l in &self.l_list {
                    for &sep in &self.min_sep_deg_list {
                        out.push(SweepCell {
                            p,
                            radius_over_lambda: radius,
                            l,
                            min_sep_deg: sep,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Result row for one sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub success_prob: f64,
    pub solver_fail_frac: f64,
    /// Wall-clock mean per trial; diagnostic only, never part of the
    /// deterministic table.
    pub mean_runtime_s: f64,
}

/// Deterministic per-trial seed from (master, cell, trial).
fn trial_seed(master: u64, cell_index: usize, trial: usize) -> u64 {
    let mut rng = SplitMix64::new(
        master
            ^ (cell_index as u64).wrapping_mul(0x9E3779B97F4A7C15)
            ^ (trial as u64).wrapping_mul(0xD1B54A32D192ED03),
    );
    rng.next_u64()
}

/// Whether an estimate recovers every true source within the threshold and
/// reports exactly as many sources as the truth.
pub fn all_sources_recovered(
    estimated: &[f64],
    truth: &[f64],
    threshold_deg: f64,
) -> bool {
    estimated.len() == truth.len()
        && truth.iter().all(|t| {
            estimated
                .iter()
                .any(|e| wraparound_separation(*e, *t).to_degrees() <= threshold_deg)
        })
}

/// Runs one trial of a cell; returns (success, solver_failed).
fn run_trial(cfg: &ExperimentConfig, cell: &SweepCell, seed: u64) -> (bool, bool) {
    let sources = match random_scene(cell.l, cell.min_sep_deg, seed) {
        Ok(s) => s,
        Err(_) => return (false, false),
    };
    let geom = match ArrayGeometry::make_uca(cfg.sensors, cell.radius_over_lambda) {
        Ok(g) => g,
        Err(_) => return (false, false),
    };
    let scn = Scenario::new(geom.clone(), sources.clone());
    let y = synthesize(&scn);
    let opts = EstimateOptions {
        p: Some(cell.p),
        gamma_db: cfg.gamma_db,
        solver: cfg.solver.clone(),
        ..Default::default()
    };
    match estimate(&y, &geom, &opts) {
        Ok(est) => {
            let truth: Vec<f64> = sources.iter().map(|s| s.0).collect();
            (
                all_sources_recovered(&est.angles, &truth, cfg.threshold_deg),
                false,
            )
        }
        Err(_) => (false, true),
    }
}

/// Runs one cell of the sweep (all trials sequentially).
pub fn run_cell(cfg: &ExperimentConfig, cell_index: usize, cell: &SweepCell) -> SweepRow {
    let start = Instant::now();
    let mut successes = 0usize;
    let mut solver_failures = 0usize;
    for trial in 0..cfg.trials {
        let (ok, failed) = run_trial(cfg, cell, trial_seed(cfg.seed, cell_index, trial));
        successes += ok as usize;
        solver_failures += failed as usize;
    }
    SweepRow {
        cell: *cell,
        success_prob: successes as f64 / cfg.trials as f64,
        solver_fail_frac: solver_failures as f64 / cfg.trials as f64,
        mean_runtime_s: start.elapsed().as_secs_f64() / cfg.trials as f64,
    }
}

/// Full sweep over the config grid. Cells run in parallel on the rayon
/// pool; the output order is the canonical cell order regardless.
pub fn success_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, SimulateError> {
    cfg.validate()?;
    let cells = cfg.cells();
    let mut rows: Vec<(usize, SweepRow)> = cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| (i, run_cell(cfg, i, cell)))
        .collect();
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// Like [`success_sweep`] but skips cells whose index is in `done`
/// (resume support); rows come back paired with their cell index.
pub fn success_sweep_resume(
    cfg: &ExperimentConfig,
    done: &[usize],
) -> Result<Vec<(usize, SweepRow)>, SimulateError> {
    cfg.validate()?;
    let cells = cfg.cells();
    let mut rows: Vec<(usize, SweepRow)> = cells
        .par_iter()
        .enumerate()
        .filter(|(i, _)| !done.contains(i))
        .map(|(i, cell)| (i, run_cell(cfg, i, cell)))
        .collect();
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows)
}

/// Header of the deterministic sweep CSV.
pub const SWEEP_CSV_HEADER: &str =
    "p,radius_over_lambda,l,min_sep_deg,success_prob,solver_fail_frac";

/// Renders one row of the deterministic sweep CSV (no timing column; the
/// wall-clock mean goes to a sidecar so reruns are byte-identical).
pub fn render_sweep_row(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{}",
        row.cell.p,
        row.cell.radius_over_lambda,
        row.cell.l,
        row.cell.min_sep_deg,
        row.success_prob,
        row.solver_fail_frac
    )
}

/// Renders the full deterministic sweep CSV.
pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&render_sweep_row(row));
        out.push('\n');
    }
    out
}
