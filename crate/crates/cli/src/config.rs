//! Scenario and sweep file parsing.
//!
//! Both formats are flat key-value text with `[section]` headers, `#`
//! comments, and comma-separated lists. Repeated `source` keys accumulate.
//! See the files under `scenarios/` for worked examples.

use doa_core::geometry::{ArrayGeometry, ReferencePoint};
use doa_core::pipeline::Scenario;
use doa_core::sdp::SolverOptions;
use doa_core::simulate::ExperimentConfig;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

/// Parsed key-value sections; repeated keys keep every occurrence in order.
#[derive(Debug, Default)]
pub struct Sections {
    map: BTreeMap<String, Vec<(String, String)>>,
}

impl Sections {
    pub fn parse(text: &str, label: &str) -> Result<Self, CliError> {
        let mut out = Sections::default();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = name.trim().to_string();
                out.map.entry(current.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "{label}:{}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            if current.is_empty() {
                return Err(CliError::config(format!(
                    "{label}:{}: key outside any [section]",
                    lineno + 1
                )));
            }
            out.map
                .get_mut(&current)
                .unwrap()
                .push((key.trim().to_string(), value.trim().trim_matches('"').to_string()));
        }
        Ok(out)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.map
            .get(section)?
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all(&self, section: &str, key: &str) -> Vec<&str> {
        self.map
            .get(section)
            .map(|entries| {
                entries
                    .iter()
                    .filter(|(k, _)| k == key)
                    .map(|(_, v)| v.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.map.contains_key(section)
    }
}

fn parse_f64(value: &str, what: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|e| CliError::config(format!("{what}: bad number '{value}': {e}")))
}

fn parse_usize(value: &str, what: &str) -> Result<usize, CliError> {
    value
        .parse::<usize>()
        .map_err(|e| CliError::config(format!("{what}: bad integer '{value}': {e}")))
}

fn parse_u64(value: &str, what: &str) -> Result<u64, CliError> {
    value
        .parse::<u64>()
        .map_err(|e| CliError::config(format!("{what}: bad integer '{value}': {e}")))
}

/// Comma-separated list of numbers.
pub fn parse_f64_list(value: &str, what: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|s| parse_f64(s.trim(), what))
        .collect()
}

pub fn parse_usize_list(value: &str, what: &str) -> Result<Vec<usize>, CliError> {
    value
        .split(',')
        .map(|s| parse_usize(s.trim(), what))
        .collect()
}

/// Radius specification: either `start:stop:step` or a comma list.
pub fn parse_radius_spec(value: &str) -> Result<Vec<f64>, CliError> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::config(format!(
                "radius range must be start:stop:step, got '{value}'"
            )));
        }
        let start = parse_f64(parts[0], "radius start")?;
        let stop = parse_f64(parts[1], "radius stop")?;
        let step = parse_f64(parts[2], "radius step")?;
        if step <= 0.0 || stop < start {
            return Err(CliError::config(format!("bad radius range '{value}'")));
        }
        let mut out = Vec::new();
        let mut i = 0usize;
        loop {
            let r = start + step * i as f64;
            if r > stop + 1e-9 {
                break;
            }
            out.push(r);
            i += 1;
        }
        Ok(out)
    } else {
        parse_f64_list(value, "radius list")
    }
}

/// Geometry construction shared by scenario and sweep files.
pub fn geometry_from_sections(
    sections: &Sections,
    reference: ReferencePoint,
    base_dir: &Path,
) -> Result<ArrayGeometry, CliError> {
    let kind = sections
        .get("geometry", "type")
        .ok_or_else(|| CliError::config("missing [geometry] type"))?;
    match kind {
        "uca" => {
            let m = parse_usize(
                sections
                    .get("geometry", "sensors")
                    .ok_or_else(|| CliError::config("uca geometry needs 'sensors'"))?,
                "sensors",
            )?;
            let r = parse_f64(
                sections.get("geometry", "radius_over_lambda").ok_or_else(|| {
                    CliError::config("uca geometry needs 'radius_over_lambda'")
                })?,
                "radius_over_lambda",
            )?;
            ArrayGeometry::make_uca(m, r).map_err(CliError::from_geometry)
        }
        "rpa" => {
            let m = parse_usize(
                sections
                    .get("geometry", "sensors")
                    .ok_or_else(|| CliError::config("rpa geometry needs 'sensors'"))?,
                "sensors",
            )?;
            let min_sp = parse_f64(
                sections
                    .get("geometry", "min_spacing_over_lambda")
                    .ok_or_else(|| {
                        CliError::config("rpa geometry needs 'min_spacing_over_lambda'")
                    })?,
                "min_spacing_over_lambda",
            )?;
            let max_r = parse_f64(
                sections
                    .get("geometry", "max_radius_over_lambda")
                    .ok_or_else(|| {
                        CliError::config("rpa geometry needs 'max_radius_over_lambda'")
                    })?,
                "max_radius_over_lambda",
            )?;
            let seed = parse_u64(
                sections.get("geometry", "seed").unwrap_or("0"),
                "geometry seed",
            )?;
            ArrayGeometry::make_rpa(m, min_sp, max_r, seed).map_err(CliError::from_geometry)
        }
        "csv" => {
            let rel = sections
                .get("geometry", "path")
                .ok_or_else(|| CliError::config("csv geometry needs 'path'"))?;
            let path = base_dir.join(rel);
            load_geometry_csv(&path, reference)
        }
        other => Err(CliError::config(format!(
            "unknown geometry type '{other}' (expected uca, rpa, or csv)"
        ))),
    }
}

pub fn load_geometry_csv(
    path: &Path,
    reference: ReferencePoint,
) -> Result<ArrayGeometry, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::config_with_path(format!("cannot read geometry file: {e}"), path)
    })?;
    ArrayGeometry::from_csv_str(&text, reference)
        .map_err(|e| CliError::config_with_path(e.to_string(), path))
}

/// Solver options from a `[solver]` section (missing keys keep defaults).
pub fn solver_from_sections(sections: &Sections) -> Result<SolverOptions, CliError> {
    let mut solver = SolverOptions::default();
    if let Some(v) = sections.get("solver", "gap_tol") {
        solver.gap_tol = parse_f64(v, "gap_tol")?;
    }
    if let Some(v) = sections.get("solver", "max_iter") {
        solver.max_iter = parse_usize(v, "max_iter")?;
    }
    if let Some(v) = sections.get("solver", "psd_slack") {
        solver.psd_slack = parse_f64(v, "psd_slack")?;
    }
    Ok(solver)
}

/// Full scenario: geometry, sources, solver options, sizing overrides.
pub fn scenario_from_str(
    text: &str,
    label: &str,
    reference: ReferencePoint,
    base_dir: &Path,
) -> Result<Scenario, CliError> {
    let sections = Sections::parse(text, label)?;
    let geometry = geometry_from_sections(&sections, reference, base_dir)?;
    let mut sources = Vec::new();
    for entry in sections.get_all("sources", "source") {
        let fields: Vec<&str> = entry.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(CliError::config(format!(
                "source entries are 'angle_deg, magnitude, phase_deg', got '{entry}'"
            )));
        }
        let angle = parse_f64(fields[0], "source angle")?.to_radians();
        let magnitude = parse_f64(fields[1], "source magnitude")?;
        let phase = parse_f64(fields[2], "source phase")?.to_radians();
        sources.push((angle, Complex64::from_polar(magnitude, phase)));
    }
    if sources.is_empty() {
        return Err(CliError::config("scenario has no sources".to_string()));
    }
    let mut scn = Scenario::new(geometry, sources);
    scn.solver = solver_from_sections(&sections)?;
    if let Some(v) = sections.get("solver", "p") {
        scn.p = Some(parse_usize(v, "p")?);
    }
    if let Some(v) = sections.get("solver", "gamma_db") {
        scn.gamma_db = parse_f64(v, "gamma_db")?;
    }
    Ok(scn)
}

/// Sweep configuration (UCA geometry swept over the cell grid).
pub fn sweep_from_str(text: &str, label: &str) -> Result<ExperimentConfig, CliError> {
    let sections = Sections::parse(text, label)?;
    if !sections.has_section("sweep") {
        return Err(CliError::config("sweep file needs a [sweep] section"));
    }
    let kind = sections.get("geometry", "type").unwrap_or("uca");
    if kind != "uca" {
        return Err(CliError::config(
            "sweeps support uca geometry only".to_string(),
        ));
    }
    let sensors = parse_usize(
        sections
            .get("geometry", "sensors")
            .ok_or_else(|| CliError::config("sweep geometry needs 'sensors'"))?,
        "sensors",
    )?;
    let p_list = parse_usize_list(
        sections
            .get("sweep", "p")
            .ok_or_else(|| CliError::config("sweep needs 'p'"))?,
        "sweep p",
    )?;
    let radius_list = parse_radius_spec(
        sections
            .get("sweep", "radius_over_lambda")
            .ok_or_else(|| CliError::config("sweep needs 'radius_over_lambda'"))?,
    )?;
    let l_list = parse_usize_list(
        sections
            .get("sweep", "l")
            .ok_or_else(|| CliError::config("sweep needs 'l'"))?,
        "sweep l",
    )?;
    let min_sep_deg_list = parse_f64_list(
        sections
            .get("sweep", "min_sep_deg")
            .ok_or_else(|| CliError::config("sweep needs 'min_sep_deg'"))?,
        "sweep min_sep_deg",
    )?;
    let trials = parse_usize(sections.get("sweep", "trials").unwrap_or("50"), "trials")?;
    let threshold_deg = parse_f64(
        sections.get("sweep", "threshold_deg").unwrap_or("0.001"),
        "threshold_deg",
    )?;
    let seed = parse_u64(sections.get("sweep", "seed").unwrap_or("0"), "seed")?;
    let gamma_db = parse_f64(
        sections.get("sweep", "gamma_db").unwrap_or("-160"),
        "gamma_db",
    )?;
    Ok(ExperimentConfig {
        sensors,
        p_list,
        radius_list,
        l_list,
        min_sep_deg_list,
        trials,
        threshold_deg,
        seed,
        solver: solver_from_sections(&sections)?,
        gamma_db,
    })
}
