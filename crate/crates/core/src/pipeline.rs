//! End-to-end estimation: basis, SDP, dual polynomial, rooting, amplitudes.
//!
//! `estimate` runs the full chain on one snapshot:
//!
//! 1. build the Fourier basis `G^H` for the geometry,
//! 2. solve the dual SDP for the optimal dual vector `c*`,
//! 3. form the dual polynomial `h* = G^H c*`,
//! 4. root the nonnegative polynomial `1 - |b(z)|^2` and keep unit-circle
//!    roots as arrival angles,
//! 5. recover complex amplitudes by least squares against the steering
//!    matrix at the estimated angles.

use crate::geometry::{ArrayGeometry, GeometryError};
use crate::manifold::{build_basis, min_p, ManifoldError};
use crate::numkit::{lstsq, norm2, ComplexMatrix, LinAlgError};
use crate::rooting::{
    autocorrelation, extract_doas, nonneg_poly, roots, DoaEstimate, DualPolynomial,
    RootingError, CLUSTER_DEG, UNIT_CIRCLE_TOL,
};
use crate::sdp::{assemble, check_certificate, solve, SdpError, SolveStatus, SolverOptions};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Rooting(#[from] RootingError),
    #[error("amplitude recovery failed: {0}")]
    Amplitudes(#[from] LinAlgError),
    #[error("solver did not reach the gap tolerance (status {status:?}, certified gap {gap:.3e})")]
    SolverFailed { status: SolveStatus, gap: f64 },
    #[error("snapshot length {got} does not match the {expected} sensors")]
    ShapeMismatch { expected: usize, got: usize },
}

/// A synthetic scene: geometry plus impulsive sources.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    /// `(angle_radians, complex_amplitude)` per source.
    pub sources: Vec<(f64, Complex64)>,
    /// Number of Fourier coefficients; `None` selects the sizing rule.
    pub p: Option<usize>,
    pub gamma_db: f64,
    pub solver: SolverOptions,
}

impl Scenario {
    pub fn new(geometry: ArrayGeometry, sources: Vec<(f64, Complex64)>) -> Self {
        Self {
            geometry,
            sources,
            p: None,
            gamma_db: -160.0,
            solver: SolverOptions::default(),
        }
    }
}

/// Tuning knobs for [`estimate`].
#[derive(Clone, Debug)]
pub struct EstimateOptions {
    /// Number of Fourier coefficients; `None` selects the sizing rule at
    /// `gamma_db` for the farthest sensor.
    pub p: Option<usize>,
    pub gamma_db: f64,
    pub solver: SolverOptions,
    /// Radial distance from the unit circle within which roots count.
    pub root_tol: f64,
    /// Angular cluster width (degrees) merging split double roots.
    pub cluster_deg: f64,
    /// Grid size for the dual-certificate sweep.
    pub certificate_grid: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            p: None,
            gamma_db: -160.0,
            solver: SolverOptions::default(),
            root_tol: UNIT_CIRCLE_TOL,
            cluster_deg: CLUSTER_DEG,
            certificate_grid: crate::sdp::CERTIFICATE_GRID,
        }
    }
}

/// Noise-free snapshot of a scene: `y = sum_l s_l a(theta_l)`.
pub fn synthesize(scn: &Scenario) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); scn.geometry.sensors()];
    for &(theta, amp) in &scn.sources {
        for (ym, am) in y.iter_mut().zip(scn.geometry.steering(theta).values) {
            *ym += amp * am;
        }
    }
    y
}

/// Intermediate artifacts of one estimation run, for plotting and reports.
#[derive(Clone, Debug)]
pub struct EstimateDetails {
    /// Dual polynomial coefficients `h* = G^H c*`, ordered k = -N..N.
    pub dual: DualPolynomial,
    /// Autocorrelation of `h*` (the Laurent coefficients of `|b|^2`).
    pub autocorrelation: Vec<Complex64>,
    /// All roots of the nonnegative polynomial.
    pub roots: Vec<Complex64>,
    /// Maximum of `|b|` over the certificate grid and where it occurs.
    pub certificate_max: f64,
    pub certificate_theta: f64,
    /// True when the basis was built below the sizing-rule recommendation.
    pub basis_undersized: bool,
}

/// Full snapshot-to-angles estimation. An empty angle list is the
/// no-sources outcome, not an error.
pub fn estimate(
    y: &[Complex64],
    geom: &ArrayGeometry,
    opts: &EstimateOptions,
) -> Result<DoaEstimate, PipelineError> {
    estimate_detailed(y, geom, opts).map(|(est, _)| est)
}

/// [`estimate`] plus the intermediate artifacts.
pub fn estimate_detailed(
    y: &[Complex64],
    geom: &ArrayGeometry,
    opts: &EstimateOptions,
) -> Result<(DoaEstimate, EstimateDetails), PipelineError> {
    if y.len() != geom.sensors() {
        return Err(PipelineError::ShapeMismatch {
            expected: geom.sensors(),
            got: y.len(),
        });
    }
    let p = opts
        .p
        .unwrap_or_else(|| min_p(geom.farthest_radius_over_lambda(), opts.gamma_db));
    let basis = build_basis(geom, p, opts.gamma_db)?;
    let prob = assemble(&basis, y)?;
    let sol = solve(&prob, &opts.solver);
    if sol.status != SolveStatus::Optimal {
        return Err(PipelineError::SolverFailed {
            status: sol.status,
            gap: sol.duality_gap,
        });
    }

    let h = basis.dual_coefficients(&sol.c_star);
    let dual = DualPolynomial::new(h)?;
    let r = autocorrelation(&dual);
    let (mut est, q_roots) = if norm2(dual.coefficients()) == 0.0 {
        // zero snapshot: no dual polynomial, no sources
        (DoaEstimate::default(), Vec::new())
    } else {
        let q = nonneg_poly(&dual);
        let q_roots = roots(&q)?;
        let est = extract_doas(&q_roots, opts.root_tol, opts.cluster_deg);
        (est, q_roots)
    };

    est.diagnostics.duality_gap = sol.duality_gap;
    est.diagnostics.objective = sol.objective;
    est.diagnostics.solver_iterations = sol.iterations;
    if !est.angles.is_empty() {
        let (amps, residual) = recover_amplitudes(y, geom, &est.angles)?;
        est.amplitudes = amps;
        est.diagnostics.amplitude_residual = residual;
    }
    let cert = check_certificate(&sol, &basis, opts.certificate_grid);
    let details = EstimateDetails {
        dual,
        autocorrelation: r,
        roots: q_roots,
        certificate_max: cert.max_magnitude,
        certificate_theta: cert.theta_at_max,
        basis_undersized: basis.is_undersized(),
    };
    Ok((est, details))
}

/// Least-squares amplitudes at fixed angles: `s = A(theta)^+ y`.
/// Returns the amplitudes and the fit residual.
pub fn recover_amplitudes(
    y: &[Complex64],
    geom: &ArrayGeometry,
    angles: &[f64],
) -> Result<(Vec<Complex64>, f64), PipelineError> {
    let m = geom.sensors();
    let a = ComplexMatrix::from_fn(m, angles.len(), |i, j| {
        geom.steering_entry(i, angles[j])
    });
    let s = lstsq(&a, y)?;
    let residual: Vec<Complex64> = a
        .mul_vec(&s)
        .iter()
        .zip(y)
        .map(|(av, yv)| av - yv)
        .collect();
    Ok((s, norm2(&residual)))
}

/// Serializable record of one estimation run.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub angles_deg: Vec<f64>,
    pub amplitudes: Vec<AmplitudeReport>,
    pub num_sources: usize,
    pub objective: f64,
    pub duality_gap: f64,
    pub solver_iterations: usize,
    pub amplitude_residual: f64,
    pub root_distances: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    pub certificate_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeReport {
    pub magnitude: f64,
    pub phase_deg: f64,
}

/// Assembles the serializable report for an estimate.
pub fn report(est: &DoaEstimate, details: &EstimateDetails) -> EstimateReport {
    EstimateReport {
        angles_deg: est.angles.iter().map(|a| a.to_degrees()).collect(),
        amplitudes: est
            .amplitudes
            .iter()
            .map(|s| AmplitudeReport {
                magnitude: s.norm(),
                phase_deg: s.arg().to_degrees(),
            })
            .collect(),
        num_sources: est.angles.len(),
        objective: est.diagnostics.objective,
        duality_gap: est.diagnostics.duality_gap,
        solver_iterations: est.diagnostics.solver_iterations,
        amplitude_residual: est.diagnostics.amplitude_residual,
        root_distances: est.root_distances.clone(),
        cluster_sizes: est.diagnostics.cluster_sizes.clone(),
        certificate_max: details.certificate_max,
        runtime_s: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::wraparound_separation;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn match_angles(estimated: &[f64], truth: &[f64], tol_deg: f64) -> bool {
        estimated.len() == truth.len()
            && truth.iter().all(|t| {
                estimated
                    .iter()
                    .any(|e| wraparound_separation(*e, *t).to_degrees() <= tol_deg)
            })
    }

    #[test]
    fn synthesize_single_source_is_steering_vector() {
        let geom = ArrayGeometry::make_uca(6, 0.8).unwrap();
        let scn = Scenario::new(geom.clone(), vec![(0.0, c(1.0, 0.0))]);
        let y = synthesize(&scn);
        for (yv, av) in y.iter().zip(geom.steering(0.0).values) {
            assert!((yv - av).norm() < 1e-15);
        }
    }

    #[test]
    fn synthesize_opposite_amplitudes_cancel() {
        let geom = ArrayGeometry::make_uca(6, 0.8).unwrap();
        let scn = Scenario::new(
            geom,
            vec![(0.3, c(2.0, -1.0)), (0.3, c(-2.0, 1.0))],
        );
        assert!(norm2(&synthesize(&scn)) < 1e-14);
    }

    #[test]
    fn zero_snapshot_reports_no_sources() {
        let geom = ArrayGeometry::make_uca(6, 0.8).unwrap();
        let y = vec![c(0.0, 0.0); 6];
        let est = estimate(&y, &geom, &EstimateOptions::default()).unwrap();
        assert!(est.no_sources());
        assert!(est.amplitudes.is_empty());
    }

    #[test]
    fn small_scene_round_trip() {
        let geom = ArrayGeometry::make_uca(12, 1.0).unwrap();
        let truth = [(-1.2f64, c(1.0, 0.0)), (0.4, c(0.0, 2.0)), (2.0, c(1.5, -0.5))];
        let scn = Scenario::new(geom.clone(), truth.to_vec());
        let y = synthesize(&scn);
        let est = estimate(&y, &geom, &EstimateOptions::default()).unwrap();
        let truth_angles: Vec<f64> = truth.iter().map(|s| s.0).collect();
        assert!(
            match_angles(&est.angles, &truth_angles, 0.001),
            "angles {:?}",
            est.angles.iter().map(|a| a.to_degrees()).collect::<Vec<_>>()
        );
        // amplitudes match the generating scene
        for (t, _) in truth.iter().zip(&est.angles) {
            let idx = est
                .angles
                .iter()
                .position(|e| wraparound_separation(*e, t.0).to_degrees() < 0.001)
                .unwrap();
            assert!((est.amplitudes[idx] - t.1).norm() < 1e-4 * t.1.norm().max(1.0));
        }
        // the residual reflects the angle error scale at the default gap
        assert!(est.diagnostics.amplitude_residual < 1e-3);
    }

    #[test]
    fn recover_amplitudes_exact_at_true_angles() {
        let geom = ArrayGeometry::make_uca(10, 1.2).unwrap();
        let truth = [(-2.1f64, c(3.0, 1.0)), (0.7, c(0.5, -0.2)), (2.5, c(-1.0, 2.0))];
        let scn = Scenario::new(geom.clone(), truth.to_vec());
        let y = synthesize(&scn);
        let angles: Vec<f64> = truth.iter().map(|s| s.0).collect();
        let (amps, residual) = recover_amplitudes(&y, &geom, &angles).unwrap();
        for ((_, s_true), s_est) in truth.iter().zip(&amps) {
            assert!((s_true - s_est).norm() < 1e-8 * s_true.norm());
        }
        assert!(residual < 1e-10);
    }

    #[test]
    fn recover_amplitudes_random_five_source_self_consistency() {
        let geom = ArrayGeometry::make_uca(40, 1.59).unwrap();
        let mut seed = 7u64;
        let mut next = move || {
            seed = seed.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = seed;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
        };
        let truth: Vec<(f64, Complex64)> = (0..5)
            .map(|i| {
                (
                    -3.0 + 1.2 * i as f64 + 0.3 * next(),
                    c(next() * 4.0 - 2.0, next() * 4.0 - 2.0),
                )
            })
            .collect();
        let scn = Scenario::new(geom.clone(), truth.clone());
        let y = synthesize(&scn);
        let angles: Vec<f64> = truth.iter().map(|s| s.0).collect();
        let (amps, _) = recover_amplitudes(&y, &geom, &angles).unwrap();
        for ((_, s_true), s_est) in truth.iter().zip(&amps) {
            assert!((s_true - s_est).norm() < 1e-8 * s_true.norm().max(1.0));
        }
    }

    #[test]
    fn recover_amplitudes_nearly_coincident_angles_error() {
        let geom = ArrayGeometry::make_uca(10, 1.2).unwrap();
        let y = synthesize(&Scenario::new(geom.clone(), vec![(0.5, c(1.0, 0.0))]));
        let angles = [0.5, 0.5 + 1e-13];
        match recover_amplitudes(&y, &geom, &angles) {
            Err(PipelineError::Amplitudes(LinAlgError::IllConditioned { .. })) => {}
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }

    #[test]
    fn global_phase_equivariance() {
        let geom = ArrayGeometry::make_uca(12, 1.0).unwrap();
        let truth = vec![(-0.9f64, c(2.0, 0.0)), (1.1, c(0.0, 1.0))];
        let y = synthesize(&Scenario::new(geom.clone(), truth));
        let opts = EstimateOptions::default();
        let base = estimate(&y, &geom, &opts).unwrap();
        let phase = Complex64::from_polar(1.0, 1.234);
        let y_rot: Vec<Complex64> = y.iter().map(|v| v * phase).collect();
        let rot = estimate(&y_rot, &geom, &opts).unwrap();
        assert_eq!(base.angles.len(), rot.angles.len());
        for (a, b) in base.angles.iter().zip(&rot.angles) {
            assert!(wraparound_separation(*a, *b).to_degrees() < 1e-6);
        }
        for (sa, sb) in base.amplitudes.iter().zip(&rot.amplitudes) {
            assert!((sb - sa * phase).norm() < 1e-6 * sa.norm().max(1.0));
        }
    }

    #[test]
    fn positive_scaling_equivariance() {
        let geom = ArrayGeometry::make_uca(12, 1.0).unwrap();
        let truth = vec![(-0.9f64, c(2.0, 0.0)), (1.1, c(0.0, 1.0))];
        let y = synthesize(&Scenario::new(geom.clone(), truth));
        let opts = EstimateOptions::default();
        let base = estimate(&y, &geom, &opts).unwrap();
        let alpha = 3.7f64;
        let y_scaled: Vec<Complex64> = y.iter().map(|v| v * alpha).collect();
        let scaled = estimate(&y_scaled, &geom, &opts).unwrap();
        assert_eq!(base.angles.len(), scaled.angles.len());
        for (a, b) in base.angles.iter().zip(&scaled.angles) {
            assert!(wraparound_separation(*a, *b).to_degrees() < 1e-6);
        }
        for (sa, sb) in base.amplitudes.iter().zip(&scaled.amplitudes) {
            assert!((sb - sa * alpha).norm() < 1e-6 * (alpha * sa.norm()).max(1.0));
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let geom = ArrayGeometry::make_uca(6, 0.8).unwrap();
        let y = vec![c(1.0, 0.0); 5];
        assert!(matches!(
            estimate(&y, &geom, &EstimateOptions::default()),
            Err(PipelineError::ShapeMismatch { expected: 6, got: 5 })
        ));
    }
}
