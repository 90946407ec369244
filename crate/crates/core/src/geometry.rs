//! Planar array geometries and their steering vectors.
//!
//! A sensor at position `p` (relative to the reference point) responds to a
//! far-field source at azimuth `theta` with the pure phase
//!
//! ```text
//! a(theta) = exp(-j 2 pi (|p|/lambda) cos(theta - angle(p)))
//! ```
//!
//! so all phase computations depend on the geometry only through the
//! wavelength-normalized polar coordinates of each sensor.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("geometry needs at least {min} sensors, got {got}")]
    TooFewSensors { min: usize, got: usize },
    #[error("wavelength must be positive and finite, got {0}")]
    BadWavelength(f64),
    #[error("sensor {index} has a non-finite position")]
    BadPosition { index: usize },
    #[error("random array packing infeasible: no valid placement after {attempts} attempts")]
    PackingInfeasible { attempts: usize },
    #[error("geometry csv line {line}: {message}")]
    CsvParse { line: usize, message: String },
}

/// Where the phase reference of a loaded geometry sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReferencePoint {
    /// Mean sensor position. Keeps the farthest normalized radius small,
    /// which keeps the Fourier representation short.
    #[default]
    Centroid,
    Origin,
}

/// Immutable planar array: sensor positions, wavelength, phase reference.
#[derive(Clone, Debug)]
pub struct ArrayGeometry {
    /// Sensor positions in meters.
    positions: Vec<[f64; 2]>,
    /// Wavelength in meters.
    wavelength: f64,
    /// Phase reference point in meters.
    reference: [f64; 2],
    /// Cached wavelength-normalized polar coordinates relative to the
    /// reference: (radius / lambda, angle).
    polar: Vec<(f64, f64)>,
}

/// Steering vector: the array response to a unit source at one azimuth.
#[derive(Clone, Debug)]
pub struct SteeringVector {
    pub theta: f64,
    pub values: Vec<Complex64>,
}

impl ArrayGeometry {
    /// General constructor. Estimation needs M >= 2, but single-sensor
    /// geometries are allowed here so manifold analysis can probe individual
    /// sensors.
    pub fn new(
        positions: Vec<[f64; 2]>,
        wavelength: f64,
        reference: [f64; 2],
    ) -> Result<Self, GeometryError> {
        if positions.is_empty() {
            return Err(GeometryError::TooFewSensors {
                min: 1,
                got: 0,
            });
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(GeometryError::BadWavelength(wavelength));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(GeometryError::BadPosition { index: i });
            }
        }
        let polar = positions
            .iter()
            .map(|p| {
                let dx = p[0] - reference[0];
                let dy = p[1] - reference[1];
                ((dx.hypot(dy)) / wavelength, dy.atan2(dx))
            })
            .collect();
        Ok(Self {
            positions,
            wavelength,
            reference,
            polar,
        })
    }

    /// Geometry from wavelength-normalized positions (`lambda = 1`).
    pub fn from_normalized(
        positions_over_lambda: Vec<[f64; 2]>,
        reference: ReferencePoint,
    ) -> Result<Self, GeometryError> {
        let reference = match reference {
            ReferencePoint::Origin => [0.0, 0.0],
            ReferencePoint::Centroid => centroid(&positions_over_lambda),
        };
        Self::new(positions_over_lambda, 1.0, reference)
    }

    /// Uniform circular array of `m` sensors: sensor `k` sits at polar angle
    /// `2 pi k / m` on a circle of the given normalized radius, reference at
    /// the center.
    pub fn make_uca(m: usize, radius_over_lambda: f64) -> Result<Self, GeometryError> {
        if m < 2 {
            return Err(GeometryError::TooFewSensors { min: 2, got: m });
        }
        if !(radius_over_lambda > 0.0) {
            return Err(GeometryError::BadPosition { index: 0 });
        }
        let positions = (0..m)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / m as f64;
                [radius_over_lambda * phi.cos(), radius_over_lambda * phi.sin()]
            })
            .collect();
        Self::new(positions, 1.0, [0.0, 0.0])
    }

    /// Random planar array: `m` sensors drawn uniformly in the disk of the
    /// given maximum normalized radius, rejecting draws closer than the
    /// minimum normalized spacing to an already placed sensor. Deterministic
    /// for a fixed seed.
    pub fn make_rpa(
        m: usize,
        min_spacing_over_lambda: f64,
        max_radius_over_lambda: f64,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        if m < 2 {
            return Err(GeometryError::TooFewSensors { min: 2, got: m });
        }
        const MAX_ATTEMPTS: usize = 1_000_000;
        let mut rng = SplitMix64::new(seed);
        let mut positions: Vec<[f64; 2]> = Vec::with_capacity(m);
        let mut attempts = 0;
        while positions.len() < m {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(GeometryError::PackingInfeasible {
                    attempts: MAX_ATTEMPTS,
                });
            }
            let r = max_radius_over_lambda * rng.next_f64().sqrt();
            let phi = 2.0 * PI * rng.next_f64();
            let cand = [r * phi.cos(), r * phi.sin()];
            let ok = positions.iter().all(|p| {
                let d = (p[0] - cand[0]).hypot(p[1] - cand[1]);
                d >= min_spacing_over_lambda
            });
            if ok {
                positions.push(cand);
            }
        }
        Self::new(positions, 1.0, [0.0, 0.0])
    }

    /// Parses the geometry CSV format: header `x_over_lambda,y_over_lambda`,
    /// one row per sensor, positions already normalized by the wavelength.
    pub fn from_csv_str(text: &str, reference: ReferencePoint) -> Result<Self, GeometryError> {
        let mut positions = Vec::new();
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((i, line)) if line.trim().is_empty() => {
                    let _ = i;
                    continue;
                }
                Some((i, line)) => break (i, line),
                None => {
                    return Err(GeometryError::CsvParse {
                        line: 1,
                        message: "empty file".into(),
                    })
                }
            }
        };
        if header.1.trim().replace(' ', "") != "x_over_lambda,y_over_lambda" {
            return Err(GeometryError::CsvParse {
                line: header.0 + 1,
                message: format!(
                    "expected header 'x_over_lambda,y_over_lambda', got '{}'",
                    header.1.trim()
                ),
            });
        }
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64, GeometryError> {
                s.map(str::trim)
                    .ok_or_else(|| GeometryError::CsvParse {
                        line: i + 1,
                        message: "expected two comma-separated values".into(),
                    })?
                    .parse::<f64>()
                    .map_err(|e| GeometryError::CsvParse {
                        line: i + 1,
                        message: e.to_string(),
                    })
            };
            let x = parse(parts.next())?;
            let y = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(GeometryError::CsvParse {
                    line: i + 1,
                    message: "expected exactly two values".into(),
                });
            }
            positions.push([x, y]);
        }
        if positions.len() < 2 {
            return Err(GeometryError::TooFewSensors {
                min: 2,
                got: positions.len(),
            });
        }
        Self::from_normalized(positions, reference)
    }

    /// Renders the geometry back to the CSV format (normalized positions).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("x_over_lambda,y_over_lambda\n");
        for p in &self.positions {
            out.push_str(&format!(
                "{},{}\n",
                p[0] / self.wavelength,
                p[1] / self.wavelength
            ));
        }
        out
    }

    pub fn sensors(&self) -> usize {
        self.positions.len()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn reference(&self) -> [f64; 2] {
        self.reference
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    /// `(|p_m|/lambda, angle(p_m))` for sensor `m`, relative to the reference.
    pub fn normalized_polar(&self, m: usize) -> (f64, f64) {
        self.polar[m]
    }

    /// Largest normalized distance of any sensor from the reference.
    pub fn farthest_radius_over_lambda(&self) -> f64 {
        self.polar.iter().map(|&(r, _)| r).fold(0.0, f64::max)
    }

    /// Steering vector at azimuth `theta` (radians).
    pub fn steering(&self, theta: f64) -> SteeringVector {
        let values = self
            .polar
            .iter()
            .map(|&(r, ang)| steering_entry(r, ang, theta))
            .collect();
        SteeringVector { theta, values }
    }

    /// Single steering entry for sensor `m`.
    pub fn steering_entry(&self, m: usize, theta: f64) -> Complex64 {
        let (r, ang) = self.polar[m];
        steering_entry(r, ang, theta)
    }
}

/// `exp(-j 2 pi r cos(theta - ang))` with `r = |p|/lambda`.
#[inline]
pub fn steering_entry(radius_over_lambda: f64, sensor_angle: f64, theta: f64) -> Complex64 {
    let phase = -2.0 * PI * radius_over_lambda * (theta - sensor_angle).cos();
    Complex64::from_polar(1.0, phase)
}

fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len().max(1) as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
    [sx / n, sy / n]
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t <= -PI {
        t += two_pi;
    } else if t > PI {
        t -= two_pi;
    }
    t
}

/// Wraparound angular separation in radians, in [0, pi].
pub fn wraparound_separation(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b).abs();
    d.min(2.0 * PI - d)
}

/// Minimal deterministic PRNG used for reproducible geometry generation and
/// Monte-Carlo draws; stable across platforms and library versions.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn origin_sensor_steers_to_unity() {
        let geom =
            ArrayGeometry::new(vec![[0.0, 0.0], [1.0, 0.0]], 1.0, [0.0, 0.0]).unwrap();
        for theta in [-2.0, 0.0, 0.7, 3.0] {
            let a = geom.steering(theta);
            assert!((a.values[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn integer_wavelength_radius_at_aligned_angle_is_unity() {
        // |p| = 2 lambda, angle(p) = 0, theta = 0: phase is -4 pi
        let geom = ArrayGeometry::new(vec![[2.0, 0.0], [0.0, 0.0]], 1.0, [0.0, 0.0]).unwrap();
        let a = geom.steering(0.0);
        assert!((a.values[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn uca_steering_matches_direct_formula() {
        let geom = ArrayGeometry::make_uca(40, 2.0).unwrap();
        let theta = 30.5_f64.to_radians();
        let a = geom.steering(theta);
        for m in 0..40 {
            // direct evaluation from the printed formula, written separately
            let sensor_angle = 2.0 * PI * m as f64 / 40.0;
            let expected = Complex64::new(0.0, -2.0 * PI * 2.0 * (theta - sensor_angle).cos()).exp();
            assert!((a.values[m] - expected).norm() < 1e-12, "sensor {m}");
        }
    }

    #[test]
    fn uca_arc_spacing_is_pi_over_ten_lambda() {
        let geom = ArrayGeometry::make_uca(40, 2.0).unwrap();
        // arc length between adjacent sensors: r * dphi = 2 * (2 pi / 40)
        let arc = 2.0 * (2.0 * PI / 40.0);
        assert!((arc - PI / 10.0).abs() < 1e-15);
        assert_eq!(geom.sensors(), 40);
        for m in 0..40 {
            let (r, _) = geom.normalized_polar(m);
            assert!((r - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uca_four_sensors_at_cardinal_angles() {
        let geom = ArrayGeometry::make_uca(4, 1.0).unwrap();
        let expected = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (p, e) in geom.positions().iter().zip(&expected) {
            assert!((p[0] - e[0]).abs() < 1e-12 && (p[1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn uca_radius_1_59_all_sensors() {
        let geom = ArrayGeometry::make_uca(40, 1.59).unwrap();
        for m in 0..40 {
            assert!((geom.normalized_polar(m).0 - 1.59).abs() < 1e-12);
        }
    }

    #[test]
    fn rpa_respects_spacing_and_radius() {
        let geom = ArrayGeometry::make_rpa(30, 0.25, 2.0, 7).unwrap();
        assert_eq!(geom.sensors(), 30);
        let ps = geom.positions();
        for i in 0..30 {
            assert!(ps[i][0].hypot(ps[i][1]) <= 2.0 + 1e-12);
            for j in i + 1..30 {
                let d = (ps[i][0] - ps[j][0]).hypot(ps[i][1] - ps[j][1]);
                assert!(d >= 0.25 - 1e-12, "sensors {i},{j} at distance {d}");
            }
        }
    }

    #[test]
    fn rpa_two_sensors_no_spacing_always_succeeds() {
        assert!(ArrayGeometry::make_rpa(2, 0.0, 1.0, 3).is_ok());
    }

    #[test]
    fn rpa_same_seed_is_deterministic() {
        let a = ArrayGeometry::make_rpa(12, 0.2, 1.5, 99).unwrap();
        let b = ArrayGeometry::make_rpa(12, 0.2, 1.5, 99).unwrap();
        assert_eq!(a.positions(), b.positions());
    }

    #[test]
    fn rpa_infeasible_packing_errors() {
        // 200 sensors at spacing 0.5 cannot fit in a unit disk
        match ArrayGeometry::make_rpa(200, 0.5, 1.0, 1) {
            Err(GeometryError::PackingInfeasible { .. }) => {}
            other => panic!("expected packing failure, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let geom = ArrayGeometry::make_rpa(5, 0.1, 1.0, 11).unwrap();
        let text = geom.to_csv_string();
        let back = ArrayGeometry::from_csv_str(&text, ReferencePoint::Origin).unwrap();
        for (p, q) in geom.positions().iter().zip(back.positions()) {
            assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_reference_defaults_to_centroid() {
        let text = "x_over_lambda,y_over_lambda\n1,0\n3,0\n";
        let geom = ArrayGeometry::from_csv_str(text, ReferencePoint::Centroid).unwrap();
        assert_eq!(geom.reference(), [2.0, 0.0]);
        assert!((geom.farthest_radius_over_lambda() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_bad_header_reports_line() {
        let text = "x,y\n1,2\n";
        match ArrayGeometry::from_csv_str(text, ReferencePoint::Origin) {
            Err(GeometryError::CsvParse { line: 1, .. }) => {}
            other => panic!("expected header error, got {other:?}"),
        }
    }

    #[test]
    fn wraparound_separation_example() {
        let d = wraparound_separation((-175.0f64).to_radians(), 177.0f64.to_radians());
        assert!((d.to_degrees() - 8.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn steering_entries_have_unit_magnitude(theta in -10.0f64..10.0, seed in 0u64..500) {
            let geom = ArrayGeometry::make_rpa(6, 0.1, 2.0, seed).unwrap();
            for v in geom.steering(theta).values {
                prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn steering_is_two_pi_periodic(theta in -3.2f64..3.2) {
            let geom = ArrayGeometry::make_uca(8, 1.3).unwrap();
            let a = geom.steering(theta);
            let b = geom.steering(theta + 2.0 * PI);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn rotating_sensors_shifts_the_steering_angle(theta in -3.0f64..3.0, phi in -3.0f64..3.0) {
            let base = ArrayGeometry::make_uca(10, 1.7).unwrap();
            let rotated_positions: Vec<[f64; 2]> = base
                .positions()
                .iter()
                .map(|p| {
                    [
                        p[0] * phi.cos() - p[1] * phi.sin(),
                        p[0] * phi.sin() + p[1] * phi.cos(),
                    ]
                })
                .collect();
            let rotated = ArrayGeometry::new(rotated_positions, 1.0, [0.0, 0.0]).unwrap();
            let a = rotated.steering(theta);
            let b = base.steering(theta - phi);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).norm() < 1e-11);
            }
        }
    }
}
