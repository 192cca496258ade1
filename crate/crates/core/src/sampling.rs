//! Point-set generators: Fibonacci lattice, Gaussian and equiangular grids,
//! embedded spherical T-designs and interaural (CIPIC-style) grids.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;

use crate::direction::{Convention, Direction, PointSet};
use crate::error::{Error, Result};

/// Golden-ratio lattice with `Q` points: `φ_i = 2π·c₁·i mod 2π`,
/// elevation `asin(2i/Q − 1)` for `i = 1..=Q`, where `c₁ = (√5 − 1)/2`.
pub fn fibonacci(q: usize) -> Result<PointSet> {
    if q == 0 {
        return Err(Error::InvalidInput("Fibonacci lattice needs Q >= 1".into()));
    }
    let c1 = (5f64.sqrt() - 1.0) / 2.0;
    let qf = q as f64;
    let dirs = (1..=q)
        .map(|i| {
            let fi = i as f64;
            let el = (2.0 * fi / qf - 1.0).clamp(-1.0, 1.0).asin();
            Direction::above_xy(el, (TAU * c1 * fi).rem_euclid(TAU))
        })
        .collect();
    PointSet::new(dirs, Convention::AboveXyPlane)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root, then Newton.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Gaussian grid of order `N` with its quadrature weights (summing to 4π).
#[derive(Clone, Debug)]
pub struct GaussianGrid {
    pub points: PointSet,
    pub weights: Vec<f64>,
}

/// `N+1` Gauss–Legendre colatitudes × `2(N+1)` azimuths `jπ/(N+1)`: `Q = 2(N+1)²`.
pub fn gaussian_grid(order: usize) -> GaussianGrid {
    let rings = order + 1;
    let azimuths = 2 * rings;
    let (nodes, gw) = gauss_legendre(rings);
    let dphi = PI / rings as f64;
    let mut dirs = Vec::with_capacity(rings * azimuths);
    let mut weights = Vec::with_capacity(rings * azimuths);
    // colatitude ascending from the north pole
    for (x, w) in nodes.iter().zip(&gw).rev() {
        let theta = x.clamp(-1.0, 1.0).acos();
        for j in 0..azimuths {
            dirs.push(Direction::from_z(theta, j as f64 * dphi));
            weights.push(w * dphi);
        }
    }
    GaussianGrid {
        points: PointSet::new(dirs, Convention::FromZAxis).expect("valid grid"),
        weights,
    }
}

pub fn gaussian(order: usize) -> PointSet {
    gaussian_grid(order).points
}

/// `2(N+1)` equal colatitude steps × `2(N+1)` equal azimuth steps.
///
/// Colatitudes sit at cell centres `π(2j+1)/(4(N+1))`, so the rings cluster
/// towards the poles without placing coincident points on them.
pub fn equiangular(order: usize) -> PointSet {
    let m = 2 * (order + 1);
    let mut dirs = Vec::with_capacity(m * m);
    for j in 0..m {
        let theta = PI * (2 * j + 1) as f64 / (2 * m) as f64;
        for k in 0..m {
            dirs.push(Direction::from_z(theta, TAU * k as f64 / m as f64));
        }
    }
    PointSet::new(dirs, Convention::FromZAxis).expect("valid grid")
}

/// Embedded spherical designs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TDesign {
    T2Q4,
    T3Q6,
    T3Q8,
    T5Q12,
    T7Q24,
    T8Q36,
    T10Q60,
}

impl TDesign {
    pub const ALL: [TDesign; 7] = [
        TDesign::T2Q4,
        TDesign::T3Q6,
        TDesign::T3Q8,
        TDesign::T5Q12,
        TDesign::T7Q24,
        TDesign::T8Q36,
        TDesign::T10Q60,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TDesign::T2Q4 => "T2Q4",
            TDesign::T3Q6 => "T3Q6",
            TDesign::T3Q8 => "T3Q8",
            TDesign::T5Q12 => "T5Q12",
            TDesign::T7Q24 => "T7Q24",
            TDesign::T8Q36 => "T8Q36",
            TDesign::T10Q60 => "T10Q60",
        }
    }

    /// Polynomial degree integrated exactly.
    pub fn strength(self) -> usize {
        match self {
            TDesign::T2Q4 => 2,
            TDesign::T3Q6 | TDesign::T3Q8 => 3,
            TDesign::T5Q12 => 5,
            TDesign::T7Q24 => 7,
            TDesign::T8Q36 => 8,
            TDesign::T10Q60 => 10,
        }
    }

    /// Highest SH order whose gram is a multiple of the identity (`T ≥ 2N`).
    pub fn supported_order(self) -> usize {
        self.strength() / 2
    }

    pub fn count(self) -> usize {
        match self {
            TDesign::T2Q4 => 4,
            TDesign::T3Q6 => 6,
            TDesign::T3Q8 => 8,
            TDesign::T5Q12 => 12,
            TDesign::T7Q24 => 24,
            TDesign::T8Q36 => 36,
            TDesign::T10Q60 => 60,
        }
    }

    fn data(self) -> &'static str {
        match self {
            TDesign::T2Q4 => include_str!("../data/t2q4.txt"),
            TDesign::T3Q6 => include_str!("../data/t3q6.txt"),
            TDesign::T3Q8 => include_str!("../data/t3q8.txt"),
            TDesign::T5Q12 => include_str!("../data/t5q12.txt"),
            TDesign::T7Q24 => include_str!("../data/t7q24.txt"),
            TDesign::T8Q36 => include_str!("../data/t8q36.txt"),
            TDesign::T10Q60 => include_str!("../data/t10q60.txt"),
        }
    }

    /// Smallest embedded design with at least `q` points.
    pub fn with_at_least(q: usize) -> Option<TDesign> {
        Self::ALL.into_iter().find(|d| d.count() >= q)
    }
}

impl std::str::FromStr for TDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TDesign::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownDesign(s.to_string()))
    }
}

fn parse_xyz(text: &str) -> Result<Vec<Vector3<f64>>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad coordinate in `{l}`: {e}")))?;
            match v.as_slice() {
                &[x, y, z] => Ok(Vector3::new(x, y, z)),
                _ => Err(Error::InvalidInput(format!("expected 3 coordinates in `{l}`"))),
            }
        })
        .collect()
}

pub fn tdesign(design: TDesign) -> PointSet {
    let pts = parse_xyz(design.data()).expect("embedded design data is well formed");
    debug_assert_eq!(pts.len(), design.count());
    PointSet::from_cartesian(&pts, Convention::FromZAxis).expect("embedded design data is valid")
}

pub fn load_tdesign(name: &str) -> Result<PointSet> {
    Ok(tdesign(name.parse()?))
}

/// Lateral angles (degrees) of the 25 CIPIC interaural hoops.
pub fn cipic_lateral_degrees() -> Vec<f64> {
    let mut v = vec![-80.0, -65.0, -55.0];
    v.extend((0..19).map(|k| -45.0 + 5.0 * k as f64));
    v.extend([55.0, 65.0, 80.0]);
    v
}

/// Converts interaural coordinates (lateral angle `l`, elevation `e` measured
/// around the interaural axis, both radians) to a direction above the xy plane.
///
/// `x = cos l · cos e` (front), `y = sin l` (interaural axis), `z = cos l · sin e` (up).
pub fn interaural_direction(lateral: f64, elevation: f64) -> Direction {
    let v = Vector3::new(
        lateral.cos() * elevation.cos(),
        lateral.sin(),
        lateral.cos() * elevation.sin(),
    );
    let el = v.z.clamp(-1.0, 1.0).asin();
    let az = v.y.atan2(v.x);
    Direction::above_xy(el.clamp(-FRAC_PI_2, FRAC_PI_2), az)
}

/// Inverse of [`interaural_direction`]: `(lateral, elevation)` in degrees,
/// with the elevation wrapped into `[-90°, 270°)` as on the CIPIC grid.
pub fn interaural_coordinates(d: &Direction) -> (f64, f64) {
    let v = d.to_cartesian();
    let lateral = v.y.clamp(-1.0, 1.0).asin().to_degrees();
    let mut elevation = v.z.atan2(v.x).to_degrees();
    if elevation < -90.0 {
        elevation += 360.0;
    }
    (lateral, elevation)
}

/// Points on circles of constant lateral angle. Each hoop is `(lateral, elevations)`,
/// all in radians; points are labelled with their hoop index.
pub fn interaural_points(hoops: &[(f64, Vec<f64>)]) -> Result<PointSet> {
    if hoops.is_empty() || hoops.iter().any(|(_, e)| e.is_empty()) {
        return Err(Error::InvalidInput("interaural grid needs non-empty hoops".into()));
    }
    let mut dirs = Vec::new();
    let mut labels = Vec::new();
    for (h, (lateral, elevations)) in hoops.iter().enumerate() {
        for &e in elevations {
            dirs.push(interaural_direction(*lateral, e));
            labels.push(h);
        }
    }
    PointSet::new(dirs, Convention::AboveXyPlane)?.with_labels(labels)
}

/// Cartesian grid of lateral angles × `count` elevations starting at
/// `elevation_start` with spacing `elevation_step` (radians).
pub fn interaural_grid(laterals: &[f64], elevation_start: f64, elevation_step: f64, count: usize) -> Result<PointSet> {
    if laterals.is_empty() || count == 0 {
        return Err(Error::InvalidInput(
            "interaural grid needs lateral angles and elevations".into(),
        ));
    }
    if !(elevation_step > 0.0) || elevation_step * count as f64 > TAU + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "elevation step {elevation_step} does not fit {count} samples on a circle"
        )));
    }
    let elevations: Vec<f64> = (0..count)
        .map(|k| elevation_start + elevation_step * k as f64)
        .collect();
    let hoops: Vec<_> = laterals.iter().map(|&l| (l, elevations.clone())).collect();
    interaural_points(&hoops)
}

fn degrees(v: &[f64]) -> Vec<f64> {
    v.iter().map(|d| d.to_radians()).collect()
}

/// `(lateral, elevation)` in degrees of every CIPIC grid point, in grid order.
pub fn cipic_coordinates() -> Vec<(f64, f64)> {
    cipic_lateral_degrees()
        .into_iter()
        .flat_map(|l| (0..50).map(move |k| (l, -45.0 + 5.625 * k as f64)))
        .collect()
}

/// CIPIC layout: 25 hoops × 50 elevations from −45° in 5.625° steps (1250 points).
pub fn cipic() -> PointSet {
    interaural_grid(
        &degrees(&cipic_lateral_degrees()),
        (-45f64).to_radians(),
        5.625f64.to_radians(),
        50,
    )
    .expect("valid preset")
}

/// Equi-sampled CIPIC configuration: 25 hoops × 25 elevations in 11.25° steps.
pub fn ecc() -> PointSet {
    interaural_grid(
        &degrees(&cipic_lateral_degrees()),
        (-45f64).to_radians(),
        11.25f64.to_radians(),
        25,
    )
    .expect("valid preset")
}

/// Elevation spacing (degrees) of the modified configuration for a lateral angle.
pub fn mcc_spacing_degrees(lateral_deg: f64) -> f64 {
    match lateral_deg.abs().round() as i64 {
        55..=90 => 33.75,
        30..=45 => 28.125,
        15..=25 => 22.5,
        5..=10 => 16.875,
        _ => 11.25,
    }
}

/// Modified CIPIC configuration: sparse, lateral-dependent spacing on the
/// front/below band [−45°, 45°] and the rear band [135°, 230.625°], with the
/// original 5.625° CIPIC spacing kept over the head (45°, 135°).
pub fn mcc() -> PointSet {
    const TOL: f64 = 1e-9;
    let hoops: Vec<_> = cipic_lateral_degrees()
        .into_iter()
        .map(|l| {
            let s = mcc_spacing_degrees(l);
            let mut el = Vec::new();
            let mut e = -45.0;
            while e <= 45.0 + TOL {
                el.push(e);
                e += s;
            }
            let mut k = 1;
            loop {
                let e = 45.0 + 5.625 * k as f64;
                if e >= 135.0 - TOL {
                    break;
                }
                el.push(e);
                k += 1;
            }
            let mut e = 135.0;
            while e <= 230.625 + TOL {
                el.push(e);
                e += s;
            }
            (l.to_radians(), degrees(&el))
        })
        .collect();
    interaural_points(&hoops).expect("valid preset")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sh::{coefficient_count, Basis};
    use crate::shm::{build_shm, build_shm_with, condition_number, ShmOptions};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn fibonacci_endpoints_and_azimuth_step() {
        let one = fibonacci(1).unwrap();
        assert_relative_eq!(one.directions()[0].theta, FRAC_PI_2, epsilon = 1e-15);
        let ps = fibonacci(50).unwrap();
        let c1 = (5f64.sqrt() - 1.0) / 2.0;
        for w in ps.directions().windows(2) {
            let step = (w[1].phi - w[0].phi).rem_euclid(TAU);
            assert!((step - (TAU * c1).rem_euclid(TAU)).abs() < 1e-12);
        }
        assert!(fibonacci(0).is_err());
    }

    #[test]
    fn fibonacci_32_literal_condition_number() {
        let y = build_shm_with(&fibonacci(32).unwrap(), 3, ShmOptions::literal());
        let k = condition_number(&y);
        assert!((k - 1670.0).abs() < 1.0, "κ = {k}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            // exact for degree 2n-1
            let deg = 2 * n - 2;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_relative_eq!(integral, 2.0 / (deg as f64 + 1.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn gaussian_counts_and_quadrature() {
        assert_eq!(gaussian(0).len(), 2);
        assert_eq!(gaussian(1).len(), 8);
        assert_eq!(gaussian(3).len(), 32);
        for n in 0..6 {
            let g = gaussian_grid(n);
            let y = build_shm(&g.points, n, Basis::ComplexOrthonormal);
            let mut yw = y.entries().clone();
            for (j, w) in g.weights.iter().enumerate() {
                yw.column_mut(j).scale_mut(*w);
            }
            let e = &yw * y.entries().adjoint()
                - crate::eigen::CMatrix::identity(coefficient_count(n), coefficient_count(n));
            assert!(e.iter().all(|z: &Complex64| z.norm() < 1e-10), "order {n}");
        }
    }

    #[test]
    fn equiangular_counts() {
        assert_eq!(equiangular(1).len(), 16);
        assert_eq!(equiangular(2).len(), 36);
    }

    #[test]
    fn tdesigns_load_with_unit_norm() {
        for d in TDesign::ALL {
            let ps = tdesign(d);
            assert_eq!(ps.len(), d.count());
            for v in ps.cartesian() {
                assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-14);
            }
        }
        assert!(matches!(load_tdesign("T4Q99"), Err(Error::UnknownDesign(_))));
        assert_eq!(load_tdesign("t5q12").unwrap().len(), 12);
    }

    #[test]
    fn tdesign_discrete_orthonormality() {
        for d in TDesign::ALL {
            let ps = tdesign(d);
            let n = d.supported_order();
            let y = build_shm(&ps, n, Basis::ComplexOrthonormal);
            let g = y.entries() * y.entries().adjoint() * Complex64::new(4.0 * PI / ps.len() as f64, 0.0);
            let p = coefficient_count(n);
            let e = g - crate::eigen::CMatrix::identity(p, p);
            assert!(e.iter().all(|z| z.norm() < 1e-8), "{}", d.name());
        }
    }

    #[test]
    fn interaural_presets() {
        let c = cipic();
        assert_eq!(c.len(), 1250);
        assert_eq!(c.labels().unwrap().iter().filter(|&&h| h == 12).count(), 50);
        let e = ecc();
        assert_eq!(e.len(), 625);
        assert_eq!(e.labels().unwrap().iter().filter(|&&h| h == 0).count(), 25);
        let single = interaural_grid(&[0.2], 0.0, 0.5, 4).unwrap();
        assert_eq!(single.len(), 4);
        assert_eq!(single.labels().unwrap(), &[0, 0, 0, 0]);
        assert!(interaural_grid(&[], 0.0, 0.5, 4).is_err());
    }

    #[test]
    fn cipic_literal_condition_number() {
        let y = build_shm_with(&cipic(), 3, ShmOptions::literal());
        assert_relative_eq!(condition_number(&y), 338.0216, epsilon = 1e-3);
    }

    #[test]
    fn mcc_spacing_follows_lateral_angle() {
        let m = mcc();
        assert_eq!(m.len(), 601);
        assert_eq!(mcc_spacing_degrees(0.0), 11.25);
        assert_eq!(mcc_spacing_degrees(-80.0), 33.75);
        let zero_hoop = cipic_lateral_degrees().iter().position(|&l| l == 0.0).unwrap();
        assert_eq!(m.labels().unwrap().iter().filter(|&&h| h == zero_hoop).count(), 33);
    }

    #[test]
    fn interaural_direction_front_and_side() {
        let front = interaural_direction(0.0, 0.0);
        assert_relative_eq!(front.theta, 0.0, epsilon = 1e-15);
        assert_relative_eq!(front.phi, 0.0, epsilon = 1e-15);
        let up = interaural_direction(0.0, FRAC_PI_2);
        assert_relative_eq!(up.theta, FRAC_PI_2, epsilon = 1e-12);
        let side = interaural_direction(FRAC_PI_2, 0.3);
        assert_relative_eq!(side.to_cartesian().y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interaural_coordinates_invert_the_grid() {
        for (p, (l, e)) in cipic().directions().iter().zip(cipic_coordinates()) {
            let (l2, e2) = interaural_coordinates(p);
            assert!(
                (l - l2).abs() < 1e-9 && (e - e2).abs() < 1e-9,
                "({l},{e}) vs ({l2},{e2})"
            );
        }
    }
}
