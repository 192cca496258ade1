//! Orthonormal spherical harmonics.
//!
//! Complex harmonics carry the Condon–Shortley phase:
//!
//! ```text
//! Y_n^m(θ, φ) = sqrt((2n+1)/(4π) · (n-m)!/(n+m)!) · P_n^m(cos θ) · e^{imφ}
//! Y_n^{-m}    = (-1)^m · conj(Y_n^m)
//! ```
//!
//! The associated Legendre values are produced directly in normalized form by
//! the standard stable column recurrence, so nothing overflows at the orders
//! used here (N ≤ 20 and well beyond).
//!
//! Vectors are laid out in the row order `(0,0), (1,-1), (1,0), (1,1), …`,
//! i.e. `(n, m)` lives at index `n² + n + m`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    #[default]
    ComplexOrthonormal,
    RealOrthonormal,
}

/// Number of coefficients up to and including degree `order`.
pub const fn coefficient_count(order: usize) -> usize {
    (order + 1) * (order + 1)
}

/// Row index of `(n, m)`.
pub fn sh_index(n: usize, m: i64) -> usize {
    ((n * n + n) as i64 + m) as usize
}

/// Degree of the coefficient at a row index.
pub fn degree_of(index: usize) -> usize {
    (index as f64).sqrt().floor() as usize
}

/// Normalized associated Legendre table: `out[n][m]` for `0 ≤ m ≤ n ≤ order`,
/// including the `1/sqrt(4π)` factor and the Condon–Shortley phase.
///
/// `s` must be `sqrt(1 - x²) ≥ 0`.
pub(crate) fn normalized_legendre(order: usize, x: f64, s: f64) -> Vec<Vec<f64>> {
    let mut p: Vec<Vec<f64>> = (0..=order).map(|n| vec![0.0; n + 1]).collect();
    p[0][0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=order {
        let mf = m as f64;
        p[m][m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..order {
        p[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * x * p[m][m];
    }
    for m in 0..=order {
        let mf = m as f64;
        for n in (m + 2)..=order {
            let nf = n as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
            p[n][m] = a * (x * p[n - 1][m] - b * p[n - 2][m]);
        }
    }
    p
}

/// All harmonics through `order` at a polar angle `theta` (from +z) and azimuth `phi`.
///
/// `theta` is used as given; negative or > π inputs are evaluated through
/// `cos θ` and `|sin θ|`, which is what the literal angle mapping relies on.
pub fn sh_vector(order: usize, theta: f64, phi: f64, basis: Basis) -> Vec<Complex64> {
    let x = theta.cos();
    let s = theta.sin().abs();
    let p = normalized_legendre(order, x, s);
    let mut out = vec![Complex64::new(0.0, 0.0); coefficient_count(order)];
    for n in 0..=order {
        out[sh_index(n, 0)] = Complex64::new(p[n][0], 0.0);
        for m in 1..=n {
            let mf = m as f64;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            match basis {
                Basis::ComplexOrthonormal => {
                    let pos = Complex64::from_polar(p[n][m], mf * phi);
                    out[sh_index(n, m as i64)] = pos;
                    out[sh_index(n, -(m as i64))] = pos.conj() * sign;
                }
                Basis::RealOrthonormal => {
                    let scale = SQRT_2 * sign * p[n][m];
                    out[sh_index(n, m as i64)] = Complex64::new(scale * (mf * phi).cos(), 0.0);
                    out[sh_index(n, -(m as i64))] = Complex64::new(scale * (mf * phi).sin(), 0.0);
                }
            }
        }
    }
    out
}

/// Complex orthonormal `Y_n^m` at a direction (converted geometrically to a polar angle).
pub fn eval_sh(n: usize, m: i64, d: &Direction) -> Result<Complex64> {
    if m.unsigned_abs() as usize > n {
        return Err(Error::Domain { n, m });
    }
    d.validate()?;
    let v = sh_vector(n, d.polar(), d.phi, Basis::ComplexOrthonormal);
    Ok(v[sh_index(n, m)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zeroth_harmonic_is_constant() {
        for &(t, p) in &[(0.0, 0.0), (1.0, 2.0), (3.0, 6.0)] {
            let y = eval_sh(0, 0, &Direction::from_z(t, p)).unwrap();
            assert_abs_diff_eq!(y.re, 0.28209479177387814, epsilon = 1e-15);
            assert_eq!(y.im, 0.0);
        }
    }

    #[test]
    fn dipole_at_north_pole() {
        let y = eval_sh(1, 0, &Direction::from_z(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(y.re, (3.0 / (4.0 * PI)).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(
            eval_sh(2, 3, &Direction::from_z(0.5, 0.0)),
            Err(Error::Domain { n: 2, m: 3 })
        ));
        assert!(eval_sh(2, -3, &Direction::from_z(0.5, 0.0)).is_err());
    }

    #[test]
    fn conjugate_symmetry() {
        let d = Direction::from_z(0.9, 2.4);
        for n in 0..8usize {
            for m in 1..=n as i64 {
                let pos = eval_sh(n, m, &d).unwrap();
                let neg = eval_sh(n, -m, &d).unwrap();
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert_abs_diff_eq!((neg - pos.conj() * sign).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn index_layout() {
        let mut expect = 0;
        for n in 0..=6usize {
            for m in -(n as i64)..=n as i64 {
                assert_eq!(sh_index(n, m), expect);
                assert_eq!(degree_of(expect), n);
                expect += 1;
            }
        }
    }

    #[test]
    fn real_basis_is_unitary_image_of_complex() {
        // Per-degree column norms agree.
        let (t, p) = (1.3, 0.4);
        let c = sh_vector(5, t, p, Basis::ComplexOrthonormal);
        let r = sh_vector(5, t, p, Basis::RealOrthonormal);
        for n in 0..=5usize {
            let range = sh_index(n, -(n as i64))..=sh_index(n, n as i64);
            let nc: f64 = c[range.clone()].iter().map(|z| z.norm_sqr()).sum();
            let nr: f64 = r[range].iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(nc, nr, epsilon = 1e-14);
            // addition theorem
            assert_abs_diff_eq!(nc, (2 * n + 1) as f64 / (4.0 * PI), epsilon = 1e-13);
        }
    }

    #[test]
    fn finite_at_order_twenty_near_poles() {
        for &t in &[1e-9, 0.01, PI - 1e-9] {
            let v = sh_vector(20, t, 0.3, Basis::ComplexOrthonormal);
            assert!(v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        }
    }
}
