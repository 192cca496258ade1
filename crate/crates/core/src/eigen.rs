//! Eigenvalue and condition-number utilities for Hermitian gram matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative eigenvalue floor: `λ_min ≤ RANK_FLOOR · λ_max` counts as rank deficient.
pub const RANK_FLOOR: f64 = 1e-12;

/// Largest tolerated relative asymmetry `max |H - Hᴴ| / max |H|`.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `sqrt(λ_max / λ_min)`, or `+∞` when rank deficient. Serialized as `null` when infinite.
    pub kappa: f64,
}

impl EigenSummary {
    /// Builds a summary from raw extreme eigenvalues, clamping round-off negatives.
    pub fn from_extremes(lambda_min: f64, lambda_max: f64) -> Self {
        let lambda_max = lambda_max.max(0.0);
        let lambda_min = if lambda_min <= RANK_FLOOR * lambda_max {
            lambda_min.max(0.0)
        } else {
            lambda_min
        };
        Self {
            lambda_min,
            lambda_max,
            kappa: kappa_from_extremes(lambda_min, lambda_max),
        }
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.kappa.is_infinite()
    }
}

/// `sqrt(λ_max / λ_min)`, infinite below the rank floor.
pub fn kappa_from_extremes(lambda_min: f64, lambda_max: f64) -> f64 {
    if lambda_max <= 0.0 || lambda_min <= RANK_FLOOR * lambda_max {
        f64::INFINITY
    } else {
        (lambda_max / lambda_min).sqrt()
    }
}

/// Relative asymmetry of a square matrix.
pub fn hermitian_defect(h: &CMatrix) -> f64 {
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.nrows() == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    let defect = hermitian_defect(h);
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    Ok(eigenvalues_unchecked(h.clone()))
}

/// Ascending eigenvalues without the Hermitian check; used on grams built
/// internally, which are Hermitian by construction.
pub(crate) fn eigenvalues_unchecked(h: CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Extreme eigenvalues `(λ_min, λ_max)` of an internally built gram.
pub(crate) fn extremes_unchecked(h: CMatrix) -> (f64, f64) {
    let ev = h.symmetric_eigenvalues();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Full eigendecomposition of an internally built gram (eigenvalues unsorted,
/// eigenvectors in matching columns).
pub(crate) fn eigen_unchecked(h: CMatrix) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
    SymmetricEigen::new(h)
}

pub fn eigen_summary(h: &CMatrix) -> Result<EigenSummary> {
    let ev = hermitian_eigenvalues(h)?;
    Ok(EigenSummary::from_extremes(ev[0], ev[ev.len() - 1]))
}

/// Singular values of an arbitrary complex matrix, descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// `σ_max / σ_min` over the `min(rows, cols)` singular values.
pub fn kappa_svd(a: &CMatrix) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 && lo * lo > RANK_FLOOR * hi * hi => hi / lo,
        _ => f64::INFINITY,
    }
}
