//! Spherical harmonic matrices (SHMs) and their grams.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::direction::{Direction, PointSet};
use crate::eigen::{self, CMatrix, EigenSummary};
use crate::error::{Error, Result};
use crate::mask::SelectionMask;
use crate::sh::{coefficient_count, sh_vector, Basis};

/// How a direction's first angle becomes the polar argument of `Y_n^m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMapping {
    /// Geometric colatitude: elevations are converted with `θ_z = π/2 − θ_xy`.
    #[default]
    Geometric,
    /// The elevation above the xy plane is passed unconverted as the polar
    /// argument. Under it a 32-point Fibonacci lattice has κ ≈ 1670 and the
    /// CIPIC grid κ ≈ 338.02 at order 3.
    Literal,
}

impl AngleMapping {
    pub fn polar_argument(self, d: &Direction) -> f64 {
        match self {
            AngleMapping::Geometric => d.polar(),
            AngleMapping::Literal => d.elevation(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShmOptions {
    pub basis: Basis,
    pub mapping: AngleMapping,
}

impl ShmOptions {
    pub fn literal() -> Self {
        Self {
            mapping: AngleMapping::Literal,
            ..Self::default()
        }
    }
}

/// A P×Q matrix whose column j holds the harmonics through order N at direction j.
#[derive(Clone, Debug)]
pub struct ShMatrix {
    entries: CMatrix,
    order: Option<usize>,
    options: ShmOptions,
    source: Option<PointSet>,
}

impl ShMatrix {
    /// Wraps an arbitrary complex matrix so the optimizer can run on it.
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::DimensionMismatch("matrix must be non-empty".into()));
        }
        Ok(Self {
            entries,
            order: None,
            options: ShmOptions::default(),
            source: None,
        })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// Maximum SH degree, when the matrix was assembled from a point set.
    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn options(&self) -> ShmOptions {
        self.options
    }

    pub fn source(&self) -> Option<&PointSet> {
        self.source.as_ref()
    }

    /// P.
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    /// Q.
    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Matrix restricted to the selected columns, in ascending index order.
    pub fn select(&self, mask: &SelectionMask) -> Result<Self> {
        check_mask(self, mask)?;
        let idx = mask.indices();
        if idx.is_empty() {
            return Err(Error::InvalidInput("empty selection".into()));
        }
        Ok(Self {
            entries: self.entries.select_columns(&idx),
            order: self.order,
            options: self.options,
            source: match &self.source {
                Some(ps) => Some(ps.select(&idx)?),
                None => None,
            },
        })
    }

    pub fn transpose(&self) -> CMatrix {
        self.entries.transpose()
    }
}

/// SHM with the default geometric angle handling.
pub fn build_shm(points: &PointSet, order: usize, basis: Basis) -> ShMatrix {
    build_shm_with(
        points,
        order,
        ShmOptions {
            basis,
            mapping: AngleMapping::Geometric,
        },
    )
}

pub fn build_shm_with(points: &PointSet, order: usize, options: ShmOptions) -> ShMatrix {
    let p = coefficient_count(order);
    let mut entries = DMatrix::<Complex64>::zeros(p, points.len());
    for (j, d) in points.directions().iter().enumerate() {
        let theta = options.mapping.polar_argument(d);
        let col = sh_vector(order, theta, d.phi, options.basis);
        entries.column_mut(j).copy_from_slice(&col);
    }
    ShMatrix {
        entries,
        order: Some(order),
        options,
        source: Some(points.clone()),
    }
}

fn check_mask(shm: &ShMatrix, mask: &SelectionMask) -> Result<()> {
    if mask.len() != shm.cols() {
        return Err(Error::DimensionMismatch(format!(
            "mask of length {} for {} columns",
            mask.len(),
            shm.cols()
        )));
    }
    Ok(())
}

/// `AΔAᴴ` for the given mask, or `AAᴴ` without one.
pub fn gram(shm: &ShMatrix, mask: Option<&SelectionMask>) -> Result<CMatrix> {
    match mask {
        None => Ok(shm.entries.mul_to_adjoint()),
        Some(m) => {
            check_mask(shm, m)?;
            Ok(gram_of_columns(&shm.entries, &m.indices()))
        }
    }
}

trait MulAdjoint {
    fn mul_to_adjoint(&self) -> CMatrix;
}

impl MulAdjoint for CMatrix {
    fn mul_to_adjoint(&self) -> CMatrix {
        let mut g = self * self.adjoint();
        symmetrize(&mut g);
        g
    }
}

/// Forces exact Hermitian symmetry after accumulation round-off.
pub(crate) fn symmetrize(g: &mut CMatrix) {
    let n = g.nrows();
    for i in 0..n {
        g[(i, i)] = Complex64::new(g[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (g[(i, j)] + g[(j, i)].conj()) * 0.5;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
}

/// Gram of a column subset (with repetition allowed).
pub(crate) fn gram_of_columns(a: &CMatrix, columns: &[usize]) -> CMatrix {
    let p = a.nrows();
    let mut g = CMatrix::zeros(p, p);
    for &j in columns {
        add_rank_one(&mut g, a, j, 1.0);
    }
    g
}

/// `g += w · a_j a_jᴴ`, keeping exact Hermitian symmetry.
pub(crate) fn add_rank_one(g: &mut CMatrix, a: &CMatrix, j: usize, w: f64) {
    let p = a.nrows();
    let col = a.column(j);
    for r in 0..p {
        let cr = col[r] * w;
        g[(r, r)] += Complex64::new(cr.re * col[r].re + cr.im * col[r].im, 0.0);
        for s in (r + 1)..p {
            let v = cr * col[s].conj();
            g[(r, s)] += v;
            g[(s, r)] += v.conj();
        }
    }
}

pub fn gram_summary(shm: &ShMatrix, mask: Option<&SelectionMask>) -> Result<EigenSummary> {
    eigen::eigen_summary(&gram(shm, mask)?)
}

/// `sqrt(λ_max/λ_min)` of `AAᴴ`; `+∞` when rank deficient.
pub fn condition_number(shm: &ShMatrix) -> f64 {
    let (lo, hi) = eigen::extremes_unchecked(shm.entries.mul_to_adjoint());
    eigen::kappa_from_extremes(lo, hi)
}
