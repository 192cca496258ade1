//! Plane-wave encoding, loudspeaker decoders and the normalized reproduction
//! error used to compare loudspeaker layouts.
//!
//! Loudspeakers are ideal plane-wave sources. A field with SH coefficients
//! `b̃` is decoded into speaker gains `g = D b̃` and re-encoded as `b = Y g`;
//! the reproduction error is `ξ = ‖b − b̃‖ / ‖b̃‖`. Where the usual notation
//! writes a transpose, the conjugate transpose is used, which coincides with
//! the transpose for the real basis.

use std::f64::consts::PI;

use nalgebra::{DVector, SVD};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direction::{Convention, Direction, PointSet};
use crate::eigen::{extremes_unchecked, kappa_from_extremes, CMatrix};
use crate::error::{Error, Result};
use crate::sh::{coefficient_count, sh_vector, Basis};
use crate::shm::{build_shm, ShMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShCoefficients {
    pub order: usize,
    pub values: Vec<Complex64>,
}

impl ShCoefficients {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Coefficients through a lower order.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order > self.order {
            return Err(Error::InvalidInput(format!(
                "cannot truncate order {} coefficients to order {order}",
                self.order
            )));
        }
        Ok(Self {
            order,
            values: self.values[..coefficient_count(order)].to_vec(),
        })
    }
}

/// `b̃ = Ỹ s` for plane waves from `sources` with real gains `s`.
pub fn encode_plane_waves(sources: &PointSet, gains: &[f64], order: usize, basis: Basis) -> Result<ShCoefficients> {
    if gains.len() != sources.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gains for {} sources",
            gains.len(),
            sources.len()
        )));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); coefficient_count(order)];
    for (d, &s) in sources.directions().iter().zip(gains) {
        for (v, y) in values.iter_mut().zip(sh_vector(order, d.polar(), d.phi, basis)) {
            *v += y * s;
        }
    }
    Ok(ShCoefficients { order, values })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "beta")]
pub enum DecoderKind {
    /// `D = (4π/Q) Yᴴ`.
    Sampling,
    /// `D = Yᴴ (Y Yᴴ)⁻¹`; needs full row rank.
    ModeMatching,
    /// Moore–Penrose pseudo-inverse: mode matching when `Y` has full row rank,
    /// the minimum-norm least-squares decoder otherwise.
    #[default]
    PseudoInverse,
    /// `D = Yᴴ (Y Yᴴ + β I)⁻¹`.
    Regularized(f64),
}

/// A Q×P decoding matrix.
#[derive(Clone, Debug)]
pub struct DecoderMatrix {
    pub kind: DecoderKind,
    pub entries: CMatrix,
}

impl DecoderMatrix {
    /// Speaker gains for a coefficient vector of the decoder's order.
    pub fn decode(&self, b: &ShCoefficients) -> Result<DVector<Complex64>> {
        if b.values.len() != self.entries.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "decoder expects {} coefficients, got {}",
                self.entries.ncols(),
                b.values.len()
            )));
        }
        Ok(&self.entries * DVector::from_column_slice(&b.values))
    }
}

fn inverse_gram(y: &CMatrix, beta: f64) -> Result<CMatrix> {
    let mut g = y * y.adjoint();
    for i in 0..g.nrows() {
        g[(i, i)] += Complex64::new(beta, 0.0);
    }
    let (lo, hi) = extremes_unchecked(g.clone());
    let kappa = kappa_from_extremes(lo, hi);
    if kappa.is_infinite() {
        return Err(Error::RankDeficient { kappa });
    }
    g.try_inverse().ok_or(Error::RankDeficient { kappa: f64::INFINITY })
}

pub fn build_decoder(shm: &ShMatrix, kind: DecoderKind) -> Result<DecoderMatrix> {
    let y = shm.entries();
    let entries = match kind {
        DecoderKind::Sampling => y.adjoint() * Complex64::new(4.0 * PI / y.ncols() as f64, 0.0),
        DecoderKind::ModeMatching => y.adjoint() * inverse_gram(y, 0.0)?,
        DecoderKind::Regularized(beta) => {
            if !(beta >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "regularization must be non-negative, got {beta}"
                )));
            }
            y.adjoint() * inverse_gram(y, beta)?
        }
        DecoderKind::PseudoInverse => {
            let svd = SVD::new(y.clone(), true, true);
            let smax = svd.singular_values.max();
            svd.pseudo_inverse(smax * 1e-12 * y.nrows().max(y.ncols()) as f64)
                .map_err(|e| Error::InvalidInput(e.to_string()))?
        }
    };
    Ok(DecoderMatrix { kind, entries })
}

/// Decoder order, evaluation order, decoder and basis of a reproduction study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproductionSetup {
    /// Order at which the field is decoded.
    pub order: usize,
    /// Order at which the target and reproduced fields are compared (≥ `order`).
    pub eval_order: usize,
    pub decoder: DecoderKind,
    pub basis: Basis,
}

impl ReproductionSetup {
    pub fn matched(order: usize) -> Self {
        Self {
            order,
            eval_order: order,
            decoder: DecoderKind::default(),
            basis: Basis::default(),
        }
    }
}

/// A decoder and the speakers' evaluation-order SHM, reusable across sources.
pub struct Reproducer {
    setup: ReproductionSetup,
    decoder: DecoderMatrix,
    speakers_eval: CMatrix,
}

impl Reproducer {
    pub fn new(speakers: &PointSet, setup: ReproductionSetup) -> Result<Self> {
        if setup.eval_order < setup.order {
            return Err(Error::InvalidInput(format!(
                "evaluation order {} below decoding order {}",
                setup.eval_order, setup.order
            )));
        }
        let decoder = build_decoder(&build_shm(speakers, setup.order, setup.basis), setup.decoder)?;
        let speakers_eval = build_shm(speakers, setup.eval_order, setup.basis).into_entries();
        Ok(Self {
            setup,
            decoder,
            speakers_eval,
        })
    }

    pub fn decoder(&self) -> &DecoderMatrix {
        &self.decoder
    }

    /// ξ for a unit plane wave from `source`.
    pub fn error(&self, source: &Direction) -> Result<f64> {
        source.validate()?;
        let target = sh_vector(self.setup.eval_order, source.polar(), source.phi, self.setup.basis);
        let b_tilde = DVector::from_column_slice(&target);
        let norm = b_tilde.norm();
        if norm == 0.0 {
            return Err(Error::InvalidInput("target field has zero norm".into()));
        }
        let decoded = &self.decoder.entries * b_tilde.rows(0, coefficient_count(self.setup.order));
        let b = &self.speakers_eval * decoded;
        Ok((b - b_tilde).norm() / norm)
    }
}

/// ξ for a single plane-wave source reproduced by `speakers`.
pub fn reproduction_error(source: &Direction, speakers: &PointSet, order: usize, eval_order: usize) -> Result<f64> {
    let setup = ReproductionSetup {
        eval_order,
        ..ReproductionSetup::matched(order)
    };
    Reproducer::new(speakers, setup)?.error(source)
}

/// 36 azimuths (10° steps) × 18 colatitudes (5°, 15°, …, 175°): 648 source directions.
pub fn source_grid() -> PointSet {
    let mut dirs = Vec::with_capacity(648);
    for j in 0..18 {
        let theta = (5.0 + 10.0 * j as f64).to_radians();
        for i in 0..36 {
            dirs.push(Direction::from_z(theta, (10.0 * i as f64).to_radians()));
        }
    }
    PointSet::new(dirs, Convention::FromZAxis).expect("valid grid")
}

/// ξ for every direction of `grid`.
pub fn error_map(speakers: &PointSet, grid: &PointSet, setup: ReproductionSetup) -> Result<Vec<f64>> {
    let rep = Reproducer::new(speakers, setup)?;
    grid.directions().par_iter().map(|d| rep.error(d)).collect()
}

pub fn mean_error(speakers: &PointSet, grid: &PointSet, setup: ReproductionSetup) -> Result<f64> {
    let xi = error_map(speakers, grid, setup)?;
    Ok(xi.iter().sum::<f64>() / xi.len() as f64)
}

/// Relative difference below which two errors count as a tie.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub xi_a: Vec<f64>,
    pub xi_b: Vec<f64>,
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
    /// Percentage of directions won by `a`, ties split evenly.
    pub a_percent: f64,
    pub b_percent: f64,
}

/// Compares two layouts over a grid of source directions.
pub fn direction_sweep(
    speakers_a: &PointSet,
    speakers_b: &PointSet,
    grid: &PointSet,
    setup: ReproductionSetup,
) -> Result<SweepReport> {
    let xi_a = error_map(speakers_a, grid, setup)?;
    let xi_b = error_map(speakers_b, grid, setup)?;
    let (mut a_wins, mut b_wins, mut ties) = (0, 0, 0);
    for (a, b) in xi_a.iter().zip(&xi_b) {
        let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if (a - b).abs() <= TIE_TOL * scale || (a - b).abs() < 1e-15 {
            ties += 1;
        } else if a < b {
            a_wins += 1;
        } else {
            b_wins += 1;
        }
    }
    let n = grid.len() as f64;
    Ok(SweepReport {
        a_percent: 100.0 * (a_wins as f64 + 0.5 * ties as f64) / n,
        b_percent: 100.0 * (b_wins as f64 + 0.5 * ties as f64) / n,
        xi_a,
        xi_b,
        a_wins,
        b_wins,
        ties,
    })
}
