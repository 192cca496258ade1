//! Spherical-harmonic representation of direction- and frequency-dependent
//! transfer functions: least-squares fitting, interpolation, log-spectral
//! distortion and the equi-sampled vs. modified CIPIC grid comparison.
//!
//! Values are modelled per wavenumber as `H(k, Ω) = Σ_nm H_nm(k) Y_n^m(Ω)`,
//! so the samples on a grid satisfy `H(k) = Yᵀ H_nm(k)` with `Y` the P×Q SHM.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::direction::{Direction, PointSet};
use crate::eigen::{kappa_svd, CMatrix};
use crate::error::{Error, Result};
use crate::sampling;
use crate::sh::{coefficient_count, degree_of, sh_vector};
use crate::shm::{build_shm_with, ShmOptions};

/// Speed of sound used to convert frequencies to wavenumbers (m/s).
pub const SPEED_OF_SOUND: f64 = 340.0;

/// Magnitudes below this floor are clamped before taking logarithms.
pub const LSD_FLOOR: f64 = 1e-12;

/// `k = 2πf / c`.
pub fn wavenumber(frequency_hz: f64) -> f64 {
    TAU * frequency_hz / SPEED_OF_SOUND
}

/// Complex samples on a set of directions (rows) at a set of wavenumbers (columns).
#[derive(Clone, Debug)]
pub struct DirectionalSpectrum {
    directions: PointSet,
    wavenumbers: Vec<f64>,
    values: CMatrix,
}

impl DirectionalSpectrum {
    pub fn new(directions: PointSet, wavenumbers: Vec<f64>, values: CMatrix) -> Result<Self> {
        if values.nrows() != directions.len() || values.ncols() != wavenumbers.len() {
            return Err(Error::DimensionMismatch(format!(
                "values are {}×{}, expected {} directions × {} wavenumbers",
                values.nrows(),
                values.ncols(),
                directions.len(),
                wavenumbers.len()
            )));
        }
        if let Some(k) = wavenumbers.iter().find(|k| !k.is_finite() || **k < 0.0) {
            return Err(Error::InvalidInput(format!(
                "wavenumber {k} must be finite and non-negative"
            )));
        }
        Ok(Self {
            directions,
            wavenumbers,
            values,
        })
    }

    pub fn directions(&self) -> &PointSet {
        &self.directions
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    /// Root-mean-square magnitude over all samples.
    pub fn rms(&self) -> f64 {
        let n = self.values.len().max(1) as f64;
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / n).sqrt()
    }

    /// Adds circular complex Gaussian noise with standard deviation
    /// `level · rms()` per sample.
    pub fn with_noise(&self, level: f64, seed: u64) -> Result<Self> {
        if !(level >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise level must be non-negative, got {level}"
            )));
        }
        let sigma = level * self.rms() / 2f64.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = self.values.clone();
        for z in values.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(re, im) * sigma;
        }
        Ok(Self { values, ..self.clone() })
    }
}

/// Per-wavenumber SH coefficients: column `k` holds `H_nm(k)`.
#[derive(Clone, Debug)]
pub struct ShSpectrumCoefficients {
    pub order: usize,
    pub options: ShmOptions,
    pub wavenumbers: Vec<f64>,
    /// P×K coefficient matrix.
    pub coefficients: CMatrix,
    /// `‖H − Yᵀ H_nm‖_F / ‖H‖_F` of the fit (0 for generated coefficients).
    pub residual: f64,
    /// Condition number of the fitting matrix (1 for generated coefficients).
    pub kappa: f64,
}

impl ShSpectrumCoefficients {
    pub fn from_matrix(
        order: usize,
        options: ShmOptions,
        wavenumbers: Vec<f64>,
        coefficients: CMatrix,
    ) -> Result<Self> {
        if coefficients.nrows() != coefficient_count(order) || coefficients.ncols() != wavenumbers.len() {
            return Err(Error::DimensionMismatch(format!(
                "coefficients are {}×{}, expected {}×{}",
                coefficients.nrows(),
                coefficients.ncols(),
                coefficient_count(order),
                wavenumbers.len()
            )));
        }
        Ok(Self {
            order,
            options,
            wavenumbers,
            coefficients,
            residual: 0.0,
            kappa: 1.0,
        })
    }

    /// `H̃(k, Ω) = Σ_nm H_nm(k) Y_n^m(Ω)`.
    pub fn interpolate(&self, target: &Direction, k_index: usize) -> Result<Complex64> {
        if k_index >= self.coefficients.ncols() {
            return Err(Error::InvalidInput(format!(
                "wavenumber index {k_index} out of range (have {})",
                self.coefficients.ncols()
            )));
        }
        let y = sh_vector(
            self.order,
            self.options.mapping.polar_argument(target),
            target.phi,
            self.options.basis,
        );
        Ok(y.iter()
            .zip(self.coefficients.column(k_index).iter())
            .map(|(y, h)| y * h)
            .sum())
    }

    /// Evaluates the series at every point of `points` and every wavenumber.
    pub fn evaluate(&self, points: &PointSet) -> DirectionalSpectrum {
        let y = build_shm_with(points, self.order, self.options);
        let values = y.transpose() * &self.coefficients;
        DirectionalSpectrum {
            directions: points.clone(),
            wavenumbers: self.wavenumbers.clone(),
            values,
        }
    }

    /// Drops all degrees above `order`.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order > self.order {
            return Err(Error::InvalidInput(format!(
                "cannot truncate order {} coefficients to order {order}",
                self.order
            )));
        }
        let p = coefficient_count(order);
        Ok(Self {
            order,
            coefficients: self.coefficients.rows(0, p).into_owned(),
            ..self.clone()
        })
    }
}

/// Least-squares fit of order-`order` coefficients to every wavenumber.
pub fn fit_sh(data: &DirectionalSpectrum, order: usize) -> Result<ShSpectrumCoefficients> {
    fit_sh_with(data, order, ShmOptions::default())
}

pub fn fit_sh_with(data: &DirectionalSpectrum, order: usize, options: ShmOptions) -> Result<ShSpectrumCoefficients> {
    let p = coefficient_count(order);
    let q = data.directions.len();
    if q < p {
        return Err(Error::InvalidInput(format!(
            "{q} directions cannot determine {p} coefficients of order {order}"
        )));
    }
    let yt = build_shm_with(&data.directions, order, options).transpose();
    let kappa = kappa_svd(&yt);
    if kappa.is_infinite() {
        return Err(Error::RankDeficient { kappa });
    }
    // Householder QR: Yᵀ = QR, H_nm = R⁻¹ Qᴴ H. Rank was checked above, so R is invertible.
    let qr = yt.clone().qr();
    let coefficients = qr
        .r()
        .solve_upper_triangular(&(qr.q().adjoint() * &data.values))
        .ok_or(Error::RankDeficient { kappa })?;
    let norm = data.values.norm();
    let misfit = (&yt * &coefficients - &data.values).norm();
    Ok(ShSpectrumCoefficients {
        order,
        options,
        wavenumbers: data.wavenumbers.clone(),
        coefficients,
        residual: if norm > 0.0 { misfit / norm } else { misfit },
        kappa,
    })
}

/// Per direction, RMS over wavenumbers of `20·log10(|H_ref| / |H_test|)` in dB.
pub fn lsd(reference: &DirectionalSpectrum, test: &DirectionalSpectrum) -> Result<Vec<f64>> {
    if reference.values.shape() != test.values.shape() {
        return Err(Error::DimensionMismatch(format!(
            "reference is {:?}, test is {:?}",
            reference.values.shape(),
            test.values.shape()
        )));
    }
    if reference.wavenumbers != test.wavenumbers {
        return Err(Error::DimensionMismatch("wavenumber lists differ".into()));
    }
    let k = reference.values.ncols().max(1) as f64;
    Ok((0..reference.values.nrows())
        .map(|i| {
            let sum: f64 = reference
                .values
                .row(i)
                .iter()
                .zip(test.values.row(i).iter())
                .map(|(r, t)| {
                    let db = 20.0 * (r.norm().max(LSD_FLOOR) / t.norm().max(LSD_FLOOR)).log10();
                    db * db
                })
                .sum();
            (sum / k).sqrt()
        })
        .collect())
}

/// Mean level of generated fields, as a multiple of the typical fluctuation.
const SYNTH_LEVEL: f64 = 3.0;

/// Random band-limited coefficients: degree `n` entries are complex Gaussian
/// with standard deviation `1/(n+1)`, plus a constant offset on `H_00` that
/// keeps magnitudes away from zero (so log spectra stay well defined).
pub fn synth_coefficients(order: usize, seed: u64, wavenumbers: &[f64], options: ShmOptions) -> ShSpectrumCoefficients {
    let p = coefficient_count(order);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = DMatrix::from_element(p, wavenumbers.len(), Complex64::new(0.0, 0.0));
    for k in 0..wavenumbers.len() {
        for i in 0..p {
            let sd = 1.0 / (degree_of(i) as f64 + 1.0) / 2f64.sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c[(i, k)] = Complex64::new(re, im) * sd;
        }
        c[(0, k)] += Complex64::new(SYNTH_LEVEL * (4.0 * PI).sqrt(), 0.0);
    }
    ShSpectrumCoefficients::from_matrix(order, options, wavenumbers.to_vec(), c).expect("shape matches")
}

/// A synthetic field evaluated on `points`, with its generating coefficients.
pub fn synth_field(
    order: usize,
    seed: u64,
    wavenumbers: &[f64],
    points: &PointSet,
) -> (DirectionalSpectrum, ShSpectrumCoefficients) {
    let coeffs = synth_coefficients(order, seed, wavenumbers, ShmOptions::default());
    (coeffs.evaluate(points), coeffs)
}

/// Wavenumbers of 16 frequencies from 1 kHz to 16 kHz in 1 kHz steps.
pub fn protocol_wavenumbers() -> Vec<f64> {
    (1..=16).map(|j| wavenumber(1000.0 * j as f64)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub order: usize,
    pub seed: u64,
    /// Relative noise level added to the grid measurements (0 = noiseless).
    pub noise: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            order: 10,
            seed: 0,
            noise: 0.0,
        }
    }
}

/// One evaluation direction of the comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsdSample {
    pub lateral_deg: f64,
    pub elevation_deg: f64,
    pub lsd_ecc: f64,
    pub lsd_mcc: f64,
    pub mcc_wins: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub config: ProtocolConfig,
    pub kappa_ecc: f64,
    pub kappa_mcc: f64,
    pub residual_ecc: f64,
    pub residual_mcc: f64,
    pub median_lsd_ecc: f64,
    pub median_lsd_mcc: f64,
    pub max_lsd_ecc: f64,
    pub max_lsd_mcc: f64,
    /// Fraction of evaluation directions where MCC has the strictly lower LSD.
    pub mcc_win_fraction: f64,
    /// The same fraction restricted to elevations in [50°, 130°].
    pub mcc_win_fraction_overhead: f64,
    pub samples: Vec<LsdSample>,
}

impl ProtocolReport {
    /// Whether the grid with the smaller κ has the smaller median LSD.
    pub fn lower_kappa_wins(&self) -> bool {
        if self.kappa_ecc < self.kappa_mcc {
            self.median_lsd_ecc < self.median_lsd_mcc
        } else {
            self.median_lsd_mcc < self.median_lsd_ecc
        }
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    match s.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => s[n / 2],
        n => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    }
}

fn fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (hits, total) = flags.fold((0usize, 0usize), |(h, t), f| (h + f as usize, t + 1));
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Fits one synthetic field on the ECC and MCC grids and compares the
/// interpolations on the full CIPIC grid.
pub fn run_ecc_mcc_protocol(cfg: ProtocolConfig) -> Result<ProtocolReport> {
    let wavenumbers = protocol_wavenumbers();
    let truth = synth_coefficients(cfg.order, cfg.seed, &wavenumbers, ShmOptions::default());
    let eval_points = sampling::cipic();
    let reference = truth.evaluate(&eval_points);

    let grids = [sampling::ecc(), sampling::mcc()];
    let mut fits = Vec::with_capacity(2);
    for (g, grid) in grids.iter().enumerate() {
        let mut measured = truth.evaluate(grid);
        if cfg.noise > 0.0 {
            let noise_seed = cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(g as u64 + 1));
            measured = measured.with_noise(cfg.noise, noise_seed)?;
        }
        let fit = fit_sh(&measured, cfg.order)?;
        let map = lsd(&reference, &fit.evaluate(&eval_points))?;
        fits.push((fit, map));
    }
    let (ecc_fit, ecc_lsd) = &fits[0];
    let (mcc_fit, mcc_lsd) = &fits[1];

    let samples: Vec<LsdSample> = sampling::cipic_coordinates()
        .into_iter()
        .zip(ecc_lsd.iter().zip(mcc_lsd))
        .map(|((lateral_deg, elevation_deg), (&e, &m))| LsdSample {
            lateral_deg,
            elevation_deg,
            lsd_ecc: e,
            lsd_mcc: m,
            mcc_wins: m < e,
        })
        .collect();
    let overhead = |s: &&LsdSample| (50.0..=130.0).contains(&s.elevation_deg);
    Ok(ProtocolReport {
        config: cfg,
        kappa_ecc: ecc_fit.kappa,
        kappa_mcc: mcc_fit.kappa,
        residual_ecc: ecc_fit.residual,
        residual_mcc: mcc_fit.residual,
        median_lsd_ecc: median(ecc_lsd),
        median_lsd_mcc: median(mcc_lsd),
        max_lsd_ecc: ecc_lsd.iter().copied().fold(0.0, f64::max),
        max_lsd_mcc: mcc_lsd.iter().copied().fold(0.0, f64::max),
        mcc_win_fraction: fraction(samples.iter().map(|s| s.mcc_wins)),
        mcc_win_fraction_overhead: fraction(samples.iter().filter(overhead).map(|s| s.mcc_wins)),
        samples,
    })
}
