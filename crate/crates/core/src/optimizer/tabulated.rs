//! An inner solver backed by a finite table of `(λ_min, λ_max)` pairs, used to
//! exercise the sweep on a worked example without any matrices.

use super::{Candidate, InnerOutcome, InnerSolver, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::mask::SelectionMask;

/// Candidates laid out as a grid: column `j` has `λ_min = lambda_min[j]`, and
/// row `i` gives the `λ_max` of each column. The mask of a solution has a
/// single bit at `i·cols + j`.
///
/// Among candidates with equal `λ_max` the one with the smallest `λ_min` is
/// chosen, so the sweep visits every intermediate transition. Condition
/// numbers are reported as the plain ratio `λ_max/λ_min`.
#[derive(Clone, Debug)]
pub struct TabulatedSolver {
    lambda_min: Vec<f64>,
    lambda_max: Vec<Vec<f64>>,
    epsilon: f64,
}

impl TabulatedSolver {
    pub fn new(lambda_min: Vec<f64>, lambda_max: Vec<Vec<f64>>) -> Result<Self> {
        if lambda_min.is_empty() || lambda_max.iter().any(|r| r.len() != lambda_min.len()) {
            return Err(Error::DimensionMismatch(format!(
                "every λ_max row needs {} entries",
                lambda_min.len()
            )));
        }
        if lambda_min.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput("λ_min entries must be positive".into()));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
            epsilon: DEFAULT_EPSILON,
        })
    }

    /// Three rows of nine candidates with `λ_min = 0.1, …, 0.9`.
    pub fn worked_example() -> Self {
        Self::new(
            (1..=9).map(|k| k as f64 / 10.0).collect(),
            vec![
                vec![2., 4., 3., 1., 3., 11., 4., 2., 7.],
                vec![11., 6., 6., 5., 4., 9., 10., 4., 6.],
                vec![8., 9., 8., 11., 6., 2., 6., 3., 2.],
            ],
        )
        .expect("valid table")
    }

    fn width(&self) -> usize {
        self.lambda_min.len() * self.lambda_max.len()
    }
}

impl InnerSolver for TabulatedSolver {
    fn eta_upper_bound(&self) -> f64 {
        f64::INFINITY
    }

    fn solve(&mut self, eta: f64) -> Result<InnerOutcome> {
        let cols = self.lambda_min.len();
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, row) in self.lambda_max.iter().enumerate() {
            for (j, (&lmax, &lmin)) in row.iter().zip(&self.lambda_min).enumerate() {
                if lmin < eta + self.epsilon {
                    continue;
                }
                if best.is_none_or(|(_, bmax, bmin)| lmax < bmax || (lmax == bmax && lmin < bmin)) {
                    best = Some((i * cols + j, lmax, lmin));
                }
            }
        }
        Ok(match best {
            None => InnerOutcome::Infeasible,
            Some((bit, lambda_max, lambda_min)) => InnerOutcome::Feasible(Candidate {
                mask: SelectionMask::from_indices(self.width(), &[bit])?,
                lambda_min,
                lambda_max,
            }),
        })
    }

    fn condition(&self, lambda_min: f64, lambda_max: f64) -> f64 {
        lambda_max / lambda_min
    }
}
