//! Inner-problem data shared by the solvers: duplicate-column groups, hoop
//! capacities and the deterministic solution order.

use std::cmp::Ordering;

use num_complex::Complex64;

use super::{eta_upper_bound, HoopConstraintSet};
use crate::eigen::CMatrix;
use crate::error::{Error, Result};
use crate::mask::SelectionMask;
use crate::shm::{add_rank_one, ShMatrix};

/// Columns equal within this absolute tolerance are treated as one.
pub const DEDUP_TOL: f64 = 1e-10;

/// Groups of identical columns. Group order follows the first member; members
/// are ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dedup {
    pub groups: Vec<Vec<usize>>,
    pub group_of: Vec<usize>,
}

impl Dedup {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Columns that can be dropped without changing the column space.
    pub fn removable(&self) -> usize {
        self.group_of.len() - self.groups.len()
    }

    /// Points that share their column with at least one other point.
    pub fn duplicated_points(&self) -> usize {
        self.groups.iter().filter(|g| g.len() > 1).map(Vec::len).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.groups.len() == self.group_of.len()
    }

    /// Mask taking the first `counts[g]` members of each group.
    pub fn expand(&self, counts: &[u32]) -> SelectionMask {
        let mut bits = vec![false; self.group_of.len()];
        for (g, &c) in counts.iter().enumerate() {
            for &i in &self.groups[g][..c as usize] {
                bits[i] = true;
            }
        }
        SelectionMask::from_bits(bits)
    }

    /// Per-group counts of a mask.
    pub fn contract(&self, mask: &SelectionMask) -> Vec<u32> {
        let mut counts = vec![0u32; self.groups.len()];
        for i in mask.indices() {
            counts[self.group_of[i]] += 1;
        }
        counts
    }
}

fn columns_equal(a: &CMatrix, i: usize, j: usize) -> bool {
    a.column(i)
        .iter()
        .zip(a.column(j).iter())
        .all(|(x, y)| (x.re - y.re).abs() <= DEDUP_TOL && (x.im - y.im).abs() <= DEDUP_TOL)
}

/// Groups equal columns; when `labels` is given only columns with the same
/// label are merged (so hoop counts survive the reduction).
pub fn dedup_columns_within(shm: &ShMatrix, labels: Option<&[usize]>) -> Result<(ShMatrix, Dedup)> {
    let a = shm.entries();
    if let Some(l) = labels {
        if l.len() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} columns",
                l.len(),
                a.ncols()
            )));
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = Vec::with_capacity(a.ncols());
    for j in 0..a.ncols() {
        let found = groups.iter().position(|g| {
            let rep = g[0];
            labels.is_none_or(|l| l[rep] == l[j]) && columns_equal(a, rep, j)
        });
        match found {
            Some(g) => {
                groups[g].push(j);
                group_of.push(g);
            }
            None => {
                group_of.push(groups.len());
                groups.push(vec![j]);
            }
        }
    }
    let reps: Vec<usize> = groups.iter().map(|g| g[0]).collect();
    let reduced = shm.select(&SelectionMask::from_indices(a.ncols(), &reps)?)?;
    Ok((reduced, Dedup { groups, group_of }))
}

/// Groups equal columns of an SHM; the reduced matrix keeps one representative per group.
pub fn dedup_columns(shm: &ShMatrix) -> Result<(ShMatrix, Dedup)> {
    dedup_columns_within(shm, None)
}

/// A candidate in group-count form.
#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub counts: Vec<u32>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// The inner problem after duplicate reduction: choose `counts[g] ≤ mult[g]`
/// copies of each distinct column.
#[derive(Clone, Debug)]
pub struct GroupProblem {
    pub(crate) a: CMatrix,
    pub(crate) mult: Vec<u32>,
    pub(crate) hoop: Vec<usize>,
    pub(crate) caps: Vec<usize>,
    pub(crate) q_prime: usize,
    pub(crate) epsilon: f64,
    pub(crate) dedup: Dedup,
    pub(crate) upper_bound: f64,
    pub(crate) tol: f64,
}

impl GroupProblem {
    pub fn new(shm: &ShMatrix, q_prime: usize, hoops: Option<&HoopConstraintSet>, epsilon: f64) -> Result<Self> {
        let q = shm.cols();
        if q_prime == 0 || q_prime > q {
            return Err(Error::InvalidInput(format!("Q' = {q_prime} must be in 1..={q}")));
        }
        let labels = match hoops {
            Some(h) => {
                if h.membership.len() != q {
                    return Err(Error::DimensionMismatch(format!(
                        "hoop membership covers {} points, matrix has {q} columns",
                        h.membership.len()
                    )));
                }
                if h.capacity() < q_prime {
                    return Err(Error::Infeasible(format!(
                        "hoop caps admit at most {} points, {q_prime} requested",
                        h.capacity()
                    )));
                }
                Some(h.membership.as_slice())
            }
            None => None,
        };
        let (reduced, dedup) = dedup_columns_within(shm, labels)?;
        let hoop = match hoops {
            Some(h) => dedup.groups.iter().map(|g| h.membership[g[0]]).collect(),
            None => vec![0; dedup.groups.len()],
        };
        let caps = match hoops {
            Some(h) => h.caps.clone(),
            None => vec![q_prime],
        };
        let upper_bound = eta_upper_bound(shm);
        Ok(Self {
            a: reduced.into_entries(),
            mult: dedup.groups.iter().map(|g| g.len() as u32).collect(),
            hoop,
            caps,
            q_prime,
            epsilon,
            dedup,
            upper_bound,
            tol: 1e-10 * upper_bound.max(f64::MIN_POSITIVE),
        })
    }

    pub fn group_count(&self) -> usize {
        self.mult.len()
    }

    pub fn dedup(&self) -> &Dedup {
        &self.dedup
    }

    pub(crate) fn p(&self) -> usize {
        self.a.nrows()
    }

    pub(crate) fn gram(&self, counts: &[u32]) -> CMatrix {
        let mut g = CMatrix::zeros(self.p(), self.p());
        for (j, &c) in counts.iter().enumerate() {
            if c > 0 {
                add_rank_one(&mut g, &self.a, j, c as f64);
            }
        }
        g
    }

    pub(crate) fn add_column(&self, g: &mut CMatrix, j: usize, w: f64) {
        add_rank_one(g, &self.a, j, w);
    }

    pub(crate) fn hoop_usage(&self, counts: &[u32]) -> Vec<usize> {
        let mut used = vec![0; self.caps.len()];
        for (g, &c) in counts.iter().enumerate() {
            used[self.hoop[g]] += c as usize;
        }
        used
    }

    pub(crate) fn threshold(&self, eta: f64) -> f64 {
        eta + self.epsilon
    }

    /// Total order on solutions: smaller `λ_max`, then larger `λ_min`, then the
    /// lexicographically smaller selected-index list. Eigenvalues within the
    /// problem's tolerance count as equal.
    pub(crate) fn compare(&self, a: &Solution, b: &Solution) -> Ordering {
        let t = self.tol;
        if a.lambda_max < b.lambda_max - t {
            return Ordering::Less;
        }
        if a.lambda_max > b.lambda_max + t {
            return Ordering::Greater;
        }
        if a.lambda_min > b.lambda_min + t {
            return Ordering::Less;
        }
        if a.lambda_min < b.lambda_min - t {
            return Ordering::Greater;
        }
        self.dedup.expand(&a.counts).lex_cmp(&self.dedup.expand(&b.counts))
    }

    pub(crate) fn candidate(&self, s: &Solution) -> super::Candidate {
        super::Candidate {
            mask: self.dedup.expand(&s.counts),
            lambda_min: s.lambda_min,
            lambda_max: s.lambda_max,
        }
    }
}

/// `|z|²` helper used by the screening estimates.
pub(crate) fn abs2(z: Complex64) -> f64 {
    z.re * z.re + z.im * z.im
}
