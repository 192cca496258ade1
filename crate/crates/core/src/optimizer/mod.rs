//! Column-subset selection minimizing the condition number of an SHM.
//!
//! Minimizing `κ = sqrt(λ_max/λ_min)` of `AΔAᴴ` directly is awkward, so the
//! search is split into a family of inner problems
//!
//! ```text
//! minimize λ_max(AΔAᴴ)  subject to  Σ δ = Q′,  λ_min(AΔAᴴ) ≥ η + ε,  Uδ ≤ v
//! ```
//!
//! swept over lower bounds η. Starting at η = 0, each solution's `λ_min`
//! becomes the next η, so only the finitely many transition points where the
//! optimal mask changes are visited. The sweep stops when the inner problem
//! becomes infeasible or η reaches `Tr(AAᴴ)/P`, which bounds every `λ_min`.
//! The record with the smallest κ is the answer; with an exact inner solver it
//! is the global minimum over all masks.

mod exact;
mod local;
mod problem;
mod tabulated;

use serde::{Deserialize, Serialize};

use crate::direction::PointSet;
use crate::eigen::kappa_from_extremes;
use crate::error::{Error, Result};
use crate::mask::SelectionMask;
use crate::shm::{build_shm_with, ShMatrix, ShmOptions};

pub use exact::ExactSolver;
pub use local::LocalSearchSolver;
pub use problem::{dedup_columns, dedup_columns_within, Dedup, GroupProblem};
pub use tabulated::TabulatedSolver;

/// Relaxation of the strict inequality `λ_min > η`.
pub const DEFAULT_EPSILON: f64 = 1e-7;

/// `Tr(AAᴴ)/P`: no mask can push `λ_min(AΔAᴴ)` above it.
pub fn eta_upper_bound(shm: &ShMatrix) -> f64 {
    shm.entries().norm_squared() / shm.rows() as f64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Branch and bound; returns the global optimum of each inner problem.
    ExactBnb,
    /// Multi-restart swap descent; a heuristic.
    #[default]
    LocalSearch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub epsilon: f64,
    pub seed: u64,
    /// Local-search restarts per inner problem.
    pub restarts: usize,
    /// Branch-and-bound node budget per inner problem.
    pub max_nodes: u64,
    /// Upper limit on the number of recorded transitions.
    pub max_transitions: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::default(),
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            restarts: 8,
            max_nodes: 50_000_000,
            max_transitions: 5_000,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        Self {
            mode: SolverMode::ExactBnb,
            ..Self::default()
        }
    }

    pub fn local(seed: u64, restarts: usize) -> Self {
        Self {
            mode: SolverMode::LocalSearch,
            seed,
            restarts,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("at least one restart is required".into()));
        }
        Ok(())
    }
}

/// Per-circle caps on the number of selected points: `Uδ ≤ v`, where
/// `U[h][j] = 1` iff point `j` lies on hoop `h`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoopConstraintSet {
    /// Hoop index of every point.
    pub membership: Vec<usize>,
    pub caps: Vec<usize>,
}

impl HoopConstraintSet {
    pub fn new(membership: Vec<usize>, caps: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = membership.iter().find(|&&h| h >= caps.len()) {
            return Err(Error::InvalidInput(format!(
                "hoop index {bad} has no cap ({} caps given)",
                caps.len()
            )));
        }
        Ok(Self { membership, caps })
    }

    /// Caps for the hoops recorded as labels on a point set.
    pub fn from_labels(points: &PointSet, caps: Vec<usize>) -> Result<Self> {
        let labels = points
            .labels()
            .ok_or_else(|| Error::InvalidInput("point set carries no hoop labels".into()))?;
        Self::new(labels.to_vec(), caps)
    }

    pub fn hoop_count(&self) -> usize {
        self.caps.len()
    }

    /// The J×Q binary membership matrix U.
    pub fn membership_matrix(&self) -> Vec<Vec<u8>> {
        let mut u = vec![vec![0u8; self.membership.len()]; self.caps.len()];
        for (j, &h) in self.membership.iter().enumerate() {
            u[h][j] = 1;
        }
        u
    }

    /// `Uδ`.
    pub fn counts(&self, mask: &SelectionMask) -> Vec<usize> {
        let mut c = vec![0; self.caps.len()];
        for i in mask.indices() {
            c[self.membership[i]] += 1;
        }
        c
    }

    pub fn is_satisfied(&self, mask: &SelectionMask) -> bool {
        mask.len() == self.membership.len() && self.counts(mask).iter().zip(&self.caps).all(|(c, v)| c <= v)
    }

    /// Largest selection size the caps allow.
    pub fn capacity(&self) -> usize {
        let mut sizes = vec![0; self.caps.len()];
        for &h in &self.membership {
            sizes[h] += 1;
        }
        sizes.iter().zip(&self.caps).map(|(s, v)| (*s).min(*v)).sum()
    }
}

/// CIPIC hoop caps: `v_i = 14 + 3(i−1)` for `i = 1..13`, `v_i = 50 − 3(i−13)`
/// for `i = 14..25`, over 25 hoops of 50 consecutive points each.
pub fn make_cipic_caps() -> HoopConstraintSet {
    let caps = (1..=25usize)
        .map(|i| if i <= 13 { 14 + 3 * (i - 1) } else { 50 - 3 * (i - 13) })
        .collect();
    let membership = (0..1250).map(|j| j / 50).collect();
    HoopConstraintSet { membership, caps }
}

/// A feasible inner solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub mask: SelectionMask,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InnerOutcome {
    Feasible(Candidate),
    Infeasible,
}

/// One inner problem per lower bound η; the sweep only needs these hooks,
/// so tests can drive it with tabulated solutions.
pub trait InnerSolver {
    /// Sweep stops once η reaches this value.
    fn eta_upper_bound(&self) -> f64;

    /// Minimize `λ_max` subject to `λ_min ≥ η + ε` (and any side constraints).
    fn solve(&mut self, eta: f64) -> Result<InnerOutcome>;

    /// Condition number reported for a solution.
    fn condition(&self, lambda_min: f64, lambda_max: f64) -> f64 {
        kappa_from_extremes(lambda_min, lambda_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub index: usize,
    pub eta: f64,
    pub mask: SelectionMask,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The inner problem had no feasible mask.
    Infeasible,
    /// η reached the trace bound.
    UpperBound,
    /// The configured transition limit was hit.
    TransitionLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionTrace {
    pub records: Vec<TransitionRecord>,
    pub eta_upper_bound: f64,
    pub termination: Termination,
    /// Index of the best record; `None` for an empty trace.
    pub best_index: Option<usize>,
    pub eta_star: Option<f64>,
    pub kappa_star: Option<f64>,
    pub best_mask: Option<SelectionMask>,
}

impl TransitionTrace {
    /// Number of transitions R.
    pub fn r(&self) -> usize {
        self.records.len()
    }

    pub fn best(&self) -> Option<&TransitionRecord> {
        self.best_index.map(|i| &self.records[i])
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Runs the transition sweep against any inner solver.
pub fn sweep_with(inner: &mut dyn InnerSolver, max_transitions: usize) -> Result<TransitionTrace> {
    let ub = inner.eta_upper_bound();
    let mut eta = 0.0;
    let mut records: Vec<TransitionRecord> = Vec::new();
    let termination = loop {
        if eta >= ub {
            break Termination::UpperBound;
        }
        if records.len() >= max_transitions {
            break Termination::TransitionLimit;
        }
        match inner.solve(eta)? {
            InnerOutcome::Infeasible => break Termination::Infeasible,
            InnerOutcome::Feasible(c) => {
                if !(c.lambda_min > eta) {
                    return Err(Error::InvalidInput(format!(
                        "inner solver returned λ_min = {} not above η = {eta}",
                        c.lambda_min
                    )));
                }
                let kappa = inner.condition(c.lambda_min, c.lambda_max);
                let next = c.lambda_min;
                records.push(TransitionRecord {
                    index: records.len(),
                    eta,
                    mask: c.mask,
                    lambda_min: c.lambda_min,
                    lambda_max: c.lambda_max,
                    kappa,
                });
                eta = next;
            }
        }
    };

    let mut best_index: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if best_index.is_none_or(|b| r.kappa < records[b].kappa) {
            best_index = Some(i);
        }
    }
    let best = best_index.map(|i| &records[i]);
    Ok(TransitionTrace {
        eta_upper_bound: ub,
        termination,
        best_index,
        eta_star: best.map(|r| r.eta),
        kappa_star: best.map(|r| r.kappa),
        best_mask: best.map(|r| r.mask.clone()),
        records,
    })
}

fn make_solver(problem: GroupProblem, cfg: &SolverConfig) -> Box<dyn InnerSolver> {
    match cfg.mode {
        SolverMode::ExactBnb => Box::new(ExactSolver::new(problem, *cfg)),
        SolverMode::LocalSearch => Box::new(LocalSearchSolver::new(problem, *cfg)),
    }
}

/// One inner problem at a fixed η. `Ok(None)` means infeasible.
pub fn inner_solve(
    shm: &ShMatrix,
    q_prime: usize,
    eta: f64,
    hoops: Option<&HoopConstraintSet>,
    cfg: &SolverConfig,
) -> Result<Option<Candidate>> {
    cfg.validate()?;
    let problem = GroupProblem::new(shm, q_prime, hoops, cfg.epsilon)?;
    match make_solver(problem, cfg).solve(eta)? {
        InnerOutcome::Feasible(c) => Ok(Some(c)),
        InnerOutcome::Infeasible => Ok(None),
    }
}

/// Transition sweep selecting `q_prime` columns of `shm`.
pub fn sweep_transitions(
    shm: &ShMatrix,
    q_prime: usize,
    hoops: Option<&HoopConstraintSet>,
    cfg: &SolverConfig,
) -> Result<TransitionTrace> {
    cfg.validate()?;
    let problem = GroupProblem::new(shm, q_prime, hoops, cfg.epsilon)?;
    let mut solver = make_solver(problem, cfg);
    sweep_with(solver.as_mut(), cfg.max_transitions)
}

/// Hoop-constrained selection on an interaural grid.
pub fn optimize_hrtf_grid(
    points: &PointSet,
    order: usize,
    q_prime: usize,
    caps: &HoopConstraintSet,
    options: ShmOptions,
    cfg: &SolverConfig,
) -> Result<TransitionTrace> {
    if caps.membership.len() != points.len() {
        return Err(Error::DimensionMismatch(format!(
            "hoop membership covers {} points, grid has {}",
            caps.membership.len(),
            points.len()
        )));
    }
    if let Some(labels) = points.labels() {
        if labels != caps.membership.as_slice() {
            return Err(Error::InvalidInput(
                "hoop membership disagrees with the point labels".into(),
            ));
        }
    }
    let shm = build_shm_with(points, order, options);
    sweep_transitions(&shm, q_prime, Some(caps), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_sweep() {
        let mut t = TabulatedSolver::worked_example();
        let trace = sweep_with(&mut t, 100).unwrap();
        let got: Vec<_> = trace.records.iter().map(|r| (r.lambda_max, r.lambda_min)).collect();
        assert_eq!(got, vec![(1.0, 0.4), (2.0, 0.6), (2.0, 0.8), (2.0, 0.9)]);
        assert_eq!(trace.kappa_star, Some(2.0 / 0.9));
        assert_eq!(trace.eta_star, Some(0.8));
        assert_eq!(trace.termination, Termination::Infeasible);
        // (row, col) = (0,3), (2,5), (0,7), (2,8) on a 9-column grid
        let bits: Vec<_> = trace.records.iter().map(|r| r.mask.indices()[0]).collect();
        assert_eq!(bits, vec![3, 23, 7, 26]);
    }

    #[test]
    fn transition_limit_stops_sweep() {
        let mut t = TabulatedSolver::new(vec![0.1, 0.2, 0.3], vec![vec![1.0, 1.0, 1.0]]).unwrap();
        let trace = sweep_with(&mut t, 2).unwrap();
        assert_eq!(trace.r(), 2);
        assert_eq!(trace.termination, Termination::TransitionLimit);
    }

    #[test]
    fn cipic_caps() {
        let h = make_cipic_caps();
        assert_eq!(h.caps.len(), 25);
        assert_eq!(h.caps[0], 14);
        assert_eq!(h.caps[12], 50);
        assert_eq!(h.caps[24], 14);
        assert_eq!(h.caps.iter().sum::<usize>(), 782);
        let u = h.membership_matrix();
        for j in 0..1250 {
            assert_eq!(u.iter().map(|row| row[j] as usize).sum::<usize>(), 1);
        }
        assert_eq!(h.capacity(), 782);
    }

    #[test]
    fn hoop_counts() {
        let h = HoopConstraintSet::new(vec![0, 0, 1, 1, 1], vec![1, 2]).unwrap();
        let ok = SelectionMask::from_indices(5, &[0, 2, 3]).unwrap();
        let bad = SelectionMask::from_indices(5, &[0, 1, 2]).unwrap();
        assert!(h.is_satisfied(&ok));
        assert!(!h.is_satisfied(&bad));
        assert!(HoopConstraintSet::new(vec![0, 2], vec![1, 1]).is_err());
    }
}
