//! Branch and bound over per-group counts.
//!
//! Adding a column is a rank-one PSD update, which never lowers any eigenvalue
//! of the gram. Two bounds follow:
//!
//! * `λ_max` of the columns fixed so far is a lower bound on `λ_max` of every
//!   completion, so subtrees that already exceed the incumbent are cut;
//! * `λ_min` of the fixed columns plus *all* remaining columns is an upper
//!   bound on `λ_min` of every completion, so subtrees that cannot reach the
//!   threshold are cut.
//!
//! The first levels of the tree are expanded breadth-first and the resulting
//! subtrees are searched in parallel, sharing the incumbent `λ_max` through an
//! atomic. Each subtree returns its own best solution and the results are
//! reduced with the problem's total order, so the answer does not depend on
//! scheduling.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;

use super::local::LocalSearchSolver;
use super::problem::{GroupProblem, Solution};
use super::{InnerOutcome, InnerSolver, SolverConfig};
use crate::eigen::{extremes_unchecked, CMatrix};
use crate::error::{Error, Result};

/// Above this many groups the incumbent is seeded by a local search.
const SEED_THRESHOLD: usize = 16;
/// Target number of parallel subtrees.
const SPLIT_TARGET: usize = 64;

pub struct ExactSolver {
    problem: GroupProblem,
    cfg: SolverConfig,
    calls: u64,
}

impl ExactSolver {
    pub fn new(problem: GroupProblem, cfg: SolverConfig) -> Self {
        Self { problem, cfg, calls: 0 }
    }
}

struct Shared<'a> {
    problem: &'a GroupProblem,
    threshold: f64,
    /// `suffix[d] = Σ_{g ≥ d} mult[g] a_g a_gᴴ`.
    suffix: Vec<CMatrix>,
    /// `suffix_hoop[d][h]` = multiplicity of hoop `h` among groups `≥ d`.
    suffix_hoop: Vec<Vec<usize>>,
    incumbent: AtomicU64,
    nodes: AtomicU64,
    max_nodes: u64,
    exhausted: AtomicBool,
}

#[derive(Clone)]
struct Node {
    depth: usize,
    counts: Vec<u32>,
    gram: CMatrix,
    used: Vec<usize>,
    total: usize,
}

impl<'a> Shared<'a> {
    fn new(problem: &'a GroupProblem, threshold: f64, max_nodes: u64) -> Self {
        let g = problem.group_count();
        let p = problem.p();
        let j = problem.caps.len();
        let mut suffix = vec![CMatrix::zeros(p, p); g + 1];
        let mut suffix_hoop = vec![vec![0usize; j]; g + 1];
        for d in (0..g).rev() {
            let mut s = suffix[d + 1].clone();
            problem.add_column(&mut s, d, problem.mult[d] as f64);
            suffix[d] = s;
            let mut h = suffix_hoop[d + 1].clone();
            h[problem.hoop[d]] += problem.mult[d] as usize;
            suffix_hoop[d] = h;
        }
        Self {
            problem,
            threshold,
            suffix,
            suffix_hoop,
            incumbent: AtomicU64::new(f64::INFINITY.to_bits()),
            nodes: AtomicU64::new(0),
            max_nodes,
            exhausted: AtomicBool::new(false),
        }
    }

    fn bound(&self) -> f64 {
        f64::from_bits(self.incumbent.load(AtomicOrdering::Relaxed))
    }

    fn offer(&self, lambda_max: f64) {
        // non-negative floats order like their bit patterns
        self.incumbent
            .fetch_min(lambda_max.max(0.0).to_bits(), AtomicOrdering::Relaxed);
    }

    /// Most columns any completion of `node` can still add.
    fn remaining_capacity(&self, node: &Node) -> usize {
        self.suffix_hoop[node.depth]
            .iter()
            .enumerate()
            .map(|(h, &avail)| avail.min(self.problem.caps[h].saturating_sub(node.used[h])))
            .sum()
    }

    /// Cheap checks plus the two eigenvalue bounds. `false` = prune.
    fn viable(&self, node: &Node) -> bool {
        let need = self.problem.q_prime - node.total;
        if self.remaining_capacity(node) < need {
            return false;
        }
        if node.total > 0 {
            let (_, lmax) = extremes_unchecked(node.gram.clone());
            if lmax > self.bound() + self.problem.tol {
                return false;
            }
        }
        if need > 0 {
            let (lmin, _) = extremes_unchecked(&node.gram + &self.suffix[node.depth]);
            if lmin < self.threshold - self.problem.tol {
                return false;
            }
        }
        true
    }

    fn count_node(&self) -> bool {
        let n = self.nodes.fetch_add(1, AtomicOrdering::Relaxed) + 1;
        if n > self.max_nodes {
            self.exhausted.store(true, AtomicOrdering::Relaxed);
            return false;
        }
        true
    }

    fn children(&self, node: &Node) -> Vec<Node> {
        let d = node.depth;
        let need = self.problem.q_prime - node.total;
        let h = self.problem.hoop[d];
        let room = self.problem.caps[h].saturating_sub(node.used[h]);
        let max_c = (self.problem.mult[d] as usize).min(need).min(room);
        (0..=max_c)
            .rev()
            .map(|c| {
                let mut child = node.clone();
                child.depth += 1;
                if c > 0 {
                    child.counts[d] = c as u32;
                    self.problem.add_column(&mut child.gram, d, c as f64);
                    child.used[h] += c;
                    child.total += c;
                }
                child
            })
            .collect()
    }

    fn leaf(&self, node: &Node) -> Option<Solution> {
        let (lmin, lmax) = extremes_unchecked(node.gram.clone());
        if lmin >= self.threshold && lmax <= self.bound() + self.problem.tol {
            self.offer(lmax);
            Some(Solution {
                counts: node.counts.clone(),
                lambda_min: lmin,
                lambda_max: lmax,
            })
        } else {
            None
        }
    }

    fn better(&self, a: Option<Solution>, b: Option<Solution>) -> Option<Solution> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => match self.problem.compare(&a, &b) {
                Ordering::Greater => Some(b),
                _ => Some(a),
            },
        }
    }

    fn search(&self, node: Node) -> Option<Solution> {
        if self.exhausted.load(AtomicOrdering::Relaxed) || !self.count_node() {
            return None;
        }
        if node.total == self.problem.q_prime {
            return self.leaf(&node);
        }
        if node.depth == self.problem.group_count() || !self.viable(&node) {
            return None;
        }
        let mut best = None;
        for child in self.children(&node) {
            let found = self.search(child);
            best = self.better(best, found);
        }
        best
    }

    fn run(&self) -> Result<Option<Solution>> {
        let p = self.problem.p();
        let root = Node {
            depth: 0,
            counts: vec![0; self.problem.group_count()],
            gram: CMatrix::zeros(p, p),
            used: vec![0; self.problem.caps.len()],
            total: 0,
        };
        // breadth-first split into independent subtrees
        let mut frontier = vec![root];
        let mut finished: Vec<Node> = Vec::new();
        while frontier.len() < SPLIT_TARGET {
            let mut next = Vec::new();
            let mut expanded = false;
            for node in frontier {
                if node.total == self.problem.q_prime || node.depth == self.problem.group_count() {
                    finished.push(node);
                } else if self.count_node() && self.viable(&node) {
                    next.extend(self.children(&node));
                    expanded = true;
                }
            }
            frontier = next;
            if !expanded {
                break;
            }
        }
        frontier.extend(finished);
        let results: Vec<Option<Solution>> = frontier.into_par_iter().map(|n| self.search(n)).collect();
        if self.exhausted.load(AtomicOrdering::Relaxed) {
            return Err(Error::NodeLimit(self.max_nodes));
        }
        Ok(results.into_iter().fold(None, |acc, r| self.better(acc, r)))
    }
}

impl InnerSolver for ExactSolver {
    fn eta_upper_bound(&self) -> f64 {
        self.problem.upper_bound
    }

    fn solve(&mut self, eta: f64) -> Result<InnerOutcome> {
        self.calls += 1;
        let threshold = self.problem.threshold(eta);
        let shared = Shared::new(&self.problem, threshold, self.cfg.max_nodes);

        let mut seed = None;
        if self.problem.group_count() > SEED_THRESHOLD {
            let mut cfg = self.cfg;
            cfg.seed = self.cfg.seed.wrapping_add(self.calls);
            let mut ls = LocalSearchSolver::new(self.problem.clone(), cfg);
            if let Some(s) = ls.solve_solution(eta) {
                shared.offer(s.lambda_max);
                seed = Some(s);
            }
        }

        let found = shared.run()?;
        Ok(match shared.better(seed, found) {
            Some(s) => InnerOutcome::Feasible(self.problem.candidate(&s)),
            None => InnerOutcome::Infeasible,
        })
    }
}
