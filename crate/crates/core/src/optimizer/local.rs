//! Multi-restart swap descent for the inner problem.
//!
//! The objective is lexicographic: first the violation `max(0, τ − λ_min)`,
//! then `λ_max`, then a larger `λ_min`. A move transfers one selected column
//! to an unselected one (respecting hoop caps). All moves are screened with
//! first-order eigenvalue perturbation,
//!
//! ```text
//! λ_k' ≈ λ_k + |v_kᴴ a_add|² − |v_kᴴ a_drop|²
//! ```
//!
//! and only the most promising ones are evaluated exactly. Restarts are
//! independent and run in parallel, each with its own seeded generator. On a
//! cold call they start from a greedy construction and from random masks.
//! Once a previous solution exists (the previous sweep step) one restart
//! continues from it and the others from randomly perturbed copies of it,
//! which keeps long sweeps affordable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::problem::{abs2, GroupProblem, Solution};
use super::{InnerOutcome, InnerSolver, SolverConfig};
use crate::eigen::{eigen_unchecked, extremes_unchecked, CMatrix};
use crate::error::Result;

/// Candidates evaluated exactly per round.
const CHUNK: usize = 24;
/// Screened candidates kept per move.
const SHORTLIST: usize = 192;
/// Moves between full gram rebuilds (limits drift from incremental updates).
const REBUILD_EVERY: usize = 64;

pub struct LocalSearchSolver {
    problem: GroupProblem,
    cfg: SolverConfig,
    calls: u64,
    warm: Option<Vec<u32>>,
}

#[derive(Clone)]
struct State {
    counts: Vec<u32>,
    used: Vec<usize>,
    gram: CMatrix,
    lambda_min: f64,
    lambda_max: f64,
}

/// Screening key: (violation, λ_max, −λ_min).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64, f64, f64);

impl Key {
    fn cmp_total(&self, other: &Key) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then(self.1.total_cmp(&other.1))
            .then(self.2.total_cmp(&other.2))
    }
}

#[derive(PartialEq)]
struct Scored {
    key: Key,
    drop: usize,
    add: usize,
}

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp_total(&other.key)
            .then(self.drop.cmp(&other.drop))
            .then(self.add.cmp(&other.add))
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl LocalSearchSolver {
    pub fn new(problem: GroupProblem, cfg: SolverConfig) -> Self {
        Self {
            problem,
            cfg,
            calls: 0,
            warm: None,
        }
    }

    fn key(&self, tau: f64, lmin: f64, lmax: f64) -> Key {
        Key((tau - lmin).max(0.0), lmax, -lmin)
    }

    /// Strict improvement of `new` over `cur`, ignoring differences within tolerance.
    fn improves(&self, new: Key, cur: Key) -> bool {
        let t = self.problem.tol;
        if new.0 < cur.0 - t * 1e-3 {
            return true;
        }
        if new.0 > cur.0 + t * 1e-3 || (cur.0 > 0.0 && new.0 >= cur.0) {
            return false;
        }
        if new.1 < cur.1 - t {
            return true;
        }
        if new.1 > cur.1 + t {
            return false;
        }
        new.2 < cur.2 - t
    }

    fn state(&self, counts: Vec<u32>) -> State {
        let gram = self.problem.gram(&counts);
        let (lmin, lmax) = extremes_unchecked(gram.clone());
        State {
            used: self.problem.hoop_usage(&counts),
            counts,
            gram,
            lambda_min: lmin,
            lambda_max: lmax,
        }
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let p = &self.problem;
        let mut slots: Vec<usize> = (0..p.group_count())
            .flat_map(|g| std::iter::repeat_n(g, p.mult[g] as usize))
            .collect();
        slots.shuffle(rng);
        let mut counts = vec![0u32; p.group_count()];
        let mut used = vec![0usize; p.caps.len()];
        let mut total = 0;
        for g in slots {
            if total == p.q_prime {
                break;
            }
            let h = p.hoop[g];
            if used[h] < p.caps[h] {
                counts[g] += 1;
                used[h] += 1;
                total += 1;
            }
        }
        counts
    }

    /// Greedy leverage construction: repeatedly add the column with the largest
    /// `aᴴ (G + δI)⁻¹ a`, i.e. the direction least covered so far.
    fn greedy_start(&self) -> Vec<u32> {
        let p = &self.problem;
        let dim = p.p();
        let mut counts = vec![0u32; p.group_count()];
        let mut used = vec![0usize; p.caps.len()];
        let mut gram = CMatrix::zeros(dim, dim);
        let ridge = 1e-3 * p.upper_bound.max(1e-12);
        for _ in 0..p.q_prime {
            let mut reg = gram.clone();
            for i in 0..dim {
                reg[(i, i)] += Complex64::new(ridge, 0.0);
            }
            let chol = match reg.cholesky() {
                Some(c) => c,
                None => break,
            };
            let sol = chol.solve(&p.a);
            let mut best: Option<(f64, usize)> = None;
            for g in 0..p.group_count() {
                let h = p.hoop[g];
                if counts[g] >= p.mult[g] || used[h] >= p.caps[h] {
                    continue;
                }
                let lev: f64 = p.a.column(g).dotc(&sol.column(g)).re;
                if best.is_none_or(|(b, _)| lev > b) {
                    best = Some((lev, g));
                }
            }
            let Some((_, g)) = best else { break };
            counts[g] += 1;
            used[p.hoop[g]] += 1;
            p.add_column(&mut gram, g, 1.0);
        }
        counts
    }

    /// `kicks` random feasible transfers applied to `counts`.
    fn perturb(&self, counts: &[u32], kicks: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let p = &self.problem;
        let mut counts = counts.to_vec();
        let mut used = p.hoop_usage(&counts);
        let groups: Vec<usize> = (0..p.group_count()).collect();
        for _ in 0..kicks {
            let drops: Vec<usize> = groups.iter().copied().filter(|&g| counts[g] > 0).collect();
            let Some(&r) = drops.choose(rng) else { break };
            let adds: Vec<usize> = groups
                .iter()
                .copied()
                .filter(|&s| {
                    s != r && counts[s] < p.mult[s] && (p.hoop[s] == p.hoop[r] || used[p.hoop[s]] < p.caps[p.hoop[s]])
                })
                .collect();
            let Some(&s) = adds.choose(rng) else { continue };
            counts[r] -= 1;
            counts[s] += 1;
            used[p.hoop[r]] -= 1;
            used[p.hoop[s]] += 1;
        }
        counts
    }

    fn valid_start(&self, counts: &[u32]) -> bool {
        let p = &self.problem;
        counts.len() == p.group_count()
            && counts.iter().zip(&p.mult).all(|(c, m)| c <= m)
            && counts.iter().map(|&c| c as usize).sum::<usize>() == p.q_prime
            && p.hoop_usage(counts).iter().zip(&p.caps).all(|(u, c)| u <= c)
    }

    /// Shortlist of moves ranked by the first-order estimate.
    fn screen(&self, st: &State, tau: f64) -> Vec<Scored> {
        let p = &self.problem;
        let dim = p.p();
        let eig = eigen_unchecked(st.gram.clone());
        let lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let proj: DMatrix<Complex64> = eig.eigenvectors.adjoint() * &p.a;
        // w[g*dim + k] = |v_kᴴ a_g|²
        let mut w = vec![0.0; p.group_count() * dim];
        for g in 0..p.group_count() {
            for k in 0..dim {
                w[g * dim + k] = abs2(proj[(k, g)]);
            }
        }
        let drops: Vec<usize> = (0..p.group_count()).filter(|&g| st.counts[g] > 0).collect();
        let adds: Vec<usize> = (0..p.group_count()).filter(|&g| st.counts[g] < p.mult[g]).collect();

        let mut heap: BinaryHeap<Scored> = BinaryHeap::with_capacity(SHORTLIST + 1);
        let mut base = vec![0.0; dim];
        for &r in &drops {
            let hr = p.hoop[r];
            for k in 0..dim {
                base[k] = lambda[k] - w[r * dim + k];
            }
            for &s in &adds {
                if s == r {
                    continue;
                }
                let hs = p.hoop[s];
                if hs != hr && st.used[hs] >= p.caps[hs] {
                    continue;
                }
                let ws = &w[s * dim..(s + 1) * dim];
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for k in 0..dim {
                    let v = base[k] + ws[k];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let key = self.key(tau, lo, hi);
                if heap.len() < SHORTLIST {
                    heap.push(Scored { key, drop: r, add: s });
                } else if key.cmp_total(&heap.peek().unwrap().key) == Ordering::Less {
                    heap.pop();
                    heap.push(Scored { key, drop: r, add: s });
                }
            }
        }
        heap.into_sorted_vec()
    }

    fn apply(&self, st: &mut State, drop: usize, add: usize) {
        let p = &self.problem;
        st.counts[drop] -= 1;
        st.counts[add] += 1;
        st.used[p.hoop[drop]] -= 1;
        st.used[p.hoop[add]] += 1;
        p.add_column(&mut st.gram, add, 1.0);
        p.add_column(&mut st.gram, drop, -1.0);
    }

    fn descend(&self, tau: f64, start: Vec<u32>) -> State {
        let mut st = self.state(start);
        let max_moves = 20 * self.problem.q_prime + 200;
        for moves in 0..max_moves {
            if moves > 0 && moves % REBUILD_EVERY == 0 {
                st = self.state(st.counts.clone());
            }
            let cur = self.key(tau, st.lambda_min, st.lambda_max);
            let shortlist = self.screen(&st, tau);
            let mut chosen: Option<(Key, usize, usize, f64, f64)> = None;
            for chunk in shortlist.chunks(CHUNK) {
                for m in chunk {
                    let mut trial = st.gram.clone();
                    self.problem.add_column(&mut trial, m.add, 1.0);
                    self.problem.add_column(&mut trial, m.drop, -1.0);
                    let (lo, hi) = extremes_unchecked(trial);
                    let key = self.key(tau, lo, hi);
                    if self.improves(key, cur) && chosen.is_none_or(|(best, ..)| key.cmp_total(&best) == Ordering::Less)
                    {
                        chosen = Some((key, m.drop, m.add, lo, hi));
                    }
                }
                if chosen.is_some() {
                    break;
                }
            }
            match chosen {
                Some((_, drop, add, lo, hi)) => {
                    self.apply(&mut st, drop, add);
                    st.lambda_min = lo;
                    st.lambda_max = hi;
                }
                None => break,
            }
        }
        // report eigenvalues of a freshly assembled gram
        self.state(st.counts)
    }

    pub(crate) fn solve_solution(&mut self, eta: f64) -> Option<Solution> {
        self.calls += 1;
        let tau = self.problem.threshold(eta);
        let restarts = self.cfg.restarts.max(1);
        let call_seed = mix(self.cfg.seed ^ mix(self.calls));
        let warm = self.warm.clone().filter(|w| self.valid_start(w));
        let kicks = (self.problem.q_prime / 16).max(2);

        let results: Vec<State> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(call_seed ^ r as u64));
                let start = match (r, &warm) {
                    (0, Some(w)) => w.clone(),
                    (_, Some(w)) => self.perturb(w, kicks, &mut rng),
                    (0, None) => self.greedy_start(),
                    (_, None) => self.random_start(&mut rng),
                };
                self.descend(tau, start)
            })
            .collect();

        let best = results
            .into_iter()
            .filter(|s| s.lambda_min >= tau)
            .map(|s| Solution {
                counts: s.counts,
                lambda_min: s.lambda_min,
                lambda_max: s.lambda_max,
            })
            .min_by(|a, b| self.problem.compare(a, b));
        if let Some(b) = &best {
            self.warm = Some(b.counts.clone());
        }
        best
    }
}

impl InnerSolver for LocalSearchSolver {
    fn eta_upper_bound(&self) -> f64 {
        self.problem.upper_bound
    }

    fn solve(&mut self, eta: f64) -> Result<InnerOutcome> {
        Ok(match self.solve_solution(eta) {
            Some(s) => InnerOutcome::Feasible(self.problem.candidate(&s)),
            None => InnerOutcome::Infeasible,
        })
    }
}
