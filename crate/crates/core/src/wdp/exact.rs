//! Depth-first branch-and-bound over the winner vector.
//!
//! Consumers are branched in row order, include-branch first. The bound of a
//! node is the score of its included prefix plus each undecided consumer's
//! optimistic contribution `max(0, v + ff − cheapest cost ignoring supply)`;
//! adding a consumer to any set raises min cost by at least that cheapest
//! cost, so the bound never underestimates. Among equal-scoring winner
//! vectors the lexicographically smallest one (x_0 first, 0 < 1) is kept.

use std::cmp::Ordering;
use std::time::Instant;

use crate::error::Result;
use crate::model::Money;

use super::heuristic::heuristic_set;
use super::{Optimality, Prepared, SolverLimits, WdpInstance, WdpSolution};

/// Solves to proven optimality unless a limit is hit first, in which case the
/// incumbent is returned as `heuristic` with a gap bound taken from the
/// unexplored nodes.
pub fn solve_exact(instance: &WdpInstance, limits: &SolverLimits) -> Result<WdpSolution> {
    limits.validate()?;
    let prepared = Prepared::new(instance);
    let n = prepared.num_consumers();

    let optimistic: Vec<f64> = (0..n).map(|i| prepared.optimistic(i)).collect();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + optimistic[i];
    }

    let (seed_set, seed_cost) = heuristic_set(&prepared);
    let seed_score = prepared.score(&seed_set, seed_cost);
    let mut search = Search {
        p: &prepared,
        optimistic,
        suffix,
        current: vec![false; n],
        sum_value: 0.0,
        cost: 0,
        best_score: seed_score,
        best: seed_set,
        nodes: 0,
        node_limit: limits.node_limit,
        deadline: Instant::now() + limits.time_limit(),
        aborted: false,
        open_bound: f64::NEG_INFINITY,
    };
    search.dfs(0);

    let (optimality, gap) = if search.aborted {
        let gap = (search.open_bound - search.best_score).max(0.0) / Money::TICKS_PER_UNIT as f64;
        (Optimality::Heuristic, gap)
    } else {
        (Optimality::ProvedOptimal, 0.0)
    };
    WdpSolution::from_winners(instance, &search.best, optimality, gap)
}

/// Lexicographic order of two winner vectors with `false < true`.
pub(crate) fn lex_cmp(a: &[bool], b: &[bool]) -> Ordering {
    a.iter().cmp(b.iter())
}

struct Search<'a, 'b> {
    p: &'b Prepared<'a>,
    optimistic: Vec<f64>,
    suffix: Vec<f64>,
    current: Vec<bool>,
    sum_value: f64,
    cost: i64,
    best: Vec<bool>,
    best_score: f64,
    nodes: u64,
    node_limit: u64,
    deadline: Instant,
    aborted: bool,
    open_bound: f64,
}

impl Search<'_, '_> {
    fn out_of_budget(&mut self) -> bool {
        if !self.aborted {
            self.nodes += 1;
            if self.nodes > self.node_limit || (self.nodes.is_multiple_of(1024) && Instant::now() >= self.deadline) {
                self.aborted = true;
            }
        }
        self.aborted
    }

    /// `true` if no completion of the current prefix (decided up to `depth`)
    /// can beat the incumbent, counting ties that lose the lexicographic tie-break.
    fn can_prune(&self, bound: f64, depth: usize) -> bool {
        let slack = 1e-9 * (1.0 + bound.abs());
        if bound + slack < self.best_score {
            return true;
        }
        // Every completion is lexicographically >= prefix followed by zeros.
        let prefix_cmp = lex_cmp(&self.current[..depth], &self.best[..depth]);
        let smallest_completion_not_better = match prefix_cmp {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.best[depth..].iter().all(|&b| !b),
        };
        bound + slack <= self.best_score && smallest_completion_not_better
    }

    fn dfs(&mut self, depth: usize) {
        let bound = self.sum_value - self.cost as f64 + self.suffix[depth];
        if self.out_of_budget() {
            self.open_bound = self.open_bound.max(bound);
            return;
        }
        if depth == self.current.len() {
            let score = self.sum_value - self.cost as f64;
            let better = score > self.best_score
                || (score == self.best_score && lex_cmp(&self.current, &self.best) == Ordering::Less);
            if better {
                self.best.clone_from(&self.current);
                self.best_score = score;
            }
            return;
        }
        if self.can_prune(bound, depth) {
            return;
        }

        // A consumer whose optimistic contribution is zero can never raise the
        // score, and including it makes the vector lexicographically larger.
        if self.optimistic[depth] > 0.0 {
            self.current[depth] = true;
            if let Some(cost) = self.p.cost(&self.current) {
                let saved = (self.sum_value, self.cost);
                self.sum_value += self.p.value[depth];
                self.cost = cost;
                self.dfs(depth + 1);
                (self.sum_value, self.cost) = saved;
            }
            self.current[depth] = false;
        }
        self.dfs(depth + 1);
    }
}
