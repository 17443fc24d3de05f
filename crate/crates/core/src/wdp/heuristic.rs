use crate::error::Result;
use crate::model::Money;

use super::{Optimality, Prepared, WdpInstance, WdpSolution};

/// Greedy admission by optimistic contribution followed by one pass of
/// drop-and-readd local search.
pub fn solve_heuristic(instance: &WdpInstance) -> Result<WdpSolution> {
    let prepared = Prepared::new(instance);
    let (set, cost) = heuristic_set(&prepared);
    let score = prepared.score(&set, cost);
    let root_bound: f64 = (0..prepared.num_consumers()).map(|n| prepared.optimistic(n)).sum();
    let gap = (root_bound - score).max(0.0) / Money::TICKS_PER_UNIT as f64;
    WdpSolution::from_winners(instance, &set, Optimality::Heuristic, gap)
}

/// Consumers that can be served alone, best optimistic contribution first.
fn ranking(p: &Prepared) -> Vec<usize> {
    let mut ranked: Vec<usize> = (0..p.num_consumers()).filter(|&n| p.lower_bound[n].is_some()).collect();
    let key = |n: usize| p.value[n] - p.lower_bound[n].unwrap_or(0) as f64;
    ranked.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    ranked
}

/// Adds candidates in order whenever the set stays feasible and the marginal
/// objective gain is strictly positive. Returns the new cost.
fn admit(p: &Prepared, set: &mut [bool], mut cost: i64, candidates: &[usize], skip: Option<usize>) -> i64 {
    for &n in candidates {
        if set[n] || Some(n) == skip {
            continue;
        }
        set[n] = true;
        match p.cost(set) {
            Some(c) if p.value[n] - (c - cost) as f64 > 0.0 => cost = c,
            _ => set[n] = false,
        }
    }
    cost
}

pub(crate) fn heuristic_set(p: &Prepared) -> (Vec<bool>, i64) {
    let ranked = ranking(p);
    let mut best = vec![false; p.num_consumers()];
    let mut best_cost = admit(p, &mut best, 0, &ranked, None);
    let mut best_score = p.score(&best, best_cost);

    let admitted: Vec<usize> = ranked.iter().copied().filter(|&n| best[n]).collect();
    for d in admitted {
        if !best[d] {
            continue;
        }
        let mut trial = best.clone();
        trial[d] = false;
        let base = p.cost(&trial).expect("subsets of a feasible set are feasible");
        let cost = admit(p, &mut trial, base, &ranked, Some(d));
        let score = p.score(&trial, cost);
        if score > best_score {
            best = trial;
            best_cost = cost;
            best_score = score;
        }
    }
    (best, best_cost)
}
