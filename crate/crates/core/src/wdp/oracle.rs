use std::cmp::Ordering;

use crate::error::{Error, Result};

use super::exact::lex_cmp;
use super::{Optimality, Prepared, WdpInstance, WdpSolution};

pub const ORACLE_MAX_CONSUMERS: usize = 12;

/// Exhaustive search over all `2^N` winner sets. Test oracle only.
pub fn solve_oracle(instance: &WdpInstance) -> Result<WdpSolution> {
    let n = instance.num_consumers();
    if n > ORACLE_MAX_CONSUMERS {
        return Err(Error::OracleTooLarge(format!("{n} consumers, at most {ORACLE_MAX_CONSUMERS} can be enumerated")));
    }
    let prepared = Prepared::new(instance);
    let mut best = vec![false; n];
    let mut best_score = 0.0;
    let mut set = vec![false; n];
    for mask in 1u32..(1u32 << n) {
        for (i, slot) in set.iter_mut().enumerate() {
            *slot = mask & (1 << i) != 0;
        }
        let Some(cost) = prepared.cost(&set) else { continue };
        let score = prepared.score(&set, cost);
        let better = match score.partial_cmp(&best_score) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Equal) => lex_cmp(&set, &best) == Ordering::Less,
            _ => false,
        };
        if better {
            best.clone_from(&set);
            best_score = score;
        }
    }
    WdpSolution::from_winners(instance, &best, Optimality::Oracle, 0.0)
}
