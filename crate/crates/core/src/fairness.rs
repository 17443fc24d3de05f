//! Per-consumer fairness factors.
//!
//! A consumer that lost the previous round may receive a positive *reward*
//! factor that grows with its losing streak; a consumer that won may receive a
//! negative *penalty* factor. Whether the factor is applied is decided by a
//! uniform draw against a streak-dependent probability. Exactly one draw is
//! taken per participant, in ascending consumer-id order, whatever the branch,
//! so traces are reproducible from the seed alone.

use std::collections::BTreeMap;

use crate::engine::Repository;
use crate::error::{Error, Result};
use crate::model::{ConsumerId, FairnessParams, ParticipantRecord, RoundOutcome};

const EVAL_MIN: f64 = 0.1;
const EVAL_MAX: f64 = 10.0;

/// Source of uniform draws on `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

impl<R: rand::Rng> UniformSource for R {
    fn next_uniform(&mut self) -> f64 {
        self.gen::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Reward,
    Penalty,
    None,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FairnessOutcome {
    pub factors: BTreeMap<ConsumerId, f64>,
    pub applied_branch: BTreeMap<ConsumerId, Branch>,
}

impl FairnessOutcome {
    /// Factor for `id`; consumers without an entry get 0.
    pub fn factor(&self, id: ConsumerId) -> f64 {
        self.factors.get(&id).copied().unwrap_or(0.0)
    }

    pub fn branch(&self, id: ConsumerId) -> Branch {
        self.applied_branch.get(&id).copied().unwrap_or(Branch::None)
    }
}

/// Bid quality score: mean ratio of the consumer's latest offered unit prices
/// to the market mean price of each type, clamped to `[0.1, 10]`.
pub fn eval_fun(record: &ParticipantRecord, market_mean_prices: &[f64]) -> Result<f64> {
    if let Some(bad) = market_mean_prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidValue(format!("market mean price {bad} is not positive")));
    }
    let Some(latest) = record.price_history().last() else {
        return Ok(1.0);
    };
    if latest.len() != market_mean_prices.len() || latest.is_empty() {
        return Err(Error::InvalidValue(format!(
            "price history has {} types but {} market means were given",
            latest.len(),
            market_mean_prices.len()
        )));
    }
    let mean_ratio =
        latest.iter().zip(market_mean_prices).map(|(p, mean)| p.to_f64() / mean).sum::<f64>() / latest.len() as f64;
    Ok(mean_ratio.clamp(EVAL_MIN, EVAL_MAX))
}

/// Reward for a consumer that lost: `(cl + 1) * (alpha1 * losses + alpha2 * eval)`.
pub fn fun_w(losses: u32, eval: f64, cl: u32, params: &FairnessParams) -> f64 {
    debug_assert!(eval >= 0.0);
    (cl as f64 + 1.0) * (params.alpha1 * losses as f64 + params.alpha2 * eval)
}

/// Penalty for a consumer that won: `-(1 / (cl + 1)) * (beta1 * wins + beta2 / eval)`.
pub fn fun_l(wins: u32, eval: f64, cl: u32, params: &FairnessParams) -> Result<f64> {
    if !(eval.is_finite() && eval > 0.0) {
        return Err(Error::InvalidValue(format!("eval must be positive, got {eval}")));
    }
    Ok(-(params.beta1 * wins as f64 + params.beta2 / eval) / (cl as f64 + 1.0))
}

/// Probability that a loser's reward applies; reaches 1 at the drop threshold.
pub fn prob_w(cl: u32, params: &FairnessParams) -> f64 {
    ((cl as f64 + 1.0) / (params.max_losses as f64 + 1.0)).min(1.0)
}

/// Probability that a winner's penalty applies.
pub fn prob_l(cl: u32, _params: &FairnessParams) -> f64 {
    1.0 / (cl as f64 + 1.0)
}

/// Runs the fairness-factor procedure over this round's participants.
///
/// `previous_round_outcomes` defaults to [`RoundOutcome::Absent`] for ids it
/// does not mention. Participants are processed in ascending id order
/// regardless of the order given.
pub fn compute_fairness_factors<U: UniformSource + ?Sized>(
    repository: &Repository,
    participants: &[ConsumerId],
    previous_round_outcomes: &BTreeMap<ConsumerId, RoundOutcome>,
    market_mean_prices: &[f64],
    params: &FairnessParams,
    rng: &mut U,
) -> Result<FairnessOutcome> {
    let mut ids = participants.to_vec();
    ids.sort_unstable();
    ids.dedup();

    let mut outcome = FairnessOutcome::default();
    for id in ids {
        let record = repository.record(id).ok_or(Error::MissingRecord(id))?;
        let draw = rng.next_uniform();
        let cl = record.consecutive_losses();
        let previous = previous_round_outcomes.get(&id).copied().unwrap_or_default();
        let (branch, factor) = match previous {
            RoundOutcome::Lost if draw < prob_w(cl, params) => {
                let eval = eval_fun(record, market_mean_prices)?;
                (Branch::Reward, fun_w(record.losses(), eval, cl, params))
            }
            RoundOutcome::Won if draw < prob_l(cl, params) => {
                let eval = eval_fun(record, market_mean_prices)?;
                (Branch::Penalty, fun_l(record.wins(), eval, cl, params)?)
            }
            _ => (Branch::None, 0.0),
        };
        outcome.factors.insert(id, factor);
        outcome.applied_branch.insert(id, branch);
    }
    Ok(outcome)
}
