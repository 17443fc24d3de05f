//! Winner determination.
//!
//! The integer program maximises total utility plus total satisfaction:
//!
//! ```text
//! max  Σ_n x_n (v_n + ff_n) − Σ_{n,l,m} y_nlm · P_ml
//! s.t. Σ_m y_nlm = x_n · Q'_nl          (demand exactness)
//!      Σ_n y_nlm ≤ Q_ml                 (supply)
//!      y_nlm > 0  ⇒  P'_nl ≥ P_ml       (price compatibility)
//!      x_n ∈ {0,1}, y_nlm ∈ {0..Q_ml}
//! ```
//!
//! Trade prices cancel out of total utility, so for a fixed winner set the
//! transfers only have to minimise provider cost. Every solver here searches
//! over winner sets and delegates transfers to [`min_cost_allocation`].

mod corpus;
mod dump;
mod exact;
mod heuristic;
mod oracle;
mod transport;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, ConsumerId, ExtendedConsumerBid, Money, ProviderBid};

pub use corpus::{random_micro_instance, validate_corpus, CorpusFailure, CorpusReport, MicroInstanceSpec};
pub use dump::{dump_instance, parse_instance};
pub use exact::solve_exact;
pub use heuristic::solve_heuristic;
pub use oracle::{solve_oracle, ORACLE_MAX_CONSUMERS};
pub use transport::{min_cost_allocation, TransportPlan};

pub(crate) use transport::Prepared;

/// `true` when a consumer offering `consumer_price` may buy from a provider asking `provider_price`.
pub fn compatible(consumer_price: Money, provider_price: Money) -> bool {
    consumer_price >= provider_price
}

/// One winner-determination problem.
///
/// Consumers and providers are stored in strictly ascending id order; row `n`
/// of any [`Allocation`] refers to `consumer_bids()[n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WdpInstance {
    num_types: usize,
    consumer_bids: Vec<ExtendedConsumerBid>,
    provider_bids: Vec<ProviderBid>,
    budgets: Vec<Money>,
}

impl WdpInstance {
    pub fn new(
        num_types: usize,
        consumer_bids: Vec<ExtendedConsumerBid>,
        provider_bids: Vec<ProviderBid>,
    ) -> Result<Self> {
        if num_types == 0 {
            return Err(Error::InvalidValue("instance needs at least one resource type".into()));
        }
        for c in &consumer_bids {
            if c.bid().num_types() != num_types {
                return Err(Error::InvalidBid(format!(
                    "consumer {} bids on {} types, instance has {num_types}",
                    c.bid().consumer_id(),
                    c.bid().num_types()
                )));
            }
        }
        for p in &provider_bids {
            if p.num_types() != num_types {
                return Err(Error::InvalidBid(format!(
                    "provider {} offers {} types, instance has {num_types}",
                    p.provider_id(),
                    p.num_types()
                )));
            }
        }
        if consumer_bids.windows(2).any(|w| w[0].bid().consumer_id() >= w[1].bid().consumer_id()) {
            return Err(Error::InvalidBid("consumer ids must be unique and ascending".into()));
        }
        if provider_bids.windows(2).any(|w| w[0].provider_id() >= w[1].provider_id()) {
            return Err(Error::InvalidBid("provider ids must be unique and ascending".into()));
        }
        let budgets = consumer_bids.iter().map(|c| c.bid().budget()).collect();
        Ok(WdpInstance { num_types, consumer_bids, provider_bids, budgets })
    }

    pub fn num_consumers(&self) -> usize {
        self.consumer_bids.len()
    }

    pub fn num_providers(&self) -> usize {
        self.provider_bids.len()
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn consumer_bids(&self) -> &[ExtendedConsumerBid] {
        &self.consumer_bids
    }

    pub fn provider_bids(&self) -> &[ProviderBid] {
        &self.provider_bids
    }

    /// `v_n` for every consumer, in row order.
    pub fn budgets(&self) -> &[Money] {
        &self.budgets
    }

    pub fn consumer_ids(&self) -> impl Iterator<Item = ConsumerId> + '_ {
        self.consumer_bids.iter().map(|c| c.bid().consumer_id())
    }

    pub(crate) fn consumer_price(&self, n: usize, l: usize) -> Money {
        self.consumer_bids[n].bid().unit_prices()[l]
    }

    pub(crate) fn demand(&self, n: usize, l: usize) -> u32 {
        self.consumer_bids[n].bid().quantities()[l]
    }

    pub(crate) fn provider_price(&self, m: usize, l: usize) -> Money {
        self.provider_bids[m].unit_prices()[l]
    }

    pub(crate) fn supply(&self, m: usize, l: usize) -> u32 {
        self.provider_bids[m].quantities()[l]
    }

    pub fn empty_allocation(&self) -> Allocation {
        Allocation::empty(self.num_consumers(), self.num_types, self.num_providers())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimality {
    ProvedOptimal,
    Heuristic,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    Exact,
    Heuristic,
    Oracle,
}

impl std::str::FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolverMode::Exact),
            "heuristic" => Ok(SolverMode::Heuristic),
            "oracle" => Ok(SolverMode::Oracle),
            other => Err(Error::InvalidConfig(format!("unknown solver mode {other:?}"))),
        }
    }
}

/// Search budget for the exact solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverLimits {
    pub time_limit_ms: u64,
    pub node_limit: u64,
}

impl Default for SolverLimits {
    fn default() -> Self {
        SolverLimits { time_limit_ms: 60_000, node_limit: 5_000_000 }
    }
}

impl SolverLimits {
    pub fn validate(&self) -> Result<()> {
        if self.time_limit_ms == 0 || self.node_limit == 0 {
            return Err(Error::InvalidLimits(format!(
                "time limit ({} ms) and node limit ({}) must both be positive",
                self.time_limit_ms, self.node_limit
            )));
        }
        Ok(())
    }

    pub fn time_limit(&self) -> Duration {
        Duration::from_millis(self.time_limit_ms)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WdpSolution {
    pub allocation: Allocation,
    /// `total_utility + total_satisfaction`, in currency units.
    pub objective: f64,
    pub total_utility: Money,
    pub total_satisfaction: f64,
    pub optimality: Optimality,
    /// Upper bound on how far `objective` may be below the optimum.
    pub gap_bound: f64,
}

impl WdpSolution {
    pub(crate) fn from_winners(
        instance: &WdpInstance,
        winners: &[bool],
        optimality: Optimality,
        gap_bound: f64,
    ) -> Result<Self> {
        let plan = min_cost_allocation(instance, winners)
            .ok_or_else(|| Error::InvalidAllocation(vec!["solver produced an infeasible winner set".into()]))?;
        let value = objective_value(instance, &plan.allocation)?;
        Ok(WdpSolution {
            allocation: plan.allocation,
            objective: value.objective,
            total_utility: value.total_utility,
            total_satisfaction: value.total_satisfaction,
            optimality,
            gap_bound,
        })
    }
}

/// Solves with the requested mode.
pub fn solve(instance: &WdpInstance, mode: SolverMode, limits: &SolverLimits) -> Result<WdpSolution> {
    match mode {
        SolverMode::Exact => solve_exact(instance, limits),
        SolverMode::Heuristic => solve_heuristic(instance),
        SolverMode::Oracle => solve_oracle(instance),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub objective: f64,
    pub total_utility: Money,
    pub total_satisfaction: f64,
}

/// Evaluates the objective of a feasible allocation.
pub fn objective_value(instance: &WdpInstance, allocation: &Allocation) -> Result<ObjectiveValue> {
    let violations = validate_solution(instance, allocation);
    if !violations.is_empty() {
        return Err(Error::InvalidAllocation(violations.iter().map(|v| v.to_string()).collect()));
    }
    let mut total_utility = Money::ZERO;
    let mut total_satisfaction = 0.0;
    for n in 0..instance.num_consumers() {
        if allocation.is_winner(n) {
            total_utility += instance.budgets[n];
            total_satisfaction += instance.consumer_bids[n].fairness_factor();
        }
    }
    for (_, l, m, units) in allocation.trades() {
        total_utility -= instance.provider_price(m, l) * units;
    }
    Ok(ObjectiveValue { objective: total_utility.to_f64() + total_satisfaction, total_utility, total_satisfaction })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Shape,
    TransferDomain,
    LinkLower,
    LinkUpper,
    Supply,
    DemandExactness,
    PriceCompatibility,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub description: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}

/// Checks every constraint family of the program, one entry per violated instance.
///
/// The two linkage inequalities are implied by demand exactness but are
/// still reported separately.
pub fn validate_solution(instance: &WdpInstance, allocation: &Allocation) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, description: String| out.push(Violation { kind, description });
    let (n_c, n_l, n_p) = (instance.num_consumers(), instance.num_types(), instance.num_providers());
    if allocation.num_consumers() != n_c || allocation.num_types() != n_l || allocation.num_providers() != n_p {
        push(
            ConstraintKind::Shape,
            format!(
                "allocation is {}x{}x{}, instance is {n_c}x{n_l}x{n_p}",
                allocation.num_consumers(),
                allocation.num_types(),
                allocation.num_providers()
            ),
        );
        return out;
    }

    for n in 0..n_c {
        let id = instance.consumer_bids[n].bid().consumer_id();
        let x = allocation.is_winner(n) as u64;
        let received: u64 =
            (0..n_l).flat_map(|l| (0..n_p).map(move |m| (l, m))).map(|(l, m)| allocation.units(n, l, m) as u64).sum();
        let requested = instance.consumer_bids[n].bid().total_units() as u64;
        // x_n >= Σ y / Σ Q'  <=>  x_n · Σ Q' >= Σ y
        if x * requested < received {
            push(ConstraintKind::LinkLower, format!("consumer {id}: receives {received} units but x = {x}"));
        }
        if x > received {
            push(ConstraintKind::LinkUpper, format!("consumer {id}: marked winner but receives nothing"));
        }
        for l in 0..n_l {
            let got: u64 = (0..n_p).map(|m| allocation.units(n, l, m) as u64).sum();
            let want = x * instance.demand(n, l) as u64;
            if got != want {
                push(
                    ConstraintKind::DemandExactness,
                    format!("consumer {id}, type {l}: receives {got} units, must receive {want}"),
                );
            }
            for m in 0..n_p {
                let y = allocation.units(n, l, m);
                if y > instance.supply(m, l) {
                    push(
                        ConstraintKind::TransferDomain,
                        format!(
                            "y[{id},{l},{}] = {y} exceeds offered quantity {}",
                            instance.provider_bids[m].provider_id(),
                            instance.supply(m, l)
                        ),
                    );
                }
                if y > 0 && !compatible(instance.consumer_price(n, l), instance.provider_price(m, l)) {
                    push(
                        ConstraintKind::PriceCompatibility,
                        format!(
                            "consumer {id} buys type {l} at {} from provider {} asking {}",
                            instance.consumer_price(n, l),
                            instance.provider_bids[m].provider_id(),
                            instance.provider_price(m, l)
                        ),
                    );
                }
            }
        }
    }

    for l in 0..n_l {
        for m in 0..n_p {
            let sold: u64 = (0..n_c).map(|n| allocation.units(n, l, m) as u64).sum();
            if sold > instance.supply(m, l) as u64 {
                push(
                    ConstraintKind::Supply,
                    format!(
                        "provider {}, type {l}: sells {sold} units of {} offered",
                        instance.provider_bids[m].provider_id(),
                        instance.supply(m, l)
                    ),
                );
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{ConsumerBid, ProviderId};

    pub(crate) fn consumer(id: u32, prices: &[i64], qty: &[u32], ff: f64) -> ExtendedConsumerBid {
        let bid =
            ConsumerBid::new(ConsumerId(id), prices.iter().map(|&p| Money::from_units(p)).collect(), qty.to_vec())
                .unwrap();
        ExtendedConsumerBid::new(bid, ff).unwrap()
    }

    pub(crate) fn provider(id: u32, prices: &[i64], qty: &[u32]) -> ProviderBid {
        ProviderBid::new(ProviderId(id), prices.iter().map(|&p| Money::from_units(p)).collect(), qty.to_vec()).unwrap()
    }

    /// One consumer (price 10, wants 1 unit) and one provider (ask 5, 1 unit).
    pub(crate) fn single_trade(ff: f64) -> WdpInstance {
        WdpInstance::new(1, vec![consumer(0, &[10], &[1], ff)], vec![provider(0, &[5], &[1])]).unwrap()
    }

    /// A (price 10) and B (price 8, fairness +5) compete for a single unit at ask 5.
    pub(crate) fn competition(ff_b: f64) -> WdpInstance {
        WdpInstance::new(
            1,
            vec![consumer(0, &[10], &[1], 0.0), consumer(1, &[8], &[1], ff_b)],
            vec![provider(0, &[5], &[1])],
        )
        .unwrap()
    }

    #[test]
    fn compatible_examples() {
        assert!(compatible(Money::from_units(10), Money::from_units(5)));
        assert!(compatible(Money::from_units(5), Money::from_units(5)));
        assert!(!compatible(Money::from_units(4), Money::from_units(5)));
    }

    #[test]
    fn objective_value_examples() {
        let inst = single_trade(0.0);
        let empty = inst.empty_allocation();
        let v = objective_value(&inst, &empty).unwrap();
        assert_eq!((v.objective, v.total_utility, v.total_satisfaction), (0.0, Money::ZERO, 0.0));

        let mut full = inst.empty_allocation();
        full.set_winner(0, true);
        full.set_units(0, 0, 0, 1);
        let v = objective_value(&inst, &full).unwrap();
        assert_eq!((v.objective, v.total_utility, v.total_satisfaction), (5.0, Money::from_units(5), 0.0));

        let inst = single_trade(3.0);
        let v = objective_value(&inst, &full).unwrap();
        assert_eq!((v.objective, v.total_utility, v.total_satisfaction), (8.0, Money::from_units(5), 3.0));
    }

    #[test]
    fn objective_value_rejects_infeasible() {
        let inst = single_trade(0.0);
        let mut bad = inst.empty_allocation();
        bad.set_winner(0, true);
        assert!(matches!(objective_value(&inst, &bad), Err(Error::InvalidAllocation(_))));
    }

    #[test]
    fn winner_without_transfers_violates_link_and_demand() {
        let inst = single_trade(0.0);
        let mut a = inst.empty_allocation();
        a.set_winner(0, true);
        let kinds: Vec<_> = validate_solution(&inst, &a).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ConstraintKind::LinkUpper));
        assert!(kinds.contains(&ConstraintKind::DemandExactness));
    }

    #[test]
    fn oversupply_reported() {
        let inst = WdpInstance::new(
            1,
            vec![consumer(0, &[10], &[1], 0.0), consumer(1, &[10], &[1], 0.0)],
            vec![provider(0, &[5], &[1])],
        )
        .unwrap();
        let mut a = inst.empty_allocation();
        for n in 0..2 {
            a.set_winner(n, true);
            a.set_units(n, 0, 0, 1);
        }
        let kinds: Vec<_> = validate_solution(&inst, &a).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ConstraintKind::Supply]);
    }

    #[test]
    fn loser_with_transfers_and_bad_price_reported() {
        let inst = WdpInstance::new(1, vec![consumer(0, &[4], &[1], 0.0)], vec![provider(0, &[5], &[3])]).unwrap();
        let mut a = inst.empty_allocation();
        a.set_units(0, 0, 0, 1);
        let kinds: Vec<_> = validate_solution(&inst, &a).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ConstraintKind::LinkLower));
        assert!(kinds.contains(&ConstraintKind::DemandExactness));
        assert!(kinds.contains(&ConstraintKind::PriceCompatibility));
    }

    #[test]
    fn shape_mismatch_reported() {
        let inst = single_trade(0.0);
        let a = Allocation::empty(2, 1, 1);
        assert_eq!(validate_solution(&inst, &a)[0].kind, ConstraintKind::Shape);
    }

    #[test]
    fn instance_rejects_unordered_ids_and_type_mismatch() {
        assert!(WdpInstance::new(
            1,
            vec![consumer(1, &[10], &[1], 0.0), consumer(0, &[8], &[1], 0.0)],
            vec![provider(0, &[5], &[1])],
        )
        .is_err());
        assert!(WdpInstance::new(2, vec![consumer(0, &[10], &[1], 0.0)], vec![]).is_err());
        assert!(WdpInstance::new(1, vec![], vec![provider(0, &[5, 6], &[1, 1])]).is_err());
    }

    #[test]
    fn limits_must_be_positive() {
        assert!(SolverLimits { time_limit_ms: 0, node_limit: 10 }.validate().is_err());
        assert!(SolverLimits { time_limit_ms: 10, node_limit: 0 }.validate().is_err());
        assert!(SolverLimits::default().validate().is_ok());
    }
}
