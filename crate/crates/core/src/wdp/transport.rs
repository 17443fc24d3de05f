//! Min-cost transfers for a fixed winner set.
//!
//! Resource types are independent. Within a type, the providers a consumer
//! can buy from are exactly those asking at most its offered price, i.e. a
//! prefix of the providers sorted by ask. With nested prefixes, serving
//! consumers in ascending order of offered price, each from the cheapest
//! units still available, is both a feasibility test and cost-optimal.

use crate::model::{Allocation, Money};

use super::WdpInstance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportPlan {
    /// Winner flags and transfers; `winners()` mirrors the requested set.
    pub allocation: Allocation,
    pub cost: Money,
}

/// Cheapest transfers serving every consumer flagged in `winners`, or `None`
/// when supply and price compatibility cannot cover them all.
///
/// # Panics
/// If `winners.len()` differs from the number of consumers.
pub fn min_cost_allocation(instance: &WdpInstance, winners: &[bool]) -> Option<TransportPlan> {
    assert_eq!(winners.len(), instance.num_consumers(), "winner flags must cover every consumer");
    let prepared = Prepared::new(instance);
    let mut allocation = instance.empty_allocation();
    let cost = prepared.route(winners, Some(&mut allocation))?;
    for (n, &w) in winners.iter().enumerate() {
        allocation.set_winner(n, w);
    }
    Some(TransportPlan { allocation, cost: Money::from_ticks(cost) })
}

/// Per-instance lookup tables shared by the winner-set searches.
pub(crate) struct Prepared<'a> {
    pub inst: &'a WdpInstance,
    /// `v_n + ff_n` in half-cent ticks.
    pub value: Vec<f64>,
    /// Cost of serving `n` alone at the cheapest compatible asks, ignoring
    /// supply sharing; `None` if `n` cannot be served even alone.
    pub lower_bound: Vec<Option<i64>>,
    providers_by_price: Vec<Vec<usize>>,
    consumers_by_threshold: Vec<Vec<usize>>,
}

impl<'a> Prepared<'a> {
    pub fn new(inst: &'a WdpInstance) -> Self {
        let (n_c, n_l, n_p) = (inst.num_consumers(), inst.num_types(), inst.num_providers());
        let scale = Money::TICKS_PER_UNIT as f64;
        let value = (0..n_c)
            .map(|n| inst.budgets()[n].ticks() as f64 + inst.consumer_bids()[n].fairness_factor() * scale)
            .collect();

        let providers_by_price: Vec<Vec<usize>> = (0..n_l)
            .map(|l| {
                let mut ms: Vec<usize> = (0..n_p).filter(|&m| inst.supply(m, l) > 0).collect();
                ms.sort_by_key(|&m| (inst.provider_price(m, l), m));
                ms
            })
            .collect();
        let consumers_by_threshold = (0..n_l)
            .map(|l| {
                let mut ns: Vec<usize> = (0..n_c).filter(|&n| inst.demand(n, l) > 0).collect();
                ns.sort_by_key(|&n| (inst.consumer_price(n, l), n));
                ns
            })
            .collect();

        let lower_bound = (0..n_c)
            .map(|n| {
                let mut cost = 0i64;
                for (l, provs) in providers_by_price.iter().enumerate() {
                    let q = inst.demand(n, l);
                    if q == 0 {
                        continue;
                    }
                    let threshold = inst.consumer_price(n, l);
                    let cheapest = provs.first().map(|&m| inst.provider_price(m, l))?;
                    if cheapest > threshold {
                        return None;
                    }
                    let reachable: u64 = provs
                        .iter()
                        .take_while(|&&m| inst.provider_price(m, l) <= threshold)
                        .map(|&m| inst.supply(m, l) as u64)
                        .sum();
                    if reachable < q as u64 {
                        return None;
                    }
                    cost += (cheapest * q).ticks();
                }
                Some(cost)
            })
            .collect();

        Prepared { inst, value, lower_bound, providers_by_price, consumers_by_threshold }
    }

    pub fn num_consumers(&self) -> usize {
        self.value.len()
    }

    /// `max(0, v_n + ff_n − lower bound)`; 0 for consumers that can never be served.
    pub fn optimistic(&self, n: usize) -> f64 {
        match self.lower_bound[n] {
            Some(lb) => (self.value[n] - lb as f64).max(0.0),
            None => 0.0,
        }
    }

    pub fn cost(&self, set: &[bool]) -> Option<i64> {
        self.route(set, None)
    }

    /// Objective of a feasible winner set in ticks. Values are summed in row
    /// order so that every solver produces bit-identical scores for a set.
    pub fn score(&self, set: &[bool], cost: i64) -> f64 {
        let mut sum = 0.0;
        for (n, &w) in set.iter().enumerate() {
            if w {
                sum += self.value[n];
            }
        }
        sum - cost as f64
    }

    pub fn route(&self, set: &[bool], mut out: Option<&mut Allocation>) -> Option<i64> {
        let inst = self.inst;
        let mut total = 0i64;
        for (l, provs) in self.providers_by_price.iter().enumerate() {
            let mut pi = 0usize;
            let mut remaining = provs.first().map_or(0, |&m| inst.supply(m, l));
            for &n in &self.consumers_by_threshold[l] {
                if !set[n] {
                    continue;
                }
                let threshold = inst.consumer_price(n, l);
                let mut need = inst.demand(n, l);
                while need > 0 {
                    while remaining == 0 && pi < provs.len() {
                        pi += 1;
                        remaining = provs.get(pi).map_or(0, |&m| inst.supply(m, l));
                    }
                    let m = *provs.get(pi)?;
                    let ask = inst.provider_price(m, l);
                    if ask > threshold {
                        return None;
                    }
                    let take = need.min(remaining);
                    need -= take;
                    remaining -= take;
                    total += (ask * take).ticks();
                    if let Some(a) = out.as_deref_mut() {
                        a.set_units(n, l, m, a.units(n, l, m) + take);
                    }
                }
            }
        }
        Some(total)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{consumer, provider};
    use super::*;
    use crate::wdp::validate_solution;
    use proptest::prelude::*;

    /// Cheapest cost over every integer transfer tensor satisfying supply,
    /// demand exactness and compatibility; `None` when no tensor does.
    fn brute_force_cost(inst: &WdpInstance, winners: &[bool]) -> Option<i64> {
        let (n_c, n_l, n_p) = (inst.num_consumers(), inst.num_types(), inst.num_providers());
        let cells: Vec<(usize, usize)> =
            (0..n_c).filter(|&n| winners[n]).flat_map(|n| (0..n_l).map(move |l| (n, l))).collect();
        let mut used = vec![0u32; n_l * n_p];
        fn rec(
            inst: &WdpInstance,
            cells: &[(usize, usize)],
            used: &mut [u32],
            n_p: usize,
            cost: i64,
            best: &mut Option<i64>,
        ) {
            let Some((&(n, l), rest)) = cells.split_first() else {
                if best.is_none_or(|b| cost < b) {
                    *best = Some(cost);
                }
                return;
            };
            // every split of the demand across providers
            #[allow(clippy::too_many_arguments)]
            fn split(
                inst: &WdpInstance,
                n: usize,
                l: usize,
                m: usize,
                need: u32,
                n_p: usize,
                used: &mut [u32],
                cost: i64,
                rest: &[(usize, usize)],
                best: &mut Option<i64>,
            ) {
                if m == n_p {
                    if need == 0 {
                        rec(inst, rest, used, n_p, cost, best);
                    }
                    return;
                }
                for take in 0..=need {
                    if take > 0 && inst.consumer_price(n, l) < inst.provider_price(m, l) {
                        break;
                    }
                    if used[l * n_p + m] + take > inst.supply(m, l) {
                        break;
                    }
                    used[l * n_p + m] += take;
                    let c = cost + (inst.provider_price(m, l) * take).ticks();
                    split(inst, n, l, m + 1, need - take, n_p, used, c, rest, best);
                    used[l * n_p + m] -= take;
                }
            }
            split(inst, n, l, 0, inst.demand(n, l), n_p, used, cost, rest, best);
        }
        let mut best = None;
        rec(inst, &cells, &mut used, n_p, 0, &mut best);
        best
    }

    #[test]
    fn empty_winner_set_costs_nothing() {
        let inst = WdpInstance::new(1, vec![consumer(0, &[10], &[2], 0.0)], vec![provider(0, &[5], &[1])]).unwrap();
        let plan = min_cost_allocation(&inst, &[false]).unwrap();
        assert_eq!(plan.cost, Money::ZERO);
        assert_eq!(plan.allocation.units_sold(), 0);
    }

    #[test]
    fn splits_across_cheapest_providers() {
        let inst = WdpInstance::new(
            1,
            vec![consumer(0, &[10], &[2], 0.0)],
            vec![provider(0, &[5], &[1]), provider(1, &[7], &[5])],
        )
        .unwrap();
        let plan = min_cost_allocation(&inst, &[true]).unwrap();
        assert_eq!(plan.cost, Money::from_units(12));
        assert_eq!(plan.allocation.units(0, 0, 0), 1);
        assert_eq!(plan.allocation.units(0, 0, 1), 1);
        assert_eq!(brute_force_cost(&inst, &[true]), Some(Money::from_units(12).ticks()));
    }

    #[test]
    fn incompatible_price_is_infeasible() {
        let inst = WdpInstance::new(1, vec![consumer(0, &[6], &[1], 0.0)], vec![provider(0, &[7], &[9])]).unwrap();
        assert!(min_cost_allocation(&inst, &[true]).is_none());
        assert!(brute_force_cost(&inst, &[true]).is_none());
    }

    #[test]
    fn low_threshold_consumer_gets_the_cheap_unit() {
        // B can only afford provider 0; A can afford both.
        let inst = WdpInstance::new(
            1,
            vec![consumer(0, &[7], &[1], 0.0), consumer(1, &[5], &[1], 0.0)],
            vec![provider(0, &[5], &[1]), provider(1, &[7], &[1])],
        )
        .unwrap();
        let plan = min_cost_allocation(&inst, &[true, true]).unwrap();
        assert_eq!(plan.allocation.units(1, 0, 0), 1);
        assert_eq!(plan.allocation.units(0, 0, 1), 1);
        assert_eq!(plan.cost, Money::from_units(12));
    }

    fn micro_instance() -> impl Strategy<Value = (WdpInstance, Vec<bool>)> {
        (1usize..=3, 1usize..=3, 1usize..=2).prop_flat_map(|(n_c, n_p, n_l)| {
            let consumers = prop::collection::vec(
                (prop::collection::vec(1i64..=12, n_l), prop::collection::vec(0u32..=2, n_l)),
                n_c,
            );
            let providers = prop::collection::vec(
                (prop::collection::vec(1i64..=12, n_l), prop::collection::vec(0u32..=3, n_l)),
                n_p,
            );
            let winners = prop::collection::vec(any::<bool>(), n_c);
            (consumers, providers, winners).prop_map(move |(cs, ps, winners)| {
                let cs = cs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (p, mut q))| {
                        if q.iter().all(|&x| x == 0) {
                            q[0] = 1;
                        }
                        consumer(i as u32, &p, &q, 0.0)
                    })
                    .collect();
                let ps = ps.into_iter().enumerate().map(|(i, (p, q))| provider(i as u32, &p, &q)).collect();
                (WdpInstance::new(n_l, cs, ps).unwrap(), winners)
            })
        })
    }

    proptest! {
        #[test]
        fn greedy_matches_exhaustive_enumeration((inst, winners) in micro_instance()) {
            let brute = brute_force_cost(&inst, &winners);
            let plan = min_cost_allocation(&inst, &winners);
            prop_assert_eq!(plan.as_ref().map(|p| p.cost.ticks()), brute);
            if let Some(plan) = plan {
                prop_assert!(validate_solution(&inst, &plan.allocation).is_empty());
            }
        }
    }
}
