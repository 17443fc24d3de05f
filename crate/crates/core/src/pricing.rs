//! Midpoint pricing and settlement.
//!
//! Every unit trades at the mean of the consumer's offer and the provider's
//! ask, so both sides get the same per-unit surplus and payments balance
//! receipts exactly.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Allocation, ConsumerId, Money, ProviderId};
use crate::wdp::{compatible, validate_solution, WdpInstance};

/// Per-unit price for a compatible pair: `(consumer_price + provider_price) / 2`.
pub fn trade_price_unit(consumer_price: Money, provider_price: Money) -> Result<Money> {
    if !compatible(consumer_price, provider_price) {
        return Err(Error::IncompatiblePrices {
            consumer: consumer_price.to_string(),
            provider: provider_price.to_string(),
        });
    }
    Ok(Money::midpoint(consumer_price, provider_price))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settlement {
    /// Keyed by (consumer, resource type, provider); only traded triples appear.
    pub unit_trade_prices: BTreeMap<(ConsumerId, usize, ProviderId), Money>,
    pub consumer_payments: BTreeMap<ConsumerId, Money>,
    pub provider_receipts: BTreeMap<ProviderId, Money>,
    pub consumer_utilities: BTreeMap<ConsumerId, Money>,
    pub provider_utilities: BTreeMap<ProviderId, Money>,
}

impl Settlement {
    pub fn total_payments(&self) -> Money {
        self.consumer_payments.values().copied().sum()
    }

    pub fn total_receipts(&self) -> Money {
        self.provider_receipts.values().copied().sum()
    }

    pub fn total_utility(&self) -> Money {
        self.consumer_utilities.values().copied().sum::<Money>() + self.provider_utilities.values().copied().sum()
    }
}

/// Prices every transfer of a feasible allocation. Every consumer and provider
/// of the instance gets an entry, zero if it did not trade.
pub fn settle(instance: &WdpInstance, allocation: &Allocation) -> Result<Settlement> {
    let violations = validate_solution(instance, allocation);
    if !violations.is_empty() {
        return Err(Error::InvalidAllocation(violations.iter().map(ToString::to_string).collect()));
    }
    let consumer_ids: Vec<ConsumerId> = instance.consumer_ids().collect();
    let provider_ids: Vec<ProviderId> = instance.provider_bids().iter().map(|p| p.provider_id()).collect();

    let mut s = Settlement::default();
    for &id in &consumer_ids {
        s.consumer_payments.insert(id, Money::ZERO);
        s.consumer_utilities.insert(id, Money::ZERO);
    }
    for &id in &provider_ids {
        s.provider_receipts.insert(id, Money::ZERO);
        s.provider_utilities.insert(id, Money::ZERO);
    }

    for (n, l, m, units) in allocation.trades() {
        let offer = instance.consumer_price(n, l);
        let ask = instance.provider_price(m, l);
        let price = trade_price_unit(offer, ask)?;
        let (cid, pid) = (consumer_ids[n], provider_ids[m]);
        s.unit_trade_prices.insert((cid, l, pid), price);
        let amount = price * units;
        *s.consumer_payments.get_mut(&cid).expect("seeded") += amount;
        *s.provider_receipts.get_mut(&pid).expect("seeded") += amount;
        *s.consumer_utilities.get_mut(&cid).expect("seeded") += (offer - price) * units;
        *s.provider_utilities.get_mut(&pid).expect("seeded") += (price - ask) * units;
    }
    Ok(s)
}
