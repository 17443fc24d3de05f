//! Domain types shared by the solver, pricing, fairness and simulation layers.
//!
//! Consumers (buyers) submit a per-type unit price and quantity for a bundle of
//! resources; providers (sellers) submit the same two-tuple for what they
//! offer. Monetary amounts are carried as [`Money`], an exact fixed-point
//! amount with half-cent resolution, so that midpoint trade prices between two
//! whole-cent asks never round.

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact monetary amount, stored as a signed count of half-cents.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);
    /// Internal ticks per whole currency unit.
    pub const TICKS_PER_UNIT: i64 = 200;

    pub const fn from_ticks(ticks: i64) -> Self {
        Money(ticks)
    }

    pub const fn from_cents(cents: i64) -> Self {
        Money(cents * 2)
    }

    pub const fn from_units(units: i64) -> Self {
        Money(units * Self::TICKS_PER_UNIT)
    }

    pub const fn ticks(self) -> i64 {
        self.0
    }

    pub const fn is_whole_cents(self) -> bool {
        self.0 % 2 == 0
    }

    /// Amount in cents, if it is a whole number of cents.
    pub const fn cents(self) -> Option<i64> {
        if self.is_whole_cents() {
            Some(self.0 / 2)
        } else {
            None
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::TICKS_PER_UNIT as f64
    }

    /// Converts a currency amount that is within rounding noise of a half-cent grid point.
    pub fn from_f64(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidValue(format!("non-finite amount {value}")));
        }
        let scaled = value * Self::TICKS_PER_UNIT as f64;
        let ticks = scaled.round();
        if (scaled - ticks).abs() > 1e-6 || ticks.abs() > 2f64.powi(62) {
            return Err(Error::InvalidValue(format!("amount {value} is not representable at half-cent resolution")));
        }
        Ok(Money(ticks as i64))
    }

    /// Arithmetic mean of two amounts. Exact whenever both are whole cents.
    pub const fn midpoint(a: Money, b: Money) -> Money {
        Money((a.0 + b.0).div_euclid(2))
    }

    pub const fn is_negative(self) -> bool {
        self.0 < 0
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let units = abs / Self::TICKS_PER_UNIT as u64;
        // one tick is 0.005
        let thousandths = (abs % Self::TICKS_PER_UNIT as u64) * 5;
        if thousandths == 0 {
            write!(f, "{sign}{units}")
        } else {
            let frac = format!("{thousandths:03}");
            write!(f, "{sign}{units}.{}", frac.trim_end_matches('0'))
        }
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Money({self})")
    }
}

impl FromStr for Money {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidValue(format!("malformed amount {s:?}"));
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) || (body.contains('.') && frac_part.is_empty()) {
            return Err(bad());
        }
        let frac_trimmed = frac_part.trim_end_matches('0');
        if frac_trimmed.len() > 3 {
            return Err(Error::InvalidValue(format!("amount {s:?} is finer than half a cent")));
        }
        let units: i64 = int_part.parse().map_err(|_| bad())?;
        let thousandths: i64 = format!("{frac_trimmed:0<3}").parse().map_err(|_| bad())?;
        if thousandths % 5 != 0 {
            return Err(Error::InvalidValue(format!("amount {s:?} is finer than half a cent")));
        }
        let ticks =
            units.checked_mul(Self::TICKS_PER_UNIT).and_then(|t| t.checked_add(thousandths / 5)).ok_or_else(bad)?;
        Ok(Money(if negative { -ticks } else { ticks }))
    }
}

impl Serialize for Money {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct MoneyVisitor;

        impl serde::de::Visitor<'_> for MoneyVisitor {
            type Value = Money;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a currency amount with at most half-cent resolution")
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<Money, E> {
                Money::from_f64(v).map_err(E::custom)
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Money, E> {
                v.checked_mul(Money::TICKS_PER_UNIT).map(Money).ok_or_else(|| E::custom("amount out of range"))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Money, E> {
                i64::try_from(v).map_err(|_| E::custom("amount out of range")).and_then(|v| self.visit_i64(v))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Money, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(MoneyVisitor)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Mul<u32> for Money {
    type Output = Money;
    fn mul(self, units: u32) -> Money {
        Money(self.0 * units as i64)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConsumerId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProviderId(pub u32);

impl fmt::Display for ConsumerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Market dimensions: consumers, providers and resource types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketShape {
    pub num_consumers: usize,
    pub num_providers: usize,
    pub num_resource_types: usize,
}

impl Default for MarketShape {
    fn default() -> Self {
        MarketShape { num_consumers: 300, num_providers: 5, num_resource_types: 4 }
    }
}

impl MarketShape {
    pub fn new(num_consumers: usize, num_providers: usize, num_resource_types: usize) -> Result<Self> {
        let shape = MarketShape { num_consumers, num_providers, num_resource_types };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_consumers == 0 || self.num_providers == 0 || self.num_resource_types == 0 {
            return Err(Error::InvalidConfig(format!(
                "market shape needs at least one consumer, provider and resource type (got {}x{}x{})",
                self.num_consumers, self.num_providers, self.num_resource_types
            )));
        }
        Ok(())
    }
}

fn check_prices(owner: &str, prices: &[Money], quantities: &[u32]) -> Result<()> {
    if prices.len() != quantities.len() {
        return Err(Error::InvalidBid(format!("{owner}: {} prices but {} quantities", prices.len(), quantities.len())));
    }
    if prices.is_empty() {
        return Err(Error::InvalidBid(format!("{owner}: no resource types")));
    }
    for (l, p) in prices.iter().enumerate() {
        if p.is_negative() {
            return Err(Error::InvalidBid(format!("{owner}: negative price {p} for type {l}")));
        }
        if !p.is_whole_cents() {
            return Err(Error::InvalidBid(format!("{owner}: price {p} for type {l} is not a whole cent")));
        }
    }
    Ok(())
}

/// A consumer's request: unit price and quantity per resource type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsumerBid {
    consumer_id: ConsumerId,
    unit_prices: Vec<Money>,
    quantities: Vec<u32>,
}

impl ConsumerBid {
    pub fn new(consumer_id: ConsumerId, unit_prices: Vec<Money>, quantities: Vec<u32>) -> Result<Self> {
        let owner = format!("consumer {consumer_id}");
        check_prices(&owner, &unit_prices, &quantities)?;
        if quantities.iter().all(|&q| q == 0) {
            return Err(Error::InvalidBid(format!("{owner}: requests no resources")));
        }
        Ok(ConsumerBid { consumer_id, unit_prices, quantities })
    }

    pub fn consumer_id(&self) -> ConsumerId {
        self.consumer_id
    }

    pub fn unit_prices(&self) -> &[Money] {
        &self.unit_prices
    }

    pub fn quantities(&self) -> &[u32] {
        &self.quantities
    }

    pub fn num_types(&self) -> usize {
        self.quantities.len()
    }

    pub fn total_units(&self) -> u32 {
        self.quantities.iter().sum()
    }

    pub fn budget(&self) -> Money {
        budget(self)
    }
}

/// The most the consumer is willing to pay for its whole bundle: Σ_l price_l · quantity_l.
pub fn budget(bid: &ConsumerBid) -> Money {
    bid.unit_prices.iter().zip(&bid.quantities).map(|(&p, &q)| p * q).sum()
}

/// A provider's offer: unit ask and available quantity per resource type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProviderBid {
    provider_id: ProviderId,
    unit_prices: Vec<Money>,
    quantities: Vec<u32>,
}

impl ProviderBid {
    pub fn new(provider_id: ProviderId, unit_prices: Vec<Money>, quantities: Vec<u32>) -> Result<Self> {
        check_prices(&format!("provider {provider_id}"), &unit_prices, &quantities)?;
        Ok(ProviderBid { provider_id, unit_prices, quantities })
    }

    pub fn provider_id(&self) -> ProviderId {
        self.provider_id
    }

    pub fn unit_prices(&self) -> &[Money] {
        &self.unit_prices
    }

    pub fn quantities(&self) -> &[u32] {
        &self.quantities
    }

    pub fn num_types(&self) -> usize {
        self.quantities.len()
    }

    pub fn total_units(&self) -> u64 {
        self.quantities.iter().map(|&q| q as u64).sum()
    }
}

/// A consumer bid extended with the auctioneer's fairness factor.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedConsumerBid {
    bid: ConsumerBid,
    fairness_factor: f64,
}

impl ExtendedConsumerBid {
    pub fn new(bid: ConsumerBid, fairness_factor: f64) -> Result<Self> {
        if !fairness_factor.is_finite() {
            return Err(Error::InvalidValue(format!("fairness factor for consumer {} is not finite", bid.consumer_id)));
        }
        Ok(ExtendedConsumerBid { bid, fairness_factor })
    }

    pub fn bid(&self) -> &ConsumerBid {
        &self.bid
    }

    pub fn fairness_factor(&self) -> f64 {
        self.fairness_factor
    }
}

/// How a consumer fared in the most recent round it could have bid in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundOutcome {
    Won,
    Lost,
    #[default]
    Absent,
}

/// Per-consumer participation history kept by the auctioneer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParticipantRecord {
    wins: u32,
    losses: u32,
    consecutive_losses: u32,
    dropped_at_round: Option<u32>,
    last_outcome: RoundOutcome,
    price_history: Vec<Vec<Money>>,
}

impl ParticipantRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(
        wins: u32,
        losses: u32,
        consecutive_losses: u32,
        dropped_at_round: Option<u32>,
        last_outcome: RoundOutcome,
        price_history: Vec<Vec<Money>>,
    ) -> Result<Self> {
        if consecutive_losses > losses {
            return Err(Error::InvalidValue(format!(
                "consecutive losses {consecutive_losses} exceed total losses {losses}"
            )));
        }
        if last_outcome == RoundOutcome::Won && consecutive_losses != 0 {
            return Err(Error::InvalidValue(
                "a consumer that won its last round must have a zero losing streak".into(),
            ));
        }
        Ok(ParticipantRecord { wins, losses, consecutive_losses, dropped_at_round, last_outcome, price_history })
    }

    pub fn wins(&self) -> u32 {
        self.wins
    }

    pub fn losses(&self) -> u32 {
        self.losses
    }

    pub fn consecutive_losses(&self) -> u32 {
        self.consecutive_losses
    }

    pub fn dropped_at_round(&self) -> Option<u32> {
        self.dropped_at_round
    }

    pub fn is_dropped(&self) -> bool {
        self.dropped_at_round.is_some()
    }

    pub fn last_outcome(&self) -> RoundOutcome {
        self.last_outcome
    }

    pub fn price_history(&self) -> &[Vec<Money>] {
        &self.price_history
    }

    pub(crate) fn record_win(&mut self) {
        self.wins += 1;
        self.consecutive_losses = 0;
        self.last_outcome = RoundOutcome::Won;
    }

    pub(crate) fn record_loss(&mut self) {
        self.losses += 1;
        self.consecutive_losses += 1;
        self.last_outcome = RoundOutcome::Lost;
    }

    pub(crate) fn record_absence(&mut self) {
        self.last_outcome = RoundOutcome::Absent;
    }

    pub(crate) fn push_prices(&mut self, prices: Vec<Money>) {
        self.price_history.push(prices);
    }

    /// Sets the drop round once; later calls are ignored.
    pub(crate) fn mark_dropped(&mut self, round: u32) {
        if self.dropped_at_round.is_none() {
            self.dropped_at_round = Some(round);
        }
    }
}

/// Fairness coefficients and the bidder-drop threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairnessParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Longest losing streak a consumer tolerates; one more loss drops it.
    pub max_losses: u32,
}

impl Default for FairnessParams {
    fn default() -> Self {
        FairnessParams { alpha1: 9.0, alpha2: 7.0, beta1: 4.0, beta2: 28.0, max_losses: 6 }
    }
}

impl FairnessParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("alpha1", self.alpha1), ("alpha2", self.alpha2), ("beta1", self.beta1), ("beta2", self.beta2)]
        {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.beta2 <= 0.0 {
            return Err(Error::InvalidConfig("beta2 must be positive".into()));
        }
        if self.max_losses == 0 {
            return Err(Error::InvalidConfig("max_losses must be at least 1".into()));
        }
        Ok(())
    }
}

/// Winner flags `x[n]` and the dense transfer tensor `y[n][l][m]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    winners: Vec<bool>,
    transfers: Vec<u32>,
    num_types: usize,
    num_providers: usize,
}

impl Allocation {
    pub fn empty(num_consumers: usize, num_types: usize, num_providers: usize) -> Self {
        Allocation {
            winners: vec![false; num_consumers],
            transfers: vec![0; num_consumers * num_types * num_providers],
            num_types,
            num_providers,
        }
    }

    pub fn num_consumers(&self) -> usize {
        self.winners.len()
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn num_providers(&self) -> usize {
        self.num_providers
    }

    pub fn winners(&self) -> &[bool] {
        &self.winners
    }

    pub fn is_winner(&self, n: usize) -> bool {
        self.winners[n]
    }

    pub fn set_winner(&mut self, n: usize, won: bool) {
        self.winners[n] = won;
    }

    pub fn winner_count(&self) -> usize {
        self.winners.iter().filter(|&&w| w).count()
    }

    fn index(&self, n: usize, l: usize, m: usize) -> usize {
        debug_assert!(l < self.num_types && m < self.num_providers);
        (n * self.num_types + l) * self.num_providers + m
    }

    /// Units of type `l` that provider `m` sells to consumer `n`.
    pub fn units(&self, n: usize, l: usize, m: usize) -> u32 {
        self.transfers[self.index(n, l, m)]
    }

    pub fn set_units(&mut self, n: usize, l: usize, m: usize, units: u32) {
        let i = self.index(n, l, m);
        self.transfers[i] = units;
    }

    pub fn units_sold(&self) -> u64 {
        self.transfers.iter().map(|&u| u as u64).sum()
    }

    /// Iterates over `(n, l, m, units)` for every non-zero transfer.
    pub fn trades(&self) -> impl Iterator<Item = (usize, usize, usize, u32)> + '_ {
        let per_consumer = self.num_types * self.num_providers;
        self.transfers.iter().enumerate().filter(|(_, &u)| u > 0).map(move |(i, &u)| {
            let n = i / per_consumer.max(1);
            let rest = i % per_consumer.max(1);
            (n, rest / self.num_providers, rest % self.num_providers, u)
        })
    }
}

/// Everything the auctioneer computed for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundResult {
    pub round_index: u32,
    /// Consumers that bid this round, ascending; allocation rows follow this order.
    pub participants: Vec<ConsumerId>,
    /// Unit prices each participant offered this round.
    pub offered_prices: BTreeMap<ConsumerId, Vec<Money>>,
    pub fairness_factors: BTreeMap<ConsumerId, f64>,
    pub allocation: Allocation,
    pub unit_trade_prices: BTreeMap<(ConsumerId, usize, ProviderId), Money>,
    pub consumer_payments: BTreeMap<ConsumerId, Money>,
    pub provider_receipts: BTreeMap<ProviderId, Money>,
    pub consumer_utilities: BTreeMap<ConsumerId, Money>,
    pub provider_utilities: BTreeMap<ProviderId, Money>,
    pub total_utility: Money,
    pub total_satisfaction: f64,
    pub objective: f64,
    pub utilization_percent: f64,
    pub win_percent: f64,
    pub drops_this_round: Vec<ConsumerId>,
}

impl RoundResult {
    pub fn winners(&self) -> impl Iterator<Item = ConsumerId> + '_ {
        self.participants.iter().zip(self.allocation.winners()).filter(|(_, &w)| w).map(|(&id, _)| id)
    }
}
