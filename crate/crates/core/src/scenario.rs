//! Random market generation.
//!
//! Providers draw an integer quantity and a unit ask per resource type each
//! round. Consumers draw quantities each round; their first-round prices are
//! uniform over the consumer price range, later prices drift uniformly within
//! `±price_drift` of their own previous price, clamped back into the range.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConsumerBid, ConsumerId, MarketShape, Money, ProviderBid, ProviderId};

/// Closed interval `[lo, hi]`, written as a two-element array in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval<T>(pub T, pub T);

impl<T: PartialOrd + Copy> Interval<T> {
    pub fn lo(&self) -> T {
        self.0
    }

    pub fn hi(&self) -> T {
        self.1
    }

    pub fn contains(&self, v: T) -> bool {
        self.0 <= v && v <= self.1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub shape: MarketShape,
    pub runs: u32,
    pub provider_quantity_range: Interval<u32>,
    pub consumer_quantity_range: Interval<u32>,
    pub provider_price_range: Interval<Money>,
    pub consumer_price_range: Interval<Money>,
    pub price_drift: f64,
    /// Draw fresh provider bids every round; otherwise round 1's bids are reused.
    pub regenerate_provider_bids: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            shape: MarketShape::default(),
            runs: 10,
            provider_quantity_range: Interval(30, 100),
            consumer_quantity_range: Interval(1, 3),
            provider_price_range: Interval(Money::from_units(50), Money::from_units(200)),
            consumer_price_range: Interval(Money::from_units(100), Money::from_units(250)),
            price_drift: 0.10,
            regenerate_provider_bids: true,
        }
    }
}

fn check_price_range(name: &str, r: &Interval<Money>) -> Result<()> {
    if r.lo().is_negative() || r.lo() > r.hi() {
        return Err(Error::InvalidConfig(format!("{name} [{}, {}] is not a valid non-negative interval", r.0, r.1)));
    }
    if !r.lo().is_whole_cents() || !r.hi().is_whole_cents() {
        return Err(Error::InvalidConfig(format!("{name} bounds must be whole cents")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        for (name, r) in [
            ("provider_quantity_range", &self.provider_quantity_range),
            ("consumer_quantity_range", &self.consumer_quantity_range),
        ] {
            if r.lo() > r.hi() {
                return Err(Error::InvalidConfig(format!("{name} [{}, {}] is empty", r.0, r.1)));
            }
        }
        if self.consumer_quantity_range.lo() == 0 {
            return Err(Error::InvalidConfig("consumer_quantity_range must start at 1 or more".into()));
        }
        check_price_range("provider_price_range", &self.provider_price_range)?;
        check_price_range("consumer_price_range", &self.consumer_price_range)?;
        if !(0.0..1.0).contains(&self.price_drift) {
            return Err(Error::InvalidConfig(format!("price_drift {} must lie in [0, 1)", self.price_drift)));
        }
        Ok(())
    }
}

fn uniform_cents<R: Rng + ?Sized>(rng: &mut R, lo_cents: i64, hi_cents: i64) -> Money {
    Money::from_cents(rng.gen_range(lo_cents..=hi_cents))
}

fn cents(m: Money) -> i64 {
    m.cents().expect("validated ranges are whole cents")
}

/// One bid per provider, ids `0..M`.
pub fn generate_provider_bids<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Vec<ProviderBid> {
    let l = config.shape.num_resource_types;
    let (p_lo, p_hi) = (cents(config.provider_price_range.lo()), cents(config.provider_price_range.hi()));
    let q = config.provider_quantity_range;
    (0..config.shape.num_providers)
        .map(|m| {
            let mut prices = Vec::with_capacity(l);
            let mut quantities = Vec::with_capacity(l);
            for _ in 0..l {
                quantities.push(rng.gen_range(q.lo()..=q.hi()));
                prices.push(uniform_cents(rng, p_lo, p_hi));
            }
            ProviderBid::new(ProviderId(m as u32), prices, quantities).expect("generated provider bid is valid")
        })
        .collect()
}

/// The price window a consumer may move to from `previous`.
pub fn drift_window(config: &ScenarioConfig, previous: Money) -> (Money, Money) {
    let p = cents(previous) as f64;
    let d = config.price_drift;
    let lo = ((1.0 - d) * p - 1e-9).ceil() as i64;
    let hi = ((1.0 + d) * p + 1e-9).floor() as i64;
    let range = config.consumer_price_range;
    let lo = lo.max(cents(range.lo())).min(cents(range.hi()));
    let hi = hi.min(cents(range.hi())).max(lo);
    (Money::from_cents(lo), Money::from_cents(hi))
}

/// One bid per consumer, ids `0..N`.
///
/// `previous_prices[n]` holds consumer `n`'s prices from the previous round
/// and must be given exactly when `round_index > 1`.
pub fn generate_consumer_bids<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
    round_index: u32,
    previous_prices: Option<&[Vec<Money>]>,
) -> Result<Vec<ConsumerBid>> {
    let (n_c, l) = (config.shape.num_consumers, config.shape.num_resource_types);
    match (round_index, previous_prices) {
        (0, _) => return Err(Error::InvalidValue("rounds are numbered from 1".into())),
        (1, Some(_)) => return Err(Error::InvalidValue("round 1 has no previous prices".into())),
        (r, None) if r > 1 => return Err(Error::InvalidValue(format!("round {r} needs the previous round's prices"))),
        (_, Some(prev)) if prev.len() != n_c || prev.iter().any(|p| p.len() != l) => {
            return Err(Error::InvalidValue("previous prices do not match the market shape".into()))
        }
        _ => {}
    }
    let range = config.consumer_price_range;
    let q = config.consumer_quantity_range;
    (0..n_c)
        .map(|n| {
            let mut prices = Vec::with_capacity(l);
            let mut quantities = Vec::with_capacity(l);
            for t in 0..l {
                quantities.push(rng.gen_range(q.lo()..=q.hi()));
                let (lo, hi) = match previous_prices {
                    Some(prev) => drift_window(config, prev[n][t]),
                    None => (range.lo(), range.hi()),
                };
                prices.push(uniform_cents(rng, cents(lo), cents(hi)));
            }
            ConsumerBid::new(ConsumerId(n as u32), prices, quantities)
        })
        .collect()
}
