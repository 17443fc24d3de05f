//! Line-oriented text form of a [`WdpInstance`], for debugging solver failures.
//!
//! ```text
//! mdfcda-instance 1
//! types 2
//! consumer 0 ff 1.5 prices 10,20.5 quantities 1,2
//! provider 0 prices 5,7 quantities 3,4
//! ```
//!
//! One record per bid. Amounts are exact decimals; fairness factors use the
//! shortest round-tripping float form, so `parse_instance(dump_instance(i)) == i`.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ConsumerBid, ConsumerId, ExtendedConsumerBid, Money, ProviderBid, ProviderId};

use super::WdpInstance;

const MAGIC: &str = "mdfcda-instance 1";

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn dump_instance(instance: &WdpInstance) -> String {
    let mut out = format!("{MAGIC}\ntypes {}\n", instance.num_types());
    for c in instance.consumer_bids() {
        let bid = c.bid();
        let _ = writeln!(
            out,
            "consumer {} ff {} prices {} quantities {}",
            bid.consumer_id(),
            c.fairness_factor(),
            join(bid.unit_prices()),
            join(bid.quantities())
        );
    }
    for p in instance.provider_bids() {
        let _ = writeln!(
            out,
            "provider {} prices {} quantities {}",
            p.provider_id(),
            join(p.unit_prices()),
            join(p.quantities())
        );
    }
    out
}

fn parse_list<T: FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.parse().map_err(|_| Error::Parse { line, message: format!("bad list element {x:?}") }))
        .collect()
}

fn parse_one<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("bad {what} {s:?}") })
}

pub fn parse_instance(text: &str) -> Result<WdpInstance> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((line, l)) => return Err(Error::Parse { line, message: format!("expected {MAGIC:?}, found {l:?}") }),
        None => return Err(Error::Parse { line: 0, message: "empty input".into() }),
    }
    let num_types = match lines.next() {
        Some((line, l)) => match l.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["types", n] => parse_one::<usize>(n, line, "type count")?,
            _ => return Err(Error::Parse { line, message: "expected `types <L>`".into() }),
        },
        None => return Err(Error::Parse { line: 0, message: "missing `types` line".into() }),
    };

    let mut consumers = Vec::new();
    let mut providers = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split_whitespace().collect();
        match fields.as_slice() {
            ["consumer", id, "ff", ff, "prices", prices, "quantities", qty] => {
                let bid = ConsumerBid::new(
                    ConsumerId(parse_one(id, line, "consumer id")?),
                    parse_list::<Money>(prices, line)?,
                    parse_list(qty, line)?,
                )?;
                consumers.push(ExtendedConsumerBid::new(bid, parse_one(ff, line, "fairness factor")?)?);
            }
            ["provider", id, "prices", prices, "quantities", qty] => {
                providers.push(ProviderBid::new(
                    ProviderId(parse_one(id, line, "provider id")?),
                    parse_list::<Money>(prices, line)?,
                    parse_list(qty, line)?,
                )?);
            }
            _ => return Err(Error::Parse { line, message: format!("unrecognised record {l:?}") }),
        }
    }
    WdpInstance::new(num_types, consumers, providers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_documented_example() {
        let text = "mdfcda-instance 1\ntypes 2\n# comment\nconsumer 0 ff 1.5 prices 10,20.5 quantities 1,2\n\nprovider 0 prices 5,7 quantities 3,4\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.num_consumers(), 1);
        assert_eq!(inst.budgets()[0], "51".parse().unwrap());
        assert_eq!(inst.consumer_bids()[0].fairness_factor(), 1.5);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_instance("").is_err());
        assert!(parse_instance("mdfcda-instance 1\ntypes x\n").is_err());
        assert!(parse_instance("mdfcda-instance 1\ntypes 1\nconsumer 0 prices 1 quantities 1\n").is_err());
        let err = parse_instance("mdfcda-instance 1\ntypes 1\nprovider 0 prices 1.001 quantities 1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    proptest! {
        #[test]
        fn round_trips_exactly(
            ff in prop::collection::vec(any::<f64>().prop_filter("finite", |f| f.is_finite()), 0..4),
            cents in prop::collection::vec(0i64..1_000_000, 8),
            qty in prop::collection::vec(1u32..50, 8),
        ) {
            let consumers: Vec<_> = ff
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    let bid = ConsumerBid::new(
                        ConsumerId(i as u32 * 3),
                        vec![Money::from_cents(cents[i]), Money::from_cents(cents[i + 4])],
                        vec![qty[i], qty[i + 4]],
                    )
                    .unwrap();
                    ExtendedConsumerBid::new(bid, f).unwrap()
                })
                .collect();
            let providers = vec![ProviderBid::new(
                ProviderId(2),
                vec![Money::from_cents(cents[7]), Money::from_cents(cents[6])],
                vec![qty[7], 0],
            )
            .unwrap()];
            let inst = WdpInstance::new(2, consumers, providers).unwrap();
            let text = dump_instance(&inst);
            let back = parse_instance(&text).unwrap();
            prop_assert_eq!(dump_instance(&back), text);
            for (a, b) in inst.consumer_bids().iter().zip(back.consumer_bids()) {
                prop_assert_eq!(a.fairness_factor().to_bits(), b.fairness_factor().to_bits());
                prop_assert_eq!(a.bid(), b.bid());
            }
            prop_assert_eq!(inst.provider_bids(), back.provider_bids());
        }
    }
}
