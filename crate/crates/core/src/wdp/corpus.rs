//! Randomised micro instances and the oracle-equivalence check built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ConsumerBid, ConsumerId, ExtendedConsumerBid, Money, ProviderBid, ProviderId};

use super::{dump_instance, objective_value, solve_oracle, validate_solution, WdpInstance, WdpSolution};

/// Size limits for generated micro instances. Prices are whole currency
/// units and fairness factors whole numbers, so objectives are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MicroInstanceSpec {
    pub max_consumers: usize,
    pub max_providers: usize,
    pub max_types: usize,
    pub max_quantity: u32,
    pub price_range: (i64, i64),
    pub fairness_range: (i32, i32),
}

impl Default for MicroInstanceSpec {
    fn default() -> Self {
        MicroInstanceSpec {
            max_consumers: 4,
            max_providers: 2,
            max_types: 2,
            max_quantity: 2,
            price_range: (1, 20),
            fairness_range: (-10, 10),
        }
    }
}

pub fn random_micro_instance<R: Rng + ?Sized>(spec: &MicroInstanceSpec, rng: &mut R) -> WdpInstance {
    let n_c = rng.gen_range(0..=spec.max_consumers);
    let n_p = rng.gen_range(1..=spec.max_providers.max(1));
    let n_l = rng.gen_range(1..=spec.max_types.max(1));
    let (lo, hi) = spec.price_range;
    let price = |rng: &mut R| Money::from_units(rng.gen_range(lo..=hi));

    let consumers = (0..n_c)
        .map(|n| {
            let prices = (0..n_l).map(|_| price(rng)).collect();
            let mut qty: Vec<u32> = (0..n_l).map(|_| rng.gen_range(0..=spec.max_quantity)).collect();
            if qty.iter().all(|&q| q == 0) {
                let l = rng.gen_range(0..n_l);
                qty[l] = rng.gen_range(1..=spec.max_quantity.max(1));
            }
            let ff = rng.gen_range(spec.fairness_range.0..=spec.fairness_range.1) as f64;
            let bid = ConsumerBid::new(ConsumerId(n as u32), prices, qty).expect("generated bid is valid");
            ExtendedConsumerBid::new(bid, ff).expect("integer factor is finite")
        })
        .collect();
    let providers = (0..n_p)
        .map(|m| {
            let prices = (0..n_l).map(|_| price(rng)).collect();
            let qty = (0..n_l).map(|_| rng.gen_range(0..=spec.max_quantity)).collect();
            ProviderBid::new(ProviderId(m as u32), prices, qty).expect("generated bid is valid")
        })
        .collect();
    WdpInstance::new(n_l, consumers, providers).expect("generated instance is valid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusFailure {
    pub index: usize,
    pub reason: String,
    /// The failing instance in the text dump format.
    pub instance: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorpusReport {
    pub total: usize,
    pub passed: usize,
    pub failures: Vec<CorpusFailure>,
}

impl CorpusReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

fn check(instance: &WdpInstance, candidate: &WdpSolution) -> Result<Option<String>> {
    let oracle = solve_oracle(instance)?;
    let violations = validate_solution(instance, &candidate.allocation);
    if !violations.is_empty() {
        let v: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Ok(Some(format!("infeasible allocation: {}", v.join("; "))));
    }
    if candidate.objective != oracle.objective {
        return Ok(Some(format!("objective {} differs from oracle optimum {}", candidate.objective, oracle.objective)));
    }
    let recomputed = objective_value(instance, &candidate.allocation)?;
    if recomputed.objective != candidate.objective || recomputed.total_utility != candidate.total_utility {
        return Ok(Some(format!(
            "reported objective {} does not match recomputed {}",
            candidate.objective, recomputed.objective
        )));
    }
    Ok(None)
}

/// Runs `solver` on `size` seeded micro instances and compares every result
/// with the exhaustive oracle.
pub fn validate_corpus<F>(size: usize, seed: u64, spec: &MicroInstanceSpec, solver: F) -> Result<CorpusReport>
where
    F: Fn(&WdpInstance) -> Result<WdpSolution>,
{
    if size == 0 {
        return Err(Error::InvalidConfig("corpus size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CorpusReport { total: size, ..Default::default() };
    for index in 0..size {
        let instance = random_micro_instance(spec, &mut rng);
        let outcome = match solver(&instance) {
            Ok(solution) => check(&instance, &solution)?,
            Err(e) => Some(format!("solver error: {e}")),
        };
        match outcome {
            None => report.passed += 1,
            Some(reason) => report.failures.push(CorpusFailure { index, reason, instance: dump_instance(&instance) }),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wdp::{parse_instance, solve_exact, solve_heuristic, SolverLimits};

    #[test]
    fn exact_solver_passes_small_corpus() {
        let report =
            validate_corpus(150, 11, &MicroInstanceSpec::default(), |i| solve_exact(i, &SolverLimits::default()))
                .unwrap();
        assert!(report.all_passed(), "{:?}", report.failures.first());
    }

    #[test]
    fn broken_solver_is_caught_with_dump() {
        let report = validate_corpus(50, 3, &MicroInstanceSpec::default(), |i| {
            let mut s = solve_exact(i, &SolverLimits::default())?;
            s.objective += 1.0;
            Ok(s)
        })
        .unwrap();
        assert_eq!(report.passed, 0);
        let first = &report.failures[0];
        assert!(parse_instance(&first.instance).is_ok());
    }

    #[test]
    fn heuristic_never_beats_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let inst = random_micro_instance(&MicroInstanceSpec::default(), &mut rng);
            let h = solve_heuristic(&inst).unwrap();
            let o = solve_oracle(&inst).unwrap();
            assert!(h.objective <= o.objective);
            assert!(h.objective + h.gap_bound >= o.objective - 1e-9);
        }
    }

    #[test]
    fn zero_size_rejected() {
        assert!(validate_corpus(0, 1, &MicroInstanceSpec::default(), solve_heuristic).is_err());
    }
}
