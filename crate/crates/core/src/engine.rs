//! Multi-round auction orchestration.
//!
//! A round collects bids, extends them with fairness factors, solves winner
//! determination, settles prices and flags consumers whose losing streak has
//! passed the drop threshold. The [`Repository`] is never mutated in place:
//! [`update_repository`] folds one [`RoundResult`] into a new repository, so a
//! run can be replayed from its round log.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{compute_fairness_factors, UniformSource};
use crate::metrics::{self, ConfigEcho, PerRoundRow, SimulationReport};
use crate::model::{
    ConsumerBid, ConsumerId, ExtendedConsumerBid, FairnessParams, Money, ParticipantRecord, ProviderBid, RoundOutcome,
    RoundResult,
};
use crate::pricing::settle;
use crate::scenario::{generate_consumer_bids, generate_provider_bids, ScenarioConfig};
use crate::wdp::{self, SolverLimits, SolverMode, WdpInstance, WdpSolution};

/// Participation history of every consumer ever seen.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Repository {
    records: BTreeMap<ConsumerId, ParticipantRecord>,
    round_counter: u32,
}

impl Repository {
    pub fn new(consumers: impl IntoIterator<Item = ConsumerId>) -> Self {
        Repository {
            records: consumers.into_iter().map(|id| (id, ParticipantRecord::new())).collect(),
            round_counter: 0,
        }
    }

    pub fn from_records(records: BTreeMap<ConsumerId, ParticipantRecord>, round_counter: u32) -> Self {
        Repository { records, round_counter }
    }

    pub fn record(&self, id: ConsumerId) -> Option<&ParticipantRecord> {
        self.records.get(&id)
    }

    pub fn records(&self) -> &BTreeMap<ConsumerId, ParticipantRecord> {
        &self.records
    }

    /// Number of rounds folded into this repository so far.
    pub fn round_counter(&self) -> u32 {
        self.round_counter
    }

    pub fn is_dropped(&self, id: ConsumerId) -> bool {
        self.records.get(&id).is_some_and(ParticipantRecord::is_dropped)
    }

    pub fn drop_count(&self) -> usize {
        self.records.values().filter(|r| r.is_dropped()).count()
    }

    pub fn previous_outcomes(&self) -> BTreeMap<ConsumerId, RoundOutcome> {
        self.records.iter().map(|(&id, r)| (id, r.last_outcome())).collect()
    }

    /// Mean unit price per resource type over the consumers that bid in the
    /// last round; empty before the first round.
    pub fn previous_market_means(&self) -> Vec<f64> {
        let mut sums: Vec<Money> = Vec::new();
        let mut count = 0usize;
        for r in self.records.values() {
            if r.last_outcome() == RoundOutcome::Absent {
                continue;
            }
            let Some(latest) = r.price_history().last() else { continue };
            if sums.is_empty() {
                sums = vec![Money::ZERO; latest.len()];
            }
            for (s, &p) in sums.iter_mut().zip(latest) {
                *s += p;
            }
            count += 1;
        }
        sums.iter().map(|s| s.to_f64() / count as f64).collect()
    }

    pub fn to_snapshot(&self) -> RepositorySnapshot {
        RepositorySnapshot {
            round_counter: self.round_counter,
            records: self
                .records
                .iter()
                .map(|(&id, r)| RecordSnapshot {
                    id,
                    wins: r.wins(),
                    losses: r.losses(),
                    consecutive_losses: r.consecutive_losses(),
                    dropped_at_round: r.dropped_at_round(),
                    last_outcome: r.last_outcome(),
                    price_history: r.price_history().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snapshot: RepositorySnapshot) -> Result<Self> {
        let mut records = BTreeMap::new();
        for s in snapshot.records {
            let record = ParticipantRecord::from_parts(
                s.wins,
                s.losses,
                s.consecutive_losses,
                s.dropped_at_round,
                s.last_outcome,
                s.price_history,
            )?;
            if records.insert(s.id, record).is_some() {
                return Err(Error::InvalidValue(format!("duplicate record for consumer {}", s.id)));
            }
        }
        Ok(Repository::from_records(records, snapshot.round_counter))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_snapshot())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_snapshot(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Serialized form of a [`Repository`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositorySnapshot {
    pub round_counter: u32,
    pub records: Vec<RecordSnapshot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordSnapshot {
    pub id: ConsumerId,
    pub wins: u32,
    pub losses: u32,
    pub consecutive_losses: u32,
    pub dropped_at_round: Option<u32>,
    #[serde(default)]
    pub last_outcome: RoundOutcome,
    pub price_history: Vec<Vec<Money>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// `false` runs the baseline auction with every fairness factor forced to 0.
    pub fairness_enabled: bool,
    pub fairness_params: FairnessParams,
    pub solver_mode: SolverMode,
    pub solver_limits: SolverLimits,
    pub rounds: u32,
    pub master_seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            fairness_enabled: true,
            fairness_params: FairnessParams::default(),
            solver_mode: SolverMode::Heuristic,
            solver_limits: SolverLimits::default(),
            rounds: 100,
            master_seed: 1,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        self.fairness_params.validate()?;
        self.solver_limits.validate()
    }
}

/// Plays one round against `repo` without modifying it.
///
/// Bids must be sorted by ascending consumer id and come from consumers that
/// have a record and have not dropped out.
pub fn run_round<U: UniformSource + ?Sized>(
    repo: &Repository,
    consumer_bids: &[ConsumerBid],
    provider_bids: &[ProviderBid],
    config: &EngineConfig,
    rng: &mut U,
) -> Result<RoundResult> {
    play_round(repo, consumer_bids, provider_bids, config, rng).map(|(result, _)| result)
}

fn play_round<U: UniformSource + ?Sized>(
    repo: &Repository,
    consumer_bids: &[ConsumerBid],
    provider_bids: &[ProviderBid],
    config: &EngineConfig,
    rng: &mut U,
) -> Result<(RoundResult, WdpInstance)> {
    let participants: Vec<ConsumerId> = consumer_bids.iter().map(ConsumerBid::consumer_id).collect();
    for &id in &participants {
        let record = repo.record(id).ok_or(Error::MissingRecord(id))?;
        if record.is_dropped() {
            return Err(Error::DroppedBidder(id));
        }
    }
    let num_types = provider_bids
        .first()
        .map(ProviderBid::num_types)
        .or_else(|| consumer_bids.first().map(ConsumerBid::num_types))
        .ok_or_else(|| Error::InvalidValue("a round needs at least one bid".into()))?;

    let fairness_factors: BTreeMap<ConsumerId, f64> = if config.fairness_enabled {
        compute_fairness_factors(
            repo,
            &participants,
            &repo.previous_outcomes(),
            &repo.previous_market_means(),
            &config.fairness_params,
            rng,
        )?
        .factors
    } else {
        participants.iter().map(|&id| (id, 0.0)).collect()
    };

    let extended = consumer_bids
        .iter()
        .map(|b| ExtendedConsumerBid::new(b.clone(), fairness_factors.get(&b.consumer_id()).copied().unwrap_or(0.0)))
        .collect::<Result<Vec<_>>>()?;
    let instance = WdpInstance::new(num_types, extended, provider_bids.to_vec())?;
    let solution = if participants.is_empty() {
        WdpSolution::from_winners(&instance, &[], wdp::Optimality::ProvedOptimal, 0.0)?
    } else {
        wdp::solve(&instance, config.solver_mode, &config.solver_limits)?
    };
    let settlement = settle(&instance, &solution.allocation)?;

    let utilization_percent = metrics::utilization_percent(&solution.allocation, provider_bids)?;
    let win_percent = if participants.is_empty() {
        0.0
    } else {
        metrics::win_percent(solution.allocation.winner_count(), participants.len())?
    };
    let max_losses = config.fairness_params.max_losses;
    let drops_this_round = participants
        .iter()
        .enumerate()
        .filter(|&(n, id)| {
            !solution.allocation.is_winner(n)
                && repo.record(*id).expect("checked above").consecutive_losses() + 1 > max_losses
        })
        .map(|(_, &id)| id)
        .collect();

    let result = RoundResult {
        round_index: repo.round_counter() + 1,
        offered_prices: consumer_bids.iter().map(|b| (b.consumer_id(), b.unit_prices().to_vec())).collect(),
        participants,
        fairness_factors,
        allocation: solution.allocation,
        unit_trade_prices: settlement.unit_trade_prices,
        consumer_payments: settlement.consumer_payments,
        provider_receipts: settlement.provider_receipts,
        consumer_utilities: settlement.consumer_utilities,
        provider_utilities: settlement.provider_utilities,
        total_utility: solution.total_utility,
        total_satisfaction: solution.total_satisfaction,
        objective: solution.objective,
        utilization_percent,
        win_percent,
        drops_this_round,
    };
    Ok((result, instance))
}

/// Folds one round into the repository: winners gain a win and reset their
/// streak, losers gain a loss and extend it, and consumers flagged in
/// `drops_this_round` are marked dropped at this round.
pub fn update_repository(repo: &Repository, result: &RoundResult) -> Result<Repository> {
    let expected = repo.round_counter + 1;
    if result.round_index != expected {
        return Err(Error::RoundMismatch { expected, got: result.round_index });
    }
    let mut next = repo.clone();
    next.round_counter = expected;
    let mut participated = BTreeMap::new();
    for (n, &id) in result.participants.iter().enumerate() {
        participated.insert(id, result.allocation.is_winner(n));
    }
    for (id, record) in next.records.iter_mut() {
        match participated.get(id) {
            Some(true) => record.record_win(),
            Some(false) => record.record_loss(),
            None => {
                record.record_absence();
                continue;
            }
        }
        if let Some(prices) = result.offered_prices.get(id) {
            record.push_prices(prices.clone());
        }
    }
    for id in &result.drops_this_round {
        next.records.get_mut(id).ok_or(Error::MissingRecord(*id))?.mark_dropped(expected);
    }
    Ok(next)
}

#[derive(Clone, Copy)]
enum Stream {
    Bids = 0,
    Fairness = 1,
}

/// Independent random stream for one run; both comparison arms use the same
/// bid stream for a given `(master_seed, run)`.
fn stream_rng(master_seed: u64, run: u32, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run as u64 * 4 + stream as u64);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOutcome {
    pub report: SimulationReport,
    /// Final repository of each run, in run order.
    pub repositories: Vec<Repository>,
}

/// One run, with access to every round's result and solved instance through `observe`.
pub fn run_single<F>(
    scenario: &ScenarioConfig,
    engine: &EngineConfig,
    run: u32,
    mut observe: F,
) -> Result<(Vec<PerRoundRow>, Repository)>
where
    F: FnMut(&RoundResult, &WdpInstance),
{
    let n_c = scenario.shape.num_consumers;
    let mut repo = Repository::new((0..n_c as u32).map(ConsumerId));
    let mut bid_rng = stream_rng(engine.master_seed, run, Stream::Bids);
    let mut fairness_rng = stream_rng(engine.master_seed, run, Stream::Fairness);
    let mut previous_prices: Option<Vec<Vec<Money>>> = None;
    let mut providers: Vec<ProviderBid> = Vec::new();
    let mut rows = Vec::with_capacity(engine.rounds as usize);
    let mut cumulative_drops = 0u32;

    for round in 1..=engine.rounds {
        if round == 1 || scenario.regenerate_provider_bids {
            providers = generate_provider_bids(scenario, &mut bid_rng);
        }
        // Bids are drawn for every consumer, dropped or not, so that the
        // random stream does not depend on drop history.
        let all_bids = generate_consumer_bids(scenario, &mut bid_rng, round, previous_prices.as_deref())?;
        previous_prices = Some(all_bids.iter().map(|b| b.unit_prices().to_vec()).collect());
        let bids: Vec<ConsumerBid> = all_bids.into_iter().filter(|b| !repo.is_dropped(b.consumer_id())).collect();

        let (result, instance) = play_round(&repo, &bids, &providers, engine, &mut fairness_rng)?;
        observe(&result, &instance);
        cumulative_drops += result.drops_this_round.len() as u32;
        rows.push(PerRoundRow {
            run,
            round,
            total_utility: result.total_utility,
            total_satisfaction: result.total_satisfaction,
            utilization_percent: result.utilization_percent,
            win_percent: result.win_percent,
            cumulative_drops,
        });
        repo = update_repository(&repo, &result)?;
    }
    Ok((rows, repo))
}

/// Runs `scenario.runs` independent runs of `engine.rounds` rounds each.
/// Runs execute in parallel on the current rayon pool; results are ordered by run.
pub fn run_simulation(scenario: &ScenarioConfig, engine: &EngineConfig) -> Result<SimulationOutcome> {
    scenario.validate()?;
    engine.validate()?;
    let runs: Vec<(Vec<PerRoundRow>, Repository)> = (1..=scenario.runs)
        .into_par_iter()
        .map(|run| run_single(scenario, engine, run, |_, _| {}))
        .collect::<Result<_>>()?;

    let mut report = SimulationReport {
        per_round: Vec::new(),
        per_run: Vec::new(),
        config_echo: ConfigEcho { scenario: scenario.clone(), engine: engine.clone() },
    };
    let mut repositories = Vec::with_capacity(runs.len());
    for (i, (rows, repo)) in runs.into_iter().enumerate() {
        report.per_run.push(metrics::aggregate(i as u32 + 1, &rows, &repo));
        report.per_round.extend(rows);
        repositories.push(repo);
    }
    Ok(SimulationOutcome { report, repositories })
}
