//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::path::Path;
use std::time::{Duration, Instant};

use mdfcda::cli::run_cli;
use mdfcda::engine::{run_single, EngineConfig, Repository};
use mdfcda::metrics::{aggregate, PerRunRow};
use mdfcda::model::{Allocation, MarketShape, Money};
use mdfcda::scenario::{Interval, ScenarioConfig};
use mdfcda::wdp::{
    min_cost_allocation, random_micro_instance, solve_exact, validate_corpus, validate_solution, MicroInstanceSpec,
    SolverLimits, SolverMode, WdpInstance,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

// ---- 1: oracle equivalence ----

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let report =
        validate_corpus(500, 20_240_601, &MicroInstanceSpec::default(), |i| solve_exact(i, &SolverLimits::default()))
            .expect("corpus runs");
    let elapsed = start.elapsed();
    if let Some(f) = report.failures.first() {
        eprintln!("first oracle mismatch, instance {}: {}\n{}", f.index, f.reason, f.instance);
    }
    outcome(
        report.all_passed() && elapsed < Duration::from_secs(60),
        format!("{}/{} micro instances match the oracle in {}", report.passed, report.total, secs(elapsed)),
    )
}

// ---- 2: inner transfer solver against enumeration ----

/// Cheapest way to fill every winner's bundle, found by trying every split of
/// each (consumer, type) demand across compatible providers.
fn enumerate_min_cost(inst: &WdpInstance, winners: &[bool]) -> Option<i64> {
    let consumers = inst.consumer_bids();
    let providers = inst.provider_bids();
    let n_l = inst.num_types();
    let mut cells = Vec::new();
    for (n, c) in consumers.iter().enumerate() {
        if !winners[n] {
            continue;
        }
        for l in 0..n_l {
            let q = c.bid().quantities()[l];
            if q > 0 {
                cells.push((l, q, c.bid().unit_prices()[l]));
            }
        }
    }
    let mut supply: Vec<Vec<u32>> = providers.iter().map(|p| p.quantities().to_vec()).collect();
    let mut best = None;
    fill(&cells, 0, inst, &mut supply, 0, &mut best);
    best
}

fn fill(
    cells: &[(usize, u32, Money)],
    idx: usize,
    inst: &WdpInstance,
    supply: &mut Vec<Vec<u32>>,
    cost: i64,
    best: &mut Option<i64>,
) {
    let Some(&(l, demand, offer)) = cells.get(idx) else {
        *best = Some(best.map_or(cost, |b: i64| b.min(cost)));
        return;
    };
    split(cells, idx, inst, supply, cost, best, l, offer, demand, 0);
}

#[allow(clippy::too_many_arguments)]
fn split(
    cells: &[(usize, u32, Money)],
    idx: usize,
    inst: &WdpInstance,
    supply: &mut Vec<Vec<u32>>,
    cost: i64,
    best: &mut Option<i64>,
    l: usize,
    offer: Money,
    remaining: u32,
    m: usize,
) {
    let providers = inst.provider_bids();
    if m == providers.len() {
        if remaining == 0 {
            fill(cells, idx + 1, inst, supply, cost, best);
        }
        return;
    }
    let ask = providers[m].unit_prices()[l];
    let max_take = if offer >= ask { remaining.min(supply[m][l]) } else { 0 };
    for take in 0..=max_take {
        supply[m][l] -= take;
        split(cells, idx, inst, supply, cost + ask.ticks() * take as i64, best, l, offer, remaining - take, m + 1);
        supply[m][l] += take;
    }
}

fn allocation_cost(inst: &WdpInstance, a: &Allocation) -> i64 {
    a.trades().map(|(_, l, m, units)| inst.provider_bids()[m].unit_prices()[l].ticks() * units as i64).sum()
}

fn inner_solver_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let spec = MicroInstanceSpec::default();
    let (mut instances, mut sets, mut bad) = (0, 0, 0);
    while instances < 200 {
        let inst = random_micro_instance(&spec, &mut rng);
        let n = inst.num_consumers();
        for mask in 0u32..(1 << n) {
            let winners: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
            let greedy = min_cost_allocation(&inst, &winners);
            let expected = enumerate_min_cost(&inst, &winners);
            let ok = match (&greedy, expected) {
                (None, None) => true,
                (Some(plan), Some(cost)) => {
                    plan.cost.ticks() == cost
                        && allocation_cost(&inst, &plan.allocation) == cost
                        && validate_solution(&inst, &plan.allocation).is_empty()
                }
                _ => false,
            };
            if !ok {
                bad += 1;
                eprintln!(
                    "transfer mismatch for winners {winners:?}: greedy {:?}, enumerated {expected:?}",
                    greedy.map(|p| p.cost)
                );
            }
            sets += 1;
        }
        instances += 1;
    }
    let elapsed = start.elapsed();
    outcome(
        bad == 0 && elapsed < Duration::from_secs(30),
        format!("{instances} instances, {sets} winner sets, {bad} mismatches in {}", secs(elapsed)),
    )
}

// ---- 3-7, 10: scaled comparison ----

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// N=50, M=3, L=2. With `scale_capacity` provider quantities are shrunk so
/// demand per unit of supply matches the full-size default market.
fn scaled_scenario(scale_capacity: bool) -> ScenarioConfig {
    let full = ScenarioConfig::default();
    let shape = MarketShape::new(50, 3, 2).unwrap();
    let mut s = ScenarioConfig { shape, runs: 1, ..full.clone() };
    if scale_capacity {
        let factor = (shape.num_consumers as f64 / full.shape.num_consumers as f64)
            / (shape.num_providers as f64 / full.shape.num_providers as f64);
        let scale = |q: u32| ((q as f64 * factor).round() as u32).max(1);
        s.provider_quantity_range =
            Interval(scale(full.provider_quantity_range.lo()), scale(full.provider_quantity_range.hi()));
    }
    s
}

fn engine(seed: u64, fairness: bool, rounds: u32) -> EngineConfig {
    EngineConfig {
        fairness_enabled: fairness,
        solver_mode: SolverMode::Heuristic,
        rounds,
        master_seed: seed,
        ..Default::default()
    }
}

struct Arm {
    summary: PerRunRow,
    first_allocation: Allocation,
    invariant_failures: Vec<String>,
    rounds_checked: usize,
}

fn run_arm(scenario: &ScenarioConfig, engine: &EngineConfig) -> Arm {
    let mut first_allocation = None;
    let mut failures = Vec::new();
    let mut rounds_checked = 0;
    let (rows, repo): (_, Repository) = run_single(scenario, engine, 1, |result, instance| {
        rounds_checked += 1;
        if first_allocation.is_none() {
            first_allocation = Some(result.allocation.clone());
        }
        let paid: Money = result.consumer_payments.values().copied().sum();
        let received: Money = result.provider_receipts.values().copied().sum();
        if paid != received {
            failures.push(format!("round {}: payments {paid} != receipts {received}", result.round_index));
        }
        let negative =
            result.consumer_utilities.values().chain(result.provider_utilities.values()).any(|u| u.is_negative());
        if negative {
            failures.push(format!("round {}: negative utility", result.round_index));
        }
        let violations = validate_solution(instance, &result.allocation);
        if !violations.is_empty() {
            failures.push(format!("round {}: {} constraint violations", result.round_index, violations.len()));
        }
    })
    .expect("simulation runs");
    Arm {
        summary: aggregate(1, &rows, &repo),
        first_allocation: first_allocation.expect("at least one round"),
        invariant_failures: failures,
        rounds_checked,
    }
}

struct Paired {
    seed: u64,
    fair: Arm,
    base: Arm,
}

fn paired_runs(scenario: &ScenarioConfig, rounds: u32) -> Vec<Paired> {
    SEEDS
        .iter()
        .map(|&seed| Paired {
            seed,
            fair: run_arm(scenario, &engine(seed, true, rounds)),
            base: run_arm(scenario, &engine(seed, false, rounds)),
        })
        .collect()
}

fn mechanism_invariants(pairs: &[Paired], elapsed: Duration) -> Outcome {
    let mut rounds = 0;
    let mut failures = Vec::new();
    for p in pairs {
        for arm in [&p.fair, &p.base] {
            rounds += arm.rounds_checked;
            failures.extend(arm.invariant_failures.iter().map(|f| format!("seed {}: {f}", p.seed)));
        }
    }
    for f in failures.iter().take(5) {
        eprintln!("{f}");
    }
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(120),
        format!("{rounds} rounds checked, {} violations, {}", failures.len(), secs(elapsed)),
    )
}

fn drop_counts(pairs: &[Paired]) -> (usize, f64, f64, String) {
    let wins = pairs.iter().filter(|p| p.fair.summary.drops <= p.base.summary.drops).count();
    let mean = |f: &dyn Fn(&Paired) -> u32| pairs.iter().map(|p| f(p) as f64).sum::<f64>() / pairs.len() as f64;
    let fair_mean = mean(&|p| p.fair.summary.drops);
    let base_mean = mean(&|p| p.base.summary.drops);
    let per_seed: Vec<String> =
        pairs.iter().map(|p| format!("{}/{}", p.fair.summary.drops, p.base.summary.drops)).collect();
    (wins, fair_mean, base_mean, per_seed.join(" "))
}

fn drop_reduction(pairs: &[Paired]) -> Outcome {
    let (wins, fair_mean, base_mean, per_seed) = drop_counts(pairs);
    outcome(
        wins >= 4 && fair_mean < base_mean,
        format!(
            "fewer or equal drops in {wins}/{} seeds, mean {fair_mean:.1} vs {base_mean:.1} (fair/base per seed: {per_seed})",
            pairs.len()
        ),
    )
}

fn later_drops(pairs: &[Paired]) -> (bool, String) {
    let both: Vec<(f64, f64)> =
        pairs.iter().filter_map(|p| p.fair.summary.mean_drop_round.zip(p.base.summary.mean_drop_round)).collect();
    let later = both.iter().filter(|(f, b)| f >= b).count();
    // at least four in five of the seeds where both arms dropped someone
    let pass = !both.is_empty() && later * 5 >= both.len() * 4;
    let rounds: Vec<String> = both.iter().map(|(f, b)| format!("{f:.1}/{b:.1}")).collect();
    (
        pass,
        format!(
            "later or equal in {later}/{} eligible seeds (fair/base mean drop round: {})",
            both.len(),
            rounds.join(" ")
        ),
    )
}

fn utility_tradeoff(pairs: &[Paired]) -> Outcome {
    let deltas: Vec<Money> =
        pairs.iter().map(|p| p.fair.summary.total_utility - p.base.summary.total_utility).collect();
    let negative = deltas.iter().filter(|d| d.is_negative()).count();
    let zero = deltas.iter().filter(|&&d| d == Money::ZERO).count();
    let text: Vec<String> = deltas.iter().map(ToString::to_string).collect();
    outcome(
        deltas.len() == pairs.len(),
        format!(
            "utility deltas (fair - base): {}; {negative} negative, {zero} zero, {} positive",
            text.join(" "),
            deltas.len() - negative - zero
        ),
    )
}

fn utilization(pairs: &[Paired]) -> (bool, String) {
    let wins = pairs.iter().filter(|p| p.fair.summary.mean_utilization >= p.base.summary.mean_utilization).count();
    let per_seed: Vec<String> = pairs
        .iter()
        .map(|p| format!("{:.1}/{:.1}", p.fair.summary.mean_utilization, p.base.summary.mean_utilization))
        .collect();
    (wins >= 4, format!("higher or equal in {wins}/{} seeds (fair/base %: {})", pairs.len(), per_seed.join(" ")))
}

fn round_one_equivalence(pairs: &[Paired]) -> Outcome {
    let mut checked = pairs.len();
    let mut same = pairs.iter().filter(|p| p.fair.first_allocation == p.base.first_allocation).count();
    // also at full size, one round only
    let full = ScenarioConfig { runs: 1, ..Default::default() };
    for seed in SEEDS {
        let fair = run_arm(&full, &engine(seed, true, 1));
        let base = run_arm(&full, &engine(seed, false, 1));
        checked += 1;
        same += usize::from(fair.first_allocation == base.first_allocation);
    }
    outcome(same == checked, format!("{same}/{checked} paired round-1 allocations identical"))
}

// ---- 8, 9: CLI ----

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["mdfcda"];
    full.extend_from_slice(args);
    let code = run_cli(full, &mut out, &mut err);
    if code != 0 {
        eprintln!("{}", String::from_utf8_lossy(&err));
    }
    (code, String::from_utf8_lossy(&out).into_owned())
}

const REPORT_FILES: [&str; 3] = ["per_round.csv", "per_run.csv", "report.json"];

fn determinism(tmp: &Path) -> Outcome {
    let a = tmp.join("det_a");
    let b = tmp.join("det_b");
    let common = ["run", "--consumers", "80", "--rounds", "30", "--runs", "4", "--seed", "31"];
    let (ca, out_a) = cli(&[&common[..], &["--out", a.to_str().unwrap(), "--jobs", "1"]].concat());
    let (cb, out_b) = cli(&[&common[..], &["--out", b.to_str().unwrap(), "--jobs", "3"]].concat());
    let mut identical = ca == 0 && cb == 0 && out_a == out_b;
    for f in REPORT_FILES {
        let (x, y) = (std::fs::read(a.join(f)), std::fs::read(b.join(f)));
        identical &= matches!((x, y), (Ok(x), Ok(y)) if x == y);
    }
    outcome(identical, format!("two runs (1 and 3 workers) produce byte-identical {}", REPORT_FILES.join(", ")))
}

fn full_scale(tmp: &Path) -> Outcome {
    let dir = tmp.join("full");
    let start = Instant::now();
    let (code, _) = cli(&["run", "--seed", "1", "--out", dir.to_str().unwrap()]);
    let elapsed = start.elapsed();
    let defaults = (ScenarioConfig::default(), EngineConfig::default());
    let expected_rounds = defaults.0.runs as usize * defaults.1.rounds as usize;
    let lines = |f: &str| std::fs::read_to_string(dir.join(f)).map(|t| t.lines().count()).unwrap_or(0);
    let complete = REPORT_FILES.iter().all(|f| dir.join(f).is_file())
        && lines("per_round.csv") == expected_rounds + 1
        && lines("per_run.csv") == defaults.0.runs as usize + 1;
    let shape = defaults.0.shape;
    outcome(
        code == 0 && complete && elapsed < Duration::from_secs(600),
        format!(
            "N={} M={} L={}, {} rounds x {} runs, heuristic solver: exit {code} in {}",
            shape.num_consumers,
            shape.num_providers,
            shape.num_resource_types,
            defaults.1.rounds,
            defaults.0.runs,
            secs(elapsed)
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("[{}] {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    report(1, "oracle equivalence", oracle_equivalence());
    report(2, "inner solver exactness", inner_solver_exactness());

    let start = Instant::now();
    let pairs = paired_runs(&scaled_scenario(true), 60);
    let elapsed = start.elapsed();
    report(3, "mechanism invariants", mechanism_invariants(&pairs, elapsed));
    report(4, "drop reduction", drop_reduction(&pairs));
    let (pass, detail) = later_drops(&pairs);
    report(5, "later drops", outcome(pass, detail));
    report(6, "utility trade-off", utility_tradeoff(&pairs));
    let (pass, detail) = utilization(&pairs);
    report(7, "utilization", outcome(pass, detail));
    report(8, "determinism", determinism(tmp.path()));
    report(9, "full-size run", full_scale(tmp.path()));
    report(10, "round-1 equivalence", round_one_equivalence(&pairs));

    // Same comparison with unscaled provider capacity, for reference only.
    let unscaled = paired_runs(&scaled_scenario(false), 60);
    let (wins, fair_mean, base_mean, _) = drop_counts(&unscaled);
    println!("[INFO] unscaled capacity: drops fewer or equal in {wins}/5 seeds, mean {fair_mean:.1} vs {base_mean:.1}");
    println!("[INFO] unscaled capacity: {}", later_drops(&unscaled).1);
    println!("[INFO] unscaled capacity: utilization {}", utilization(&unscaled).1);
    let broken: Vec<String> = unscaled
        .iter()
        .flat_map(|p| p.fair.invariant_failures.iter().chain(&p.base.invariant_failures))
        .cloned()
        .collect();
    println!("[INFO] unscaled capacity: {} mechanism invariant violations", broken.len());

    let failed: Vec<u32> = results.iter().filter(|(_, _, o)| !o.pass).map(|(n, _, _)| *n).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
