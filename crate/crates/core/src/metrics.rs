//! Per-round and per-run statistics and their CSV/JSON output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, Repository};
use crate::error::{Error, Result};
use crate::model::{Allocation, Money, ProviderBid};
use crate::scenario::ScenarioConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerRoundRow {
    pub run: u32,
    pub round: u32,
    pub total_utility: Money,
    pub total_satisfaction: f64,
    pub utilization_percent: f64,
    pub win_percent: f64,
    pub cumulative_drops: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerRunRow {
    pub run: u32,
    pub total_utility: Money,
    pub drops: u32,
    /// Mean round at which dropped consumers left; empty when nobody dropped.
    pub mean_drop_round: Option<f64>,
    pub mean_utilization: f64,
    pub mean_win_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub scenario: ScenarioConfig,
    pub engine: EngineConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub per_round: Vec<PerRoundRow>,
    pub per_run: Vec<PerRunRow>,
    pub config_echo: ConfigEcho,
}

impl SimulationReport {
    pub fn rounds_of(&self, run: u32) -> impl Iterator<Item = &PerRoundRow> + '_ {
        self.per_round.iter().filter(move |r| r.run == run)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Share of offered provider units that were sold, in percent.
pub fn utilization_percent(allocation: &Allocation, provider_bids: &[ProviderBid]) -> Result<f64> {
    let offered: u64 = provider_bids.iter().map(ProviderBid::total_units).sum();
    if offered == 0 {
        return Err(Error::NothingOffered);
    }
    Ok(100.0 * allocation.units_sold() as f64 / offered as f64)
}

pub fn win_percent(winners: usize, participants: usize) -> Result<f64> {
    if participants == 0 {
        return Err(Error::EmptyParticipants);
    }
    Ok(100.0 * winners as f64 / participants as f64)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn mean_round(sum: u64, count: u32) -> Option<f64> {
    (count > 0).then(|| sum as f64 / count as f64)
}

/// Summarises one run from its per-round rows and final repository.
pub fn aggregate(run: u32, rows: &[PerRoundRow], repo: &Repository) -> PerRunRow {
    let drop_rounds: Vec<u32> = repo.records().values().filter_map(|r| r.dropped_at_round()).collect();
    PerRunRow {
        run,
        total_utility: rows.iter().map(|r| r.total_utility).sum(),
        drops: drop_rounds.len() as u32,
        mean_drop_round: mean_round(drop_rounds.iter().map(|&d| d as u64).sum(), drop_rounds.len() as u32),
        mean_utilization: mean(rows.iter().map(|r| r.utilization_percent)),
        mean_win_percent: mean(rows.iter().map(|r| r.win_percent)),
    }
}

/// Recomputes every per-run aggregate from the per-round rows.
pub fn check_consistency(report: &SimulationReport) -> Result<()> {
    let mismatch =
        |run: u32, what: &str| Error::ReportMismatch(format!("run {run}: {what} disagrees with per-round rows"));
    for agg in &report.per_run {
        let rows: Vec<&PerRoundRow> = report.rounds_of(agg.run).collect();
        if rows.is_empty() {
            return Err(Error::ReportMismatch(format!("run {} has no per-round rows", agg.run)));
        }
        let total: Money = rows.iter().map(|r| r.total_utility).sum();
        if total != agg.total_utility {
            return Err(mismatch(agg.run, "total_utility"));
        }
        let mut previous = 0u32;
        let mut weighted = 0u64;
        for r in &rows {
            if r.cumulative_drops < previous {
                return Err(mismatch(agg.run, "cumulative_drops"));
            }
            weighted += (r.cumulative_drops - previous) as u64 * r.round as u64;
            previous = r.cumulative_drops;
        }
        if previous != agg.drops {
            return Err(mismatch(agg.run, "drops"));
        }
        if mean_round(weighted, previous) != agg.mean_drop_round {
            return Err(mismatch(agg.run, "mean_drop_round"));
        }
        if mean(rows.iter().map(|r| r.utilization_percent)) != agg.mean_utilization {
            return Err(mismatch(agg.run, "mean_utilization"));
        }
        if mean(rows.iter().map(|r| r.win_percent)) != agg.mean_win_percent {
            return Err(mismatch(agg.run, "mean_win_percent"));
        }
    }
    Ok(())
}

pub const PER_ROUND_HEADER: [&str; 7] =
    ["run", "round", "total_utility", "total_satisfaction", "utilization_percent", "win_percent", "cumulative_drops"];

pub const PER_RUN_HEADER: [&str; 6] =
    ["run", "total_utility", "drops", "mean_drop_round", "mean_utilization", "mean_win_percent"];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `per_round.csv`, `per_run.csv` and `report.json` into `dir`.
/// Nothing is written if the aggregates are inconsistent.
pub fn emit(report: &SimulationReport, dir: &Path) -> Result<()> {
    check_consistency(report)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join("per_round.csv"), &PER_ROUND_HEADER, &report.per_round)?;
    write_csv(&dir.join("per_run.csv"), &PER_RUN_HEADER, &report.per_run)?;
    let json_path = dir.join("report.json");
    fs::write(&json_path, report.to_json()? + "\n").map_err(|e| Error::io(&json_path, e))
}

/// Per-run difference between a fairness-enabled report and its baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub run: u32,
    pub mdfcda_drops: u32,
    pub baseline_drops: u32,
    /// `baseline_drops - mdfcda_drops`; positive means fewer drops with fairness.
    pub drop_reduction: i64,
    /// `mdfcda - baseline`; empty unless both arms had drops.
    pub mean_drop_round_delta: Option<f64>,
    pub utility_delta: Money,
    pub utilization_delta: f64,
    pub win_delta: f64,
}

pub fn compare_reports(mdfcda: &SimulationReport, baseline: &SimulationReport) -> Result<Vec<ComparisonRow>> {
    if mdfcda.per_run.len() != baseline.per_run.len() {
        return Err(Error::ReportMismatch(format!(
            "cannot compare {} runs with {} runs",
            mdfcda.per_run.len(),
            baseline.per_run.len()
        )));
    }
    mdfcda
        .per_run
        .iter()
        .zip(&baseline.per_run)
        .map(|(a, b)| {
            if a.run != b.run {
                return Err(Error::ReportMismatch(format!("run {} paired with run {}", a.run, b.run)));
            }
            Ok(ComparisonRow {
                run: a.run,
                mdfcda_drops: a.drops,
                baseline_drops: b.drops,
                drop_reduction: b.drops as i64 - a.drops as i64,
                mean_drop_round_delta: a.mean_drop_round.zip(b.mean_drop_round).map(|(x, y)| x - y),
                utility_delta: a.total_utility - b.total_utility,
                utilization_delta: a.mean_utilization - b.mean_utilization,
                win_delta: a.mean_win_percent - b.mean_win_percent,
            })
        })
        .collect()
}

pub const COMPARISON_HEADER: [&str; 8] = [
    "run",
    "mdfcda_drops",
    "baseline_drops",
    "drop_reduction",
    "mean_drop_round_delta",
    "utility_delta",
    "utilization_delta",
    "win_delta",
];

pub fn write_comparison(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    write_csv(path, &COMPARISON_HEADER, rows)
}
