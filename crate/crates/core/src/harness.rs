//! Repeated seeded trials, Best/Mean/Std/Sr aggregation and average rankings.
//!
//! Trial `i` of an experiment always runs with seed `base_seed + i`, so the
//! results do not depend on how trials are scheduled across workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{Bbfwa, BbfwaConfig, Bbpso, BbpsoConfig, Gbde, GbdeConfig};
use crate::benchmark::{BudgetedObjective, ObjectiveSpec};
use crate::bip::{Bip, BipConfig};
use crate::error::{invalid, Result};
use crate::optimizer::{Observer, Optimizer, RunSettings, Silent, TrialOutcome};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bip,
    Bbpso,
    Bbfwa,
    Gbde,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Bip, Algorithm::Bbpso, Algorithm::Bbfwa, Algorithm::Gbde];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Bip => "bip",
            Algorithm::Bbpso => "bbpso",
            Algorithm::Bbfwa => "bbfwa",
            Algorithm::Gbde => "gbde",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bip" => Ok(Algorithm::Bip),
            "bbpso" => Ok(Algorithm::Bbpso),
            "bbfwa" => Ok(Algorithm::Bbfwa),
            "gbde" => Ok(Algorithm::Gbde),
            other => Err(invalid(format!("unknown algorithm `{other}`, expected bip, bbpso, bbfwa or gbde"))),
        }
    }
}

/// Configuration of any of the four algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum AlgorithmConfig {
    Bip(BipConfig),
    Bbpso(BbpsoConfig),
    Bbfwa(BbfwaConfig),
    Gbde(GbdeConfig),
}

impl AlgorithmConfig {
    /// Default parameters (population sizes 15 / 20 / 300 / 100).
    pub fn default_for(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Bip => AlgorithmConfig::Bip(BipConfig::default()),
            Algorithm::Bbpso => AlgorithmConfig::Bbpso(BbpsoConfig::default()),
            Algorithm::Bbfwa => AlgorithmConfig::Bbfwa(BbfwaConfig::default()),
            Algorithm::Gbde => AlgorithmConfig::Gbde(GbdeConfig::default()),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmConfig::Bip(_) => Algorithm::Bip,
            AlgorithmConfig::Bbpso(_) => Algorithm::Bbpso,
            AlgorithmConfig::Bbfwa(_) => Algorithm::Bbfwa,
            AlgorithmConfig::Gbde(_) => Algorithm::Gbde,
        }
    }

    pub fn settings(&self) -> &RunSettings {
        match self {
            AlgorithmConfig::Bip(c) => &c.settings,
            AlgorithmConfig::Bbpso(c) => &c.settings,
            AlgorithmConfig::Bbfwa(c) => &c.settings,
            AlgorithmConfig::Gbde(c) => &c.settings,
        }
    }

    pub fn settings_mut(&mut self) -> &mut RunSettings {
        match self {
            AlgorithmConfig::Bip(c) => &mut c.settings,
            AlgorithmConfig::Bbpso(c) => &mut c.settings,
            AlgorithmConfig::Bbfwa(c) => &mut c.settings,
            AlgorithmConfig::Gbde(c) => &mut c.settings,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.settings_mut().seed = seed;
        c
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmConfig::Bip(c) => c.validate(),
            AlgorithmConfig::Bbpso(c) => c.validate(),
            AlgorithmConfig::Bbfwa(c) => c.validate(),
            AlgorithmConfig::Gbde(c) => c.validate(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Optimizer + Send>> {
        Ok(match self {
            AlgorithmConfig::Bip(c) => Box::new(Bip::new(c.clone())?),
            AlgorithmConfig::Bbpso(c) => Box::new(Bbpso::new(c.clone())?),
            AlgorithmConfig::Bbfwa(c) => Box::new(Bbfwa::new(c.clone())?),
            AlgorithmConfig::Gbde(c) => Box::new(Gbde::new(c.clone())?),
        })
    }
}

/// One seeded run of `config` on `spec`.
pub fn run_trial(
    config: &AlgorithmConfig,
    spec: &ObjectiveSpec,
    max_fes: u64,
    observer: &mut dyn Observer,
) -> Result<TrialOutcome> {
    let mut optimizer = config.build()?;
    let mut objective = BudgetedObjective::new(spec.clone(), max_fes);
    let reason = optimizer.run(&mut objective, observer)?;
    let settings = config.settings();
    Ok(TrialOutcome::from_objective(
        config.algorithm().as_str(),
        settings.seed,
        &objective,
        settings.success_threshold,
        reason,
    ))
}

/// Runs `n_trials` independent trials with seeds `base_seed..base_seed + n_trials`.
///
/// `workers = 0` uses all available cores. Outcomes come back in seed order.
pub fn run_experiment(
    config: &AlgorithmConfig,
    function: &str,
    dim: usize,
    n_trials: usize,
    max_fes: u64,
    base_seed: u64,
    workers: usize,
) -> Result<Vec<TrialOutcome>> {
    if n_trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    config.validate()?;
    let spec = ObjectiveSpec::from_id(function, dim)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..n_trials as u64)
            .into_par_iter()
            .map(|i| run_trial(&config.with_seed(base_seed + i), &spec, max_fes, &mut Silent))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub algorithm: String,
    pub function: String,
    pub dim: usize,
    pub best: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1); zero for a single trial.
    pub std: f64,
    pub sr: f64,
    pub successes: usize,
    pub n_trials: usize,
}

/// Best/Mean/Std/Sr of a set of final errors for one `(algorithm, function, dim)` cell.
pub fn aggregate_errors(
    algorithm: &str,
    function: &str,
    dim: usize,
    errors: &[f64],
    success_threshold: f64,
) -> Result<AggregateStats> {
    if errors.is_empty() {
        return Err(invalid("cannot aggregate an empty set of trials"));
    }
    // sorting first makes the sums independent of trial order
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (sorted.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let successes = sorted.iter().filter(|&&e| e <= success_threshold).count();
    Ok(AggregateStats {
        algorithm: algorithm.to_string(),
        function: function.to_string(),
        dim,
        best: sorted[0],
        mean,
        std: if std.is_nan() { 0.0 } else { std },
        sr: successes as f64 / n as f64,
        successes,
        n_trials: n,
    })
}

/// Aggregates the outcomes of one cell. All outcomes must share algorithm,
/// function and dimension.
pub fn aggregate(outcomes: &[TrialOutcome], success_threshold: f64) -> Result<AggregateStats> {
    let first = outcomes.first().ok_or_else(|| invalid("cannot aggregate an empty set of trials"))?;
    if let Some(o) = outcomes
        .iter()
        .find(|o| o.algorithm != first.algorithm || o.function != first.function || o.dim != first.dim)
    {
        return Err(invalid(format!(
            "mixed cells: ({}, {}, {}) vs ({}, {}, {})",
            first.algorithm, first.function, first.dim, o.algorithm, o.function, o.dim
        )));
    }
    let errors: Vec<f64> = outcomes.iter().map(|o| o.final_error).collect();
    aggregate_errors(&first.algorithm, &first.function, first.dim, &errors, success_threshold)
}

/// A named set of functions ranked together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionGroup {
    pub name: String,
    pub functions: Vec<String>,
}

impl FunctionGroup {
    pub fn multimodal() -> Self {
        Self::range("F1-F6", 1, 6)
    }

    pub fn unimodal() -> Self {
        Self::range("F7-F12", 7, 12)
    }

    fn range(name: &str, from: usize, to: usize) -> Self {
        Self { name: name.to_string(), functions: (from..=to).map(|i| format!("F{i}")).collect() }
    }

    /// Parses `F1-F6`, `F1+F3+F4`, `multimodal` or `unimodal`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        match s.to_ascii_lowercase().as_str() {
            "multimodal" => return Ok(Self::multimodal()),
            "unimodal" => return Ok(Self::unimodal()),
            _ => {}
        }
        let index = |t: &str| -> Result<usize> {
            t.trim()
                .strip_prefix(['F', 'f'])
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| invalid(format!("bad function id `{t}` in group `{spec}`")))
        };
        if let Some((a, b)) = s.split_once('-') {
            let (from, to) = (index(a)?, index(b)?);
            if from > to {
                return Err(invalid(format!("empty function range `{spec}`")));
            }
            return Ok(Self::range(s, from, to));
        }
        let functions: Vec<String> = s
            .split('+')
            .map(|t| index(t).map(|i| format!("F{i}")))
            .collect::<Result<_>>()?;
        Ok(Self { name: s.to_string(), functions })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub group: String,
    pub functions: Vec<String>,
    pub algorithms: Vec<String>,
    /// function -> algorithm -> rank (ties share the mean of their positions).
    pub ranks: BTreeMap<String, BTreeMap<String, f64>>,
    /// algorithm -> average rank over the group.
    pub average: BTreeMap<String, f64>,
}

/// Ranks algorithms by mean error on every function of `group` and averages
/// the ranks per algorithm. Every algorithm present in `stats` must have a
/// cell for every function of the group.
pub fn rank_algorithms(stats: &[AggregateStats], group: &FunctionGroup) -> Result<RankingTable> {
    let mut cells: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for s in stats {
        if cells.insert((s.algorithm.as_str(), s.function.as_str()), s.mean).is_some() {
            return Err(invalid(format!(
                "duplicate cell ({}, {}): rank one dimension at a time",
                s.algorithm, s.function
            )));
        }
    }
    let algorithms: Vec<String> = stats
        .iter()
        .map(|s| s.algorithm.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if algorithms.is_empty() {
        return Err(invalid("no statistics to rank"));
    }
    let mut ranks = BTreeMap::new();
    let mut totals: BTreeMap<String, f64> = algorithms.iter().map(|a| (a.clone(), 0.0)).collect();
    for func in &group.functions {
        let mut means = Vec::with_capacity(algorithms.len());
        for alg in &algorithms {
            let m = cells
                .get(&(alg.as_str(), func.as_str()))
                .ok_or_else(|| invalid(format!("missing cell ({alg}, {func})")))?;
            means.push((alg.clone(), *m));
        }
        let r = tied_ranks(&means.iter().map(|(_, m)| *m).collect::<Vec<_>>());
        let row: BTreeMap<String, f64> = means.into_iter().map(|(a, _)| a).zip(r).collect();
        for (a, r) in &row {
            *totals.get_mut(a).expect("known algorithm") += r;
        }
        ranks.insert(func.clone(), row);
    }
    let n = group.functions.len().max(1) as f64;
    Ok(RankingTable {
        group: group.name.clone(),
        functions: group.functions.clone(),
        algorithms,
        ranks,
        average: totals.into_iter().map(|(a, t)| (a, t / n)).collect(),
    })
}

/// 1-based ranks, ascending; exactly equal values share the mean rank.
pub fn tied_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// One row of the per-trial results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub algorithm: String,
    pub function: String,
    pub dim: usize,
    pub seed: u64,
    pub final_error: f64,
    pub evals_used: u64,
    pub succeeded: bool,
}

impl From<&TrialOutcome> for OutcomeRow {
    fn from(o: &TrialOutcome) -> Self {
        Self {
            algorithm: o.algorithm.clone(),
            function: o.function.clone(),
            dim: o.dim,
            seed: o.seed,
            final_error: o.final_error,
            evals_used: o.evals_used,
            succeeded: o.succeeded,
        }
    }
}

pub fn write_results_csv<W: Write>(writer: W, outcomes: &[TrialOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for o in outcomes {
        w.serialize(OutcomeRow::from(o))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a results CSV. Malformed rows are reported with their line number.
pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<OutcomeRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let expected = ["algorithm", "function", "dim", "seed", "final_error", "evals_used", "succeeded"];
    if headers.iter().ne(expected) {
        return Err(invalid(format!(
            "unexpected CSV header `{}`, expected `{}`",
            headers.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: OutcomeRow = record
            .deserialize(Some(&headers))
            .map_err(|e| invalid(format!("malformed CSV row at line {line}: {e}")))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Aggregates CSV rows per `(algorithm, function, dim)`, ordered by key.
pub fn aggregate_rows(rows: &[OutcomeRow], success_threshold: f64) -> Result<Vec<AggregateStats>> {
    let mut cells: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.algorithm.clone(), r.function.clone(), r.dim))
            .or_default()
            .push(r.final_error);
    }
    cells
        .iter()
        .map(|((a, f, d), errs)| aggregate_errors(a, f, *d, errs, success_threshold))
        .collect()
}

/// Rankings of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimRankings {
    pub dim: usize,
    pub tables: Vec<RankingTable>,
}

/// Ranks every dimension present in `stats` for every group whose functions
/// were all run at that dimension.
pub fn rank_by_dim(stats: &[AggregateStats], groups: &[FunctionGroup]) -> Result<Vec<DimRankings>> {
    let dims: BTreeSet<usize> = stats.iter().map(|s| s.dim).collect();
    let mut out = Vec::new();
    for dim in dims {
        let cells: Vec<AggregateStats> = stats.iter().filter(|s| s.dim == dim).cloned().collect();
        let mut tables = Vec::new();
        for g in groups {
            tables.push(rank_algorithms(&cells, g)?);
        }
        out.push(DimRankings { dim, tables });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub success_threshold: f64,
    pub cells: Vec<AggregateStats>,
    pub rankings: Vec<DimRankings>,
}

impl Summary {
    pub fn new(success_threshold: f64, cells: Vec<AggregateStats>, rankings: Vec<DimRankings>) -> Self {
        Self { schema_version: SUMMARY_SCHEMA_VERSION, success_threshold, cells, rankings }
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}
