//! Parameter sweeps over rewiring probability and strategy, with summaries,
//! degree regressions, and acceptance checks against reference numbers.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::RewireOptions;
use crate::regression::{standardized_ols, StandardizedFit};
use crate::seed::derive_seed;
use crate::simulation::{run_trial, TrialResult, TrialSpec};
use crate::strategies::{StrategyConfig, StrategyKind, TieRule};

pub const DEFAULT_REWIRE: [f64; 7] = [0.0, 0.167, 0.333, 0.5, 0.667, 0.833, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Desk,
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            other => Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub rewire: Vec<f64>,
    pub trials: usize,
    pub strategies: Vec<StrategyKind>,
    pub n: usize,
    pub k: usize,
    pub iterations: usize,
    pub master_seed: u64,
    pub neighbor_sample_size: usize,
    pub majority_tie: TieRule,
    /// Share one model, network, and initial state across strategies for a
    /// given (rewire value, trial).
    pub paired: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self::preset(Preset::Paper)
    }
}

impl SweepSpec {
    pub fn preset(p: Preset) -> Self {
        let (trials, n) = match p {
            Preset::Paper => (100, 250),
            Preset::Desk => (20, 100),
        };
        Self {
            rewire: DEFAULT_REWIRE.to_vec(),
            trials,
            strategies: StrategyKind::ALL.to_vec(),
            n,
            k: 7,
            iterations: 300,
            master_seed: 20_240_601,
            neighbor_sample_size: 3,
            majority_tie: TieRule::KeepIncumbent,
            paired: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.rewire.is_empty() || self.strategies.is_empty() {
            return Err(Error::InvalidConfig("need at least one rewire value and one strategy".into()));
        }
        if let Some(&p) = self.rewire.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbability(p));
        }
        self.trial_spec(0, 0, 0).validate()
    }

    pub fn total_trials(&self) -> usize {
        self.rewire.len() * self.strategies.len() * self.trials
    }

    /// Seed of one cell. In paired mode the strategy does not enter the seed.
    pub fn seed_for(&self, strategy_idx: usize, rewire_idx: usize, trial: usize) -> u64 {
        if self.paired {
            derive_seed(self.master_seed, &[rewire_idx as u64, trial as u64])
        } else {
            derive_seed(self.master_seed, &[strategy_idx as u64, rewire_idx as u64, trial as u64])
        }
    }

    pub fn trial_spec(&self, strategy_idx: usize, rewire_idx: usize, trial: usize) -> TrialSpec {
        let mut strategy = StrategyConfig::new(self.strategies[strategy_idx]);
        strategy.neighbor_sample_size = self.neighbor_sample_size;
        strategy.majority_tie = self.majority_tie;
        TrialSpec {
            n: self.n,
            k: self.k,
            rewire: RewireOptions::new(self.rewire[rewire_idx]),
            strategy,
            iterations: self.iterations,
            seed: self.seed_for(strategy_idx, rewire_idx, trial),
        }
    }

    /// All trial specs in canonical order: strategy, then rewire value, then
    /// trial index.
    pub fn trial_specs(&self) -> Vec<TrialSpec> {
        let mut out = Vec::with_capacity(self.total_trials());
        for s in 0..self.strategies.len() {
            for r in 0..self.rewire.len() {
                for t in 0..self.trials {
                    out.push(self.trial_spec(s, r, t));
                }
            }
        }
        out
    }
}

/// One row of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: StrategyKind,
    pub n: usize,
    pub k: usize,
    pub rewire_p: f64,
    pub seed: u64,
    pub mean_degree: f64,
    pub path_length: f64,
    pub performance: f64,
    pub efficiency: f64,
    pub converged_at: usize,
}

impl From<&TrialResult> for SweepRow {
    fn from(r: &TrialResult) -> Self {
        Self {
            strategy: r.spec.strategy.kind,
            n: r.spec.n,
            k: r.spec.k,
            rewire_p: r.spec.rewire.p,
            seed: r.spec.seed,
            mean_degree: r.network.mean_degree,
            path_length: r.network.path_length,
            performance: r.performance,
            efficiency: r.efficiency,
            converged_at: r.converged_at,
        }
    }
}

type RowKey = (StrategyKind, u64, u64);

fn row_key(strategy: StrategyKind, rewire_p: f64, seed: u64) -> RowKey {
    (strategy, rewire_p.to_bits(), seed)
}

pub fn write_rows<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes `rows` to `path` via a temporary file and rename.
pub fn save_rows(rows: &[SweepRow], path: &Path) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    write_rows(rows, BufWriter::new(File::create(&tmp)?))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Append each finished trial here and skip trials already present.
    pub checkpoint: Option<PathBuf>,
    /// Write one trajectory CSV per trial into this directory.
    pub trajectory_dir: Option<PathBuf>,
    /// Called after each completed trial with (done, total).
    pub progress: Option<fn(usize, usize)>,
}

/// Runs every trial of `spec` in parallel and returns rows in canonical
/// order. With a checkpoint file, completed trials are appended as they finish
/// and a rerun resumes where the previous one stopped.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let specs = spec.trial_specs();

    let mut done: BTreeMap<RowKey, SweepRow> = BTreeMap::new();
    if let Some(path) = opts.checkpoint.as_deref() {
        check_sidecar(spec, path)?;
    }
    if let Some(path) = opts.checkpoint.as_deref().filter(|p| p.exists()) {
        let wanted: HashSet<RowKey> = specs
            .iter()
            .map(|s| row_key(s.strategy.kind, s.rewire.p, s.seed))
            .collect();
        for row in read_rows(path)? {
            let key = row_key(row.strategy, row.rewire_p, row.seed);
            if wanted.contains(&key) {
                done.insert(key, row);
            }
        }
    }

    let todo: Vec<&TrialSpec> = specs
        .iter()
        .filter(|s| !done.contains_key(&row_key(s.strategy.kind, s.rewire.p, s.seed)))
        .collect();

    let sink = match &opts.checkpoint {
        Some(path) => {
            let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            let w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
            Some(Mutex::new(w))
        }
        None => None,
    };
    if let Some(dir) = &opts.trajectory_dir {
        fs::create_dir_all(dir)?;
    }
    let counter = Mutex::new(done.len());
    let total = specs.len();

    let fresh: Vec<Result<SweepRow>> = todo
        .par_iter()
        .map(|s| {
            let result = run_trial(s)?;
            let row = SweepRow::from(&result);
            if let Some(dir) = &opts.trajectory_dir {
                let name = format!("{}_p{}_seed{}.csv", file_stem(s.strategy.kind), s.rewire.p, s.seed);
                result.trajectory.write_csv(BufWriter::new(File::create(dir.join(name))?))?;
            }
            if let Some(sink) = &sink {
                let mut w = sink.lock().expect("checkpoint writer poisoned");
                w.serialize(&row)?;
                w.flush()?;
            }
            if let Some(cb) = opts.progress {
                let mut c = counter.lock().expect("progress counter poisoned");
                *c += 1;
                cb(*c, total);
            }
            Ok(row)
        })
        .collect();

    for row in fresh {
        let row = row?;
        done.insert(row_key(row.strategy, row.rewire_p, row.seed), row);
    }
    Ok(specs
        .iter()
        .map(|s| done[&row_key(s.strategy.kind, s.rewire.p, s.seed)].clone())
        .collect())
}

/// Fields that change trial outcomes. A checkpoint may be resumed with a
/// different trial count, strategy list, or rewire list, but not with these
/// changed.
#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct OutcomeKey {
    n: usize,
    k: usize,
    iterations: usize,
    master_seed: u64,
    neighbor_sample_size: usize,
    majority_tie: TieRule,
    paired: bool,
}

fn check_sidecar(spec: &SweepSpec, checkpoint: &Path) -> Result<()> {
    let key = OutcomeKey {
        n: spec.n,
        k: spec.k,
        iterations: spec.iterations,
        master_seed: spec.master_seed,
        neighbor_sample_size: spec.neighbor_sample_size,
        majority_tie: spec.majority_tie,
        paired: spec.paired,
    };
    let sidecar = checkpoint.with_extension("spec.json");
    if sidecar.exists() {
        let stored: OutcomeKey = serde_json::from_slice(&fs::read(&sidecar)?)?;
        if stored != key {
            return Err(Error::InvalidConfig(format!(
                "checkpoint {} was written with different settings: {stored:?}",
                checkpoint.display()
            )));
        }
    } else if checkpoint.exists() && fs::metadata(checkpoint)?.len() > 0 {
        return Err(Error::InvalidConfig(format!(
            "checkpoint {} has no {} describing its settings",
            checkpoint.display(),
            sidecar.display()
        )));
    } else {
        fs::write(&sidecar, serde_json::to_vec_pretty(&key)?)?;
    }
    Ok(())
}

fn file_stem(kind: StrategyKind) -> String {
    kind.name().replace('+', "_")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Absent for a single observation.
    pub se: Option<f64>,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = (xs.len() > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Some(Self { mean, se })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub trials: usize,
    pub performance: MeanSe,
    pub efficiency: MeanSe,
    pub converged_at: MeanSe,
}

/// Per-strategy mean and standard error at rewire value `p`, in the order
/// strategies first appear in `rows`.
pub fn summarize(rows: &[SweepRow], p: f64) -> Vec<StrategySummary> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<StrategyKind, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.rewire_p == p) {
        if !groups.contains_key(&r.strategy) {
            order.push(r.strategy);
        }
        groups.entry(r.strategy).or_default().push(r);
    }
    order
        .into_iter()
        .map(|s| {
            let g = &groups[&s];
            let col = |f: fn(&SweepRow) -> f64| MeanSe::of(&g.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("non-empty group");
            StrategySummary {
                strategy: s,
                trials: g.len(),
                performance: col(|r| r.performance),
                efficiency: col(|r| r.efficiency),
                converged_at: col(|r| r.converged_at as f64),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Performance,
    Efficiency,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Performance, Outcome::Efficiency];

    fn of(self, r: &SweepRow) -> f64 {
        match self {
            Outcome::Performance => r.performance,
            Outcome::Efficiency => r.efficiency,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Performance => "performance",
            Outcome::Efficiency => "efficiency",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegressionResult {
    pub strategy: StrategyKind,
    pub outcome: Outcome,
    pub fit: StandardizedFit,
}

/// Standardized slope of `outcome` on mean degree over all of the strategy's
/// trials, pooled across rewire values.
pub fn standardized_degree_regression(rows: &[SweepRow], strategy: StrategyKind, outcome: Outcome) -> Result<RegressionResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.strategy == strategy)
        .map(|r| (r.mean_degree, outcome.of(r)))
        .unzip();
    Ok(RegressionResult {
        strategy,
        outcome,
        fit: standardized_ols(&x, &y)?,
    })
}

/// Every (strategy, outcome) cell present in `rows`. Cells whose regression is
/// undefined (too few trials or no variance) are reported as errors.
pub fn regression_table(rows: &[SweepRow]) -> Vec<(StrategyKind, Outcome, Result<RegressionResult>)> {
    let mut strategies: Vec<StrategyKind> = rows.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();
    strategies
        .into_iter()
        .flat_map(|s| Outcome::ALL.map(|o| (s, o, standardized_degree_regression(rows, s, o))))
        .collect()
}

pub fn write_regression_csv<W: Write>(table: &[(StrategyKind, Outcome, Result<RegressionResult>)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["strategy", "outcome", "slope", "std_error", "t_stat", "p_value", "n"])?;
    for (s, o, r) in table {
        match r {
            Ok(r) => out.write_record([
                s.name().to_string(),
                o.to_string(),
                r.fit.slope.to_string(),
                r.fit.std_error.to_string(),
                r.fit.t_stat.to_string(),
                r.fit.p_value.to_string(),
                r.fit.n.to_string(),
            ])?,
            Err(_) => out.write_record([s.name(), &o.to_string(), "", "", "", "", ""])?,
        }
    }
    out.flush()?;
    Ok(())
}

/// Population statistics of the networks in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub networks: usize,
    pub mean_degree: f64,
    pub sd_degree: f64,
    pub mean_path_length: f64,
    pub sd_path_length: f64,
}

impl NetworkSummary {
    pub fn cv_degree(&self) -> f64 {
        self.sd_degree / self.mean_degree
    }

    pub fn cv_path_length(&self) -> f64 {
        self.sd_path_length / self.mean_path_length
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Counts each distinct network once (paired sweeps reuse networks across
/// strategies).
pub fn network_summary(rows: &[SweepRow]) -> Option<NetworkSummary> {
    let mut seen = HashSet::new();
    let (deg, path): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| seen.insert((r.rewire_p.to_bits(), r.seed)))
        .map(|r| (r.mean_degree, r.path_length))
        .unzip();
    if deg.is_empty() {
        return None;
    }
    let (mean_degree, sd_degree) = mean_sd(&deg);
    let (mean_path_length, sd_path_length) = mean_sd(&path);
    Some(NetworkSummary {
        networks: deg.len(),
        mean_degree,
        sd_degree,
        mean_path_length,
        sd_path_length,
    })
}

/// Published reference values for the five strategies at p = 0.
pub mod reference {
    use crate::strategies::StrategyKind;

    pub fn performance(kind: StrategyKind) -> f64 {
        match kind {
            StrategyKind::BestI => 0.722,
            StrategyKind::ConfI => 0.721,
            StrategyKind::BestLI => 0.726,
            StrategyKind::ConfLI => 0.586,
            StrategyKind::LMajLI => 0.729,
        }
    }

    pub fn efficiency(kind: StrategyKind) -> f64 {
        match kind {
            StrategyKind::BestI => 0.0221,
            StrategyKind::ConfI => 0.0174,
            StrategyKind::BestLI => 0.0131,
            StrategyKind::ConfLI => 0.030,
            StrategyKind::LMajLI => 0.046,
        }
    }

    /// Strategies by decreasing reference efficiency.
    pub const EFFICIENCY_ORDER: [StrategyKind; 5] = [
        StrategyKind::LMajLI,
        StrategyKind::ConfLI,
        StrategyKind::BestI,
        StrategyKind::ConfI,
        StrategyKind::BestLI,
    ];

    pub const MEAN_DEGREE: f64 = 116.6;
    pub const PATH_LENGTH: f64 = 1.766;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(id: u8, name: &str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {}: {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn at_p0(rows: &[SweepRow]) -> Result<BTreeMap<StrategyKind, StrategySummary>> {
    let summary = summarize(rows, 0.0);
    for kind in StrategyKind::ALL {
        if !summary.iter().any(|s| s.strategy == kind) {
            return Err(Error::InsufficientData(format!("no trials for {kind} at p = 0")));
        }
    }
    Ok(summary.into_iter().map(|s| (s.strategy, s)).collect())
}

/// Strategy performance at p = 0: values within `tol` of the reference (skipped
/// when `tol` is `None`), Conf+LI strictly worst, LMaj+LI strictly best.
pub fn check_performance(rows: &[SweepRow], tol: Option<f64>) -> Result<Check> {
    let s = at_p0(rows)?;
    let perf = |k: StrategyKind| s[&k].performance.mean;
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in StrategyKind::ALL {
        let v = perf(kind);
        let within = tol.is_none_or(|t| (v - reference::performance(kind)).abs() <= t);
        ok &= within;
        parts.push(format!(
            "{kind} {v:.4} (ref {:.3}{})",
            reference::performance(kind),
            if within { "" } else { ", out of tolerance" }
        ));
    }
    let others = |k: StrategyKind| StrategyKind::ALL.into_iter().filter(move |&o| o != k);
    let conf_worst = others(StrategyKind::ConfLI).all(|o| perf(StrategyKind::ConfLI) < perf(o));
    let lmaj_best = others(StrategyKind::LMajLI).all(|o| perf(StrategyKind::LMajLI) > perf(o));
    ok &= conf_worst && lmaj_best;
    parts.push(format!("Conf+LI worst: {conf_worst}, LMaj+LI best: {lmaj_best}"));
    Ok(Check::new(1, "performance at p=0", ok, parts.join("; ")))
}

/// Efficiency at p = 0: exact reference rank order and, when `rel_tol` is
/// given, each mean within that relative tolerance.
pub fn check_efficiency(rows: &[SweepRow], rel_tol: Option<f64>) -> Result<Check> {
    let s = at_p0(rows)?;
    let eff = |k: StrategyKind| s[&k].efficiency.mean;
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in reference::EFFICIENCY_ORDER {
        let v = eff(kind);
        let r = reference::efficiency(kind);
        let within = rel_tol.is_none_or(|t| ((v - r) / r).abs() <= t);
        ok &= within;
        parts.push(format!(
            "{kind} {v:.4} (ref {r}{})",
            if within { "" } else { ", out of tolerance" }
        ));
    }
    let ordered = reference::EFFICIENCY_ORDER.windows(2).all(|w| eff(w[0]) > eff(w[1]));
    ok &= ordered;
    parts.push(format!("rank order matches: {ordered}"));
    Ok(Check::new(2, "efficiency at p=0", ok, parts.join("; ")))
}

/// Signs and significance of the degree regressions.
pub fn check_regression_signs(rows: &[SweepRow]) -> Result<Check> {
    use Outcome::*;
    use StrategyKind::*;
    let get = |k, o| standardized_degree_regression(rows, k, o).map(|r| r.fit);
    let mut ok = true;
    let mut parts = Vec::new();
    // (strategy, outcome, expected sign; 0 means not significant)
    let expectations = [
        (BestI, Performance, 0),
        (BestI, Efficiency, 0),
        (ConfI, Performance, 0),
        (ConfI, Efficiency, 0),
        (BestLI, Performance, -1),
        (ConfLI, Performance, -1),
        (ConfLI, Efficiency, 1),
        (LMajLI, Performance, 1),
        (LMajLI, Efficiency, -1),
    ];
    let mut largest = (0.0f64, BestI, Performance);
    for (k, o) in StrategyKind::ALL.into_iter().flat_map(|k| Outcome::ALL.map(|o| (k, o))) {
        let f = get(k, o)?;
        if f.slope.abs() > largest.0 {
            largest = (f.slope.abs(), k, o);
        }
        let Some(&(_, _, want)) = expectations.iter().find(|e| e.0 == k && e.1 == o) else {
            parts.push(format!("{k} {o} {:+.3} (p={:.2e}, ungated)", f.slope, f.p_value));
            continue;
        };
        let significant = f.p_value < 0.05;
        let good = match want {
            0 => !significant,
            w => significant && f.slope.signum() as i32 == w,
        };
        ok &= good;
        let expect = match want {
            0 => "n.s.",
            1 => "+",
            _ => "-",
        };
        parts.push(format!(
            "{k} {o} {:+.3} (p={:.2e}, want {expect}{})",
            f.slope,
            f.p_value,
            if good { "" } else { ", mismatch" }
        ));
    }
    let lmaj_largest = largest.1 == LMajLI && largest.2 == Efficiency;
    ok &= lmaj_largest;
    parts.push(format!("LMaj+LI efficiency largest |slope|: {lmaj_largest}"));
    Ok(Check::new(3, "degree regression signs", ok, parts.join("; ")))
}

/// Grand mean degree within 10% and path length within 5% of the reference
/// network, and CV(degree) > 5 CV(path length).
pub fn check_network(rows: &[SweepRow], check_levels: bool) -> Result<Check> {
    let s = network_summary(rows).ok_or_else(|| Error::InsufficientData("empty sweep".into()))?;
    let deg_ok = !check_levels || ((s.mean_degree - reference::MEAN_DEGREE) / reference::MEAN_DEGREE).abs() <= 0.10;
    let path_ok = !check_levels || ((s.mean_path_length - reference::PATH_LENGTH) / reference::PATH_LENGTH).abs() <= 0.05;
    let ratio = s.cv_degree() / s.cv_path_length();
    let cv_ok = ratio > 5.0;
    Ok(Check::new(
        4,
        "network generation",
        deg_ok && path_ok && cv_ok,
        format!(
            "{} networks; degree {:.2} sd {:.2} (ref 116.6{}); path {:.4} sd {:.4} (ref 1.766{}); CV ratio {:.2} (need > 5)",
            s.networks,
            s.mean_degree,
            s.sd_degree,
            if deg_ok { "" } else { ", out of tolerance" },
            s.mean_path_length,
            s.sd_path_length,
            if path_ok { "" } else { ", out of tolerance" },
            ratio
        ),
    ))
}

/// Every trial converged before its last iteration.
pub fn check_convergence(rows: &[SweepRow], iterations: usize) -> Check {
    let late: Vec<&SweepRow> = rows.iter().filter(|r| r.converged_at >= iterations).collect();
    let worst = rows.iter().map(|r| r.converged_at).max().unwrap_or(0);
    Check::new(
        5,
        "convergence before last iteration",
        late.is_empty() && !rows.is_empty(),
        format!("{} of {} trials converged before iteration {iterations}; latest at {worst}", rows.len() - late.len(), rows.len()),
    )
}

/// Re-runs `sample` evenly spaced trials and compares rows exactly.
pub fn check_determinism(spec: &SweepSpec, rows: &[SweepRow], sample: usize) -> Result<Check> {
    let specs = spec.trial_specs();
    if specs.len() != rows.len() {
        return Err(Error::InvalidConfig("rows do not match the sweep spec".into()));
    }
    let step = (specs.len() / sample.max(1)).max(1);
    let mut mismatches = 0;
    let mut checked = 0;
    for i in (0..specs.len()).step_by(step).take(sample) {
        checked += 1;
        if SweepRow::from(&run_trial(&specs[i])?) != rows[i] {
            mismatches += 1;
        }
    }
    Ok(Check::new(
        8,
        "determinism",
        mismatches == 0,
        format!("{checked} trials re-run, {mismatches} differ"),
    ))
}

/// Sweep-level checks. Absolute tolerances apply only when the sweep matches
/// the reference setup; other scales check rank orders only.
pub fn verify_sweep(spec: &SweepSpec, rows: &[SweepRow], determinism_sample: usize) -> Result<Vec<Check>> {
    let full_scale = spec.n == 250 && spec.k == 7 && spec.iterations == 300 && spec.trials >= 100;
    let mut checks = vec![
        check_performance(rows, full_scale.then_some(0.02))?,
        check_efficiency(rows, full_scale.then_some(0.30))?,
    ];
    if spec.rewire.len() > 1 {
        checks.push(check_regression_signs(rows)?);
        checks.push(check_network(rows, full_scale)?);
    }
    checks.push(check_convergence(rows, spec.iterations));
    checks.push(check_determinism(spec, rows, determinism_sample)?);
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepSpec {
        SweepSpec {
            rewire: vec![0.0, 1.0],
            trials: 2,
            n: 24,
            k: 3,
            iterations: 30,
            ..SweepSpec::preset(Preset::Desk)
        }
    }

    #[test]
    fn presets() {
        let p = SweepSpec::preset(Preset::Paper);
        assert_eq!(p.total_trials(), 3500);
        assert_eq!((p.n, p.k, p.iterations), (250, 7, 300));
        let d = SweepSpec::preset(Preset::Desk);
        assert_eq!((d.trials, d.n), (20, 100));
        assert_eq!("DESK".parse::<Preset>().unwrap(), Preset::Desk);
    }

    #[test]
    fn validation() {
        let mut s = tiny();
        s.trials = 0;
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.rewire = vec![1.5];
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.iterations = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn single_cell_gives_single_row() {
        let spec = SweepSpec {
            rewire: vec![0.5],
            trials: 1,
            strategies: vec![StrategyKind::ConfI],
            ..tiny()
        };
        let rows = run_sweep(&spec, &SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].strategy, StrategyKind::ConfI);
        assert_eq!(rows[0].rewire_p, 0.5);
    }

    #[test]
    fn seeds_are_distinct_unless_paired() {
        let s = tiny();
        let seeds: HashSet<u64> = s.trial_specs().iter().map(|t| t.seed).collect();
        assert_eq!(seeds.len(), s.total_trials());
        let p = SweepSpec { paired: true, ..tiny() };
        assert_eq!(p.seed_for(0, 1, 1), p.seed_for(4, 1, 1));
        assert_ne!(p.seed_for(0, 1, 1), p.seed_for(0, 1, 0));
    }

    #[test]
    fn reruns_and_resumes_are_identical() {
        let spec = tiny();
        let a = run_sweep(&spec, &SweepOptions::default()).unwrap();
        let b = run_sweep(&spec, &SweepOptions::default()).unwrap();
        assert_eq!(a, b);

        let dir = tempfile::tempdir().unwrap();
        let ck = dir.path().join("ck.csv");
        // A partial checkpoint holding the first few rows in shuffled order.
        let opts = SweepOptions {
            checkpoint: Some(ck.clone()),
            ..Default::default()
        };
        let small = SweepSpec { trials: 1, ..tiny() };
        run_sweep(&small, &opts).unwrap();
        let mut partial = read_rows(&ck).unwrap();
        partial.reverse();
        save_rows(&partial, &ck).unwrap();
        let resumed = run_sweep(&spec, &opts).unwrap();
        assert_eq!(resumed, a);
        assert_eq!(read_rows(&ck).unwrap().len(), a.len());

        let mut x = Vec::new();
        let mut y = Vec::new();
        write_rows(&a, &mut x).unwrap();
        write_rows(&resumed, &mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn checkpoint_for_other_scale_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ck = dir.path().join("ck.csv");
        let spec = tiny();
        let opts = SweepOptions {
            checkpoint: Some(ck.clone()),
            ..Default::default()
        };
        run_sweep(&spec, &opts).unwrap();
        for other in [SweepSpec { n: 30, ..tiny() }, SweepSpec { iterations: 31, ..tiny() }] {
            assert!(run_sweep(&other, &opts).is_err());
        }
        // rows without a settings file are not trusted
        fs::remove_file(ck.with_extension("spec.json")).unwrap();
        assert!(run_sweep(&spec, &opts).is_err());
    }

    fn row(strategy: StrategyKind, p: f64, seed: u64, degree: f64, perf: f64, eff: f64) -> SweepRow {
        SweepRow {
            strategy,
            n: 10,
            k: 2,
            rewire_p: p,
            seed,
            mean_degree: degree,
            path_length: 1.5,
            performance: perf,
            efficiency: eff,
            converged_at: 10,
        }
    }

    #[test]
    fn summary_statistics() {
        let rows = vec![
            row(StrategyKind::BestI, 0.0, 1, 5.0, 0.6, 0.1),
            row(StrategyKind::BestI, 0.0, 2, 5.0, 0.8, 0.3),
            row(StrategyKind::BestI, 1.0, 3, 5.0, 0.1, 0.1),
            row(StrategyKind::ConfI, 0.0, 4, 5.0, 0.5, 0.2),
        ];
        let s = summarize(&rows, 0.0);
        assert_eq!(s.len(), 2);
        assert!((s[0].performance.mean - 0.7).abs() < 1e-12);
        // sd of {0.6, 0.8} is sqrt(0.02); se = sd / sqrt(2) = 0.1
        assert!((s[0].performance.se.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(s[1].trials, 1);
        assert_eq!(s[1].performance.se, None);

        let mut shuffled = rows.clone();
        shuffled.swap(0, 1);
        assert_eq!(summarize(&shuffled, 0.0)[0].performance.mean, s[0].performance.mean);
    }

    #[test]
    fn regression_matches_direct_formula() {
        let rows: Vec<SweepRow> = (0..30)
            .map(|i| {
                let d = 100.0 + i as f64;
                let noise = ((i * 7919) % 13) as f64 / 13.0;
                row(StrategyKind::LMajLI, 0.0, i, d, 0.5 + 0.001 * d + 0.01 * noise, 0.2 - 0.001 * d)
            })
            .collect();
        let eff = standardized_degree_regression(&rows, StrategyKind::LMajLI, Outcome::Efficiency).unwrap();
        assert!((eff.fit.slope + 1.0).abs() < 1e-12);
        assert!(eff.fit.p_value < 1e-12);

        let perf = standardized_degree_regression(&rows, StrategyKind::LMajLI, Outcome::Performance).unwrap();
        let x: Vec<f64> = rows.iter().map(|r| r.mean_degree).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.performance).collect();
        let (mx, my) = (x.iter().sum::<f64>() / 30.0, y.iter().sum::<f64>() / 30.0);
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        assert!((perf.fit.slope - cov / (vx * vy).sqrt()).abs() < 1e-12);

        let flat: Vec<SweepRow> = (0..5).map(|i| row(StrategyKind::BestI, 0.0, i, 7.0, 0.5, 0.1)).collect();
        assert!(matches!(
            standardized_degree_regression(&flat, StrategyKind::BestI, Outcome::Performance),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn network_summary_dedupes_paired_networks() {
        let rows = vec![
            row(StrategyKind::BestI, 0.0, 1, 4.0, 0.5, 0.1),
            row(StrategyKind::ConfI, 0.0, 1, 4.0, 0.5, 0.1),
            row(StrategyKind::BestI, 0.0, 2, 6.0, 0.5, 0.1),
        ];
        let s = network_summary(&rows).unwrap();
        assert_eq!(s.networks, 2);
        assert_eq!(s.mean_degree, 5.0);
    }

    #[test]
    fn checks_report_rank_failures() {
        let mut rows = Vec::new();
        for (i, kind) in StrategyKind::ALL.into_iter().enumerate() {
            let p = reference::performance(kind);
            let e = reference::efficiency(kind);
            rows.push(row(kind, 0.0, i as u64, 5.0, p, e));
        }
        assert!(check_performance(&rows, Some(0.02)).unwrap().passed);
        assert!(check_efficiency(&rows, Some(0.3)).unwrap().passed);
        rows[4].performance = 0.5;
        let c = check_performance(&rows, None).unwrap();
        assert!(!c.passed);
        assert!(c.line().starts_with("[FAIL] criterion 1"));
        assert!(check_convergence(&rows, 300).passed);
        assert!(!check_convergence(&rows, 10).passed);
    }
}
