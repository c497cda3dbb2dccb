use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use collab_core::experiment::{
    self, read_rows, regression_table, run_sweep, save_rows, summarize, verify_sweep, Check, Preset, SweepOptions,
    SweepSpec,
};
use collab_core::metrics::{calibrate_sample_size, graph_report, CalibratedMetric, Estimation, SamplingPlan};
use collab_core::project::{axioms_check, project_stats, write_stats_csv, GradeScale, TransitionLog};
use collab_core::{run_trial, DirectedGraph, Error, StrategyKind, TieRule};

#[derive(Parser)]
#[command(name = "collabsim", version, about = "Networked collaboration simulations and metrics")]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parameter preset used as the base configuration.
    #[arg(long, global = true, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[command(subcommand)]
    command: Command,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_tie(s: &str) -> Result<TieRule, String> {
    match s.to_ascii_lowercase().as_str() {
        "keep" | "incumbent" | "keep-incumbent" => Ok(TieRule::KeepIncumbent),
        "coin" => Ok(TieRule::Coin),
        _ => Err(format!("unknown tie rule {s:?} (use keep or coin)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial.
    Simulate(SimulateArgs),
    /// Run the full rewiring by strategy experiment.
    Sweep(SweepArgs),
    /// Measure a directed edge list.
    GraphMetrics(GraphArgs),
    /// Compute project efficiency and performance from assessment transitions.
    ProjectMetrics(ProjectArgs),
    /// Degree regression table from sweep results.
    Regress(RegressArgs),
}

#[derive(Args, Default)]
struct ModelFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Neighbors sampled by best-neighbor and conformity.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Local-majority tie rule: keep or coin.
    #[arg(long, value_parser = parse_tie)]
    tie: Option<TieRule>,
}

impl ModelFlags {
    fn apply(&self, spec: &mut SweepSpec) {
        if let Some(v) = self.n {
            spec.n = v;
        }
        if let Some(v) = self.k {
            spec.k = v;
        }
        if let Some(v) = self.iterations {
            spec.iterations = v;
        }
        if let Some(v) = self.sample_size {
            spec.neighbor_sample_size = v;
        }
        if let Some(v) = self.tie {
            spec.majority_tie = v;
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_strategy)]
    strategy: StrategyKind,
    #[arg(long, default_value_t = 0.0)]
    rewire: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelFlags,
    /// Write the per-iteration trajectory as CSV.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Save the generated network as an edge list.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Print the full result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated rewire probabilities.
    #[arg(long, value_delimiter = ',')]
    rewire: Option<Vec<f64>>,
    /// Comma-separated strategy names.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategies: Option<Vec<StrategyKind>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reuse one model and network across strategies.
    #[arg(long)]
    paired: bool,
    /// Results table.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Progress file for resuming interrupted sweeps (default: <out>.partial).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Directory for per-trial trajectory CSVs.
    #[arg(long)]
    trajectories: Option<PathBuf>,
    /// Write the degree regression table here.
    #[arg(long)]
    regression_out: Option<PathBuf>,
    /// Rewire value for the summary table.
    #[arg(long, default_value_t = 0.0)]
    summary_p: f64,
    /// Run the acceptance checks and exit nonzero if any fails.
    #[arg(long)]
    verify: bool,
    /// Trials re-run for the determinism check.
    #[arg(long, default_value_t = 10)]
    determinism_sample: usize,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list with `src dst` per line.
    input: PathBuf,
    /// Compute path length and min-cut exactly instead of by sampling.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    samples_per_stratum: Option<usize>,
    #[arg(long)]
    strata: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report relative error by sample size for these candidates.
    #[arg(long, value_delimiter = ',')]
    calibrate: Option<Vec<usize>>,
    #[arg(long, default_value_t = 5)]
    calibration_repeats: usize,
    /// Report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare sampled estimates against exact values (10% tolerance).
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct ProjectArgs {
    /// CSV with project,article,timestamp,old_grade,new_grade,revisions.
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated grade labels, lowest first.
    #[arg(long, value_delimiter = ',')]
    grades: Option<Vec<String>>,
    /// First grade counted toward performance.
    #[arg(long)]
    status_grade: Option<String>,
    /// Check the efficiency axioms on every project and grade.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct RegressArgs {
    /// Sweep results CSV.
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check coefficient signs and exit nonzero on mismatch.
    #[arg(long)]
    verify: bool,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    preset: Option<Preset>,
    sweep: Option<toml::Table>,
    graph: GraphConfig,
    project: ProjectConfig,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct GraphConfig {
    exact: Option<bool>,
    samples_per_stratum: Option<usize>,
    strata: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct ProjectConfig {
    grades: Option<Vec<String>>,
    status_grade: Option<String>,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn load_config(path: Option<&Path>) -> AnyResult<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?)
        }
    }
}

/// Preset, then the config file's `[sweep]` table, then flags.
fn base_spec(cli_preset: Option<Preset>, cfg: &ConfigFile) -> AnyResult<SweepSpec> {
    let preset = cli_preset.or(cfg.preset).unwrap_or(Preset::Paper);
    let spec = SweepSpec::preset(preset);
    let Some(over) = &cfg.sweep else {
        return Ok(spec);
    };
    let mut table = toml::Table::try_from(&spec)?;
    for (k, v) in over {
        table.insert(k.clone(), v.clone());
    }
    Ok(table.try_into().map_err(|e| format!("[sweep]: {e}"))?)
}

fn print_checks(checks: &[Check]) -> bool {
    for c in checks {
        println!("{}", c.line());
    }
    checks.iter().all(|c| c.passed)
}

fn out_writer(path: Option<&Path>) -> AnyResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(args: SimulateArgs, mut spec: SweepSpec) -> AnyResult<bool> {
    args.model.apply(&mut spec);
    spec.strategies = vec![args.strategy];
    spec.rewire = vec![args.rewire];
    spec.trials = 1;
    let mut trial = spec.trial_spec(0, 0, 0);
    trial.seed = args.seed;
    let result = run_trial(&trial)?;
    if let Some(p) = &args.trajectory {
        result.trajectory.write_csv(BufWriter::new(File::create(p)?))?;
    }
    if let Some(p) = &args.edges {
        let model = collab_core::NkModel::generate(trial.n, trial.k, trial.seed)?;
        let mut rng = collab_core::seed::rng_for(trial.seed, collab_core::seed::Stream::Rewire);
        collab_core::ConcernNetwork::generate(&model, trial.rewire, &mut rng)?.save_edge_list(p)?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&result)?);
    } else {
        println!(
            "{} n={} k={} p={} seed={}: performance {:.4}, efficiency {:.4} (converged at {}), mean degree {:.2}, path length {:.4}",
            trial.strategy.kind,
            trial.n,
            trial.k,
            trial.rewire.p,
            trial.seed,
            result.performance,
            result.efficiency,
            result.converged_at,
            result.network.mean_degree,
            result.network.path_length
        );
    }
    Ok(true)
}

fn report_progress(done: usize, total: usize) {
    if done % 50 == 0 || done == total {
        eprintln!("  {done}/{total} trials");
    }
}

fn sweep(args: SweepArgs, mut spec: SweepSpec) -> AnyResult<bool> {
    args.model.apply(&mut spec);
    if let Some(v) = args.trials {
        spec.trials = v;
    }
    if let Some(v) = args.rewire {
        spec.rewire = v;
    }
    if let Some(v) = args.strategies {
        spec.strategies = v;
    }
    if let Some(v) = args.seed {
        spec.master_seed = v;
    }
    spec.paired |= args.paired;
    spec.validate()?;

    let checkpoint = args
        .checkpoint
        .unwrap_or_else(|| args.out.with_extension("partial.csv"));
    if !args.quiet {
        eprintln!(
            "sweep: {} trials (n={}, k={}, {} iterations), checkpoint {}",
            spec.total_trials(),
            spec.n,
            spec.k,
            spec.iterations,
            checkpoint.display()
        );
    }
    let opts = SweepOptions {
        checkpoint: Some(checkpoint),
        trajectory_dir: args.trajectories,
        progress: (!args.quiet).then_some(report_progress as fn(usize, usize)),
    };
    let rows = run_sweep(&spec, &opts)?;
    save_rows(&rows, &args.out)?;

    println!("strategy  trials  performance        efficiency         converged_at   (p = {})", args.summary_p);
    for s in summarize(&rows, args.summary_p) {
        let fmt = |m: experiment::MeanSe, d: usize| match m.se {
            Some(se) => format!("{:.d$} ± {:.d$}", m.mean, se),
            None => format!("{:.d$}", m.mean),
        };
        println!(
            "{:<9} {:>6}  {:<18} {:<18} {}",
            s.strategy.name(),
            s.trials,
            fmt(s.performance, 4),
            fmt(s.efficiency, 4),
            fmt(s.converged_at, 1)
        );
    }
    if let Some(net) = experiment::network_summary(&rows) {
        println!(
            "networks: mean degree {:.2} (sd {:.2}), path length {:.4} (sd {:.4})",
            net.mean_degree, net.sd_degree, net.mean_path_length, net.sd_path_length
        );
    }
    let table = regression_table(&rows);
    if spec.rewire.len() > 1 {
        print_regression(&table);
    }
    if let Some(p) = &args.regression_out {
        experiment::write_regression_csv(&table, BufWriter::new(File::create(p)?))?;
    }
    if args.verify {
        return Ok(print_checks(&verify_sweep(&spec, &rows, args.determinism_sample)?));
    }
    Ok(true)
}

fn print_regression(table: &[(StrategyKind, experiment::Outcome, collab_core::Result<experiment::RegressionResult>)]) {
    println!("degree regression (standardized):");
    for (s, o, r) in table {
        match r {
            Ok(r) => println!("  {:<8} {:<12} {:+.4}  p = {:.3e}  n = {}", s.name(), o.to_string(), r.fit.slope, r.fit.p_value, r.fit.n),
            Err(e) => println!("  {:<8} {:<12} undefined ({e})", s.name(), o.to_string()),
        }
    }
}

fn graph_metrics(args: GraphArgs, cfg: &GraphConfig) -> AnyResult<bool> {
    let labeled = DirectedGraph::read_edge_list(BufReader::new(File::open(&args.input)?))?;
    let g = &labeled.graph;
    eprintln!(
        "{}: {} nodes, {} edges ({} self-loops and {} duplicates dropped)",
        args.input.display(),
        g.node_count(),
        g.edge_count(),
        labeled.stats.self_loops_dropped,
        labeled.stats.duplicates_dropped
    );
    let mut plan = SamplingPlan::default();
    if let Some(v) = args.samples_per_stratum.or(cfg.samples_per_stratum) {
        plan.samples_per_stratum = v;
    }
    if let Some(v) = args.strata.or(cfg.strata) {
        plan.strata = v;
    }
    if let Some(v) = args.seed.or(cfg.seed) {
        plan.seed = v;
    }
    let exact = args.exact || cfg.exact.unwrap_or(false);
    let mode = if exact { Estimation::Exact } else { Estimation::Sampled(plan) };
    let report = graph_report(g, mode, mode)?;

    let mut out = csv::Writer::from_writer(out_writer(args.out.as_deref())?);
    out.serialize(&report)?;
    out.flush()?;
    drop(out);

    if let Some(candidates) = &args.calibrate {
        for metric in [CalibratedMetric::PathLength, CalibratedMetric::MinCut] {
            let cal = calibrate_sample_size(g, metric, candidates, args.calibration_repeats, 0.10, plan.seed)?;
            eprintln!("calibration {metric:?}: exact {:.4}", cal.exact);
            for p in &cal.curve {
                eprintln!(
                    "  {:>4} per stratum: mean rel. error {:.4}, max {:.4}",
                    p.samples_per_stratum, p.mean_relative_error, p.max_relative_error
                );
            }
            match cal.recommended {
                Some(m) => eprintln!("  recommended: {m} per stratum"),
                None => eprintln!("  no candidate reached 10% error"),
            }
        }
    }

    if args.verify {
        let exact_report = if exact { report.clone() } else { graph_report(g, Estimation::Exact, Estimation::Exact)? };
        let sampled = if exact { graph_report(g, Estimation::Sampled(plan), Estimation::Sampled(plan))? } else { report };
        let rel = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => Some((a - b).abs() / b.abs()),
            _ => None,
        };
        let path_err = rel(sampled.mean_path_length, exact_report.mean_path_length);
        let cut_err = rel(sampled.mean_min_cut, exact_report.mean_min_cut);
        let ok = |e: Option<f64>| e.is_some_and(|e| e <= 0.10);
        let checks = vec![
            Check::new(6, "sampled path length vs exact", ok(path_err), format!("relative error {path_err:?}")),
            Check::new(6, "sampled min-cut vs exact", ok(cut_err), format!("relative error {cut_err:?}")),
        ];
        return Ok(print_checks(&checks));
    }
    Ok(true)
}

fn grade_scale(args: &ProjectArgs, cfg: &ProjectConfig) -> AnyResult<GradeScale> {
    let grades = args.grades.clone().or_else(|| cfg.grades.clone());
    let status = args.status_grade.clone().or_else(|| cfg.status_grade.clone());
    Ok(match (grades, status) {
        (None, None) => GradeScale::default(),
        (g, s) => {
            let g = g.unwrap_or_else(|| GradeScale::default().labels().to_vec());
            let refs: Vec<&str> = g.iter().map(String::as_str).collect();
            GradeScale::new(&refs, s.as_deref().unwrap_or("GA"))?
        }
    })
}

fn project_metrics(args: ProjectArgs, cfg: &ProjectConfig) -> AnyResult<bool> {
    let scale = grade_scale(&args, cfg)?;
    let log = TransitionLog::read_csv(BufReader::new(File::open(&args.input)?), &scale)?;
    if let Err(e) = log.check_ordering() {
        eprintln!("warning: {e}");
    }
    let stats = project_stats(&log, &scale)?;
    write_stats_csv(&stats, out_writer(args.out.as_deref())?)?;

    if args.verify {
        let mut checked = 0;
        let mut failures = Vec::new();
        for p in log.projects() {
            for g in scale.reported_grades() {
                match axioms_check(&log, p, g, &scale) {
                    Ok(r) => {
                        checked += 1;
                        if !r.all_hold() {
                            failures.push(format!("{p}/{g}: {r:?}"));
                        }
                    }
                    Err(Error::NoTransitions(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
        let check = Check::new(
            7,
            "efficiency axioms",
            failures.is_empty(),
            format!("{checked} project/grade cells checked; failures: {failures:?}"),
        );
        return Ok(print_checks(&[check]));
    }
    Ok(true)
}

fn regress(args: RegressArgs) -> AnyResult<bool> {
    let rows = read_rows(&args.input)?;
    let table = regression_table(&rows);
    print_regression(&table);
    if let Some(p) = &args.out {
        experiment::write_regression_csv(&table, BufWriter::new(File::create(p)?))?;
    }
    if args.verify {
        return Ok(print_checks(&[experiment::check_regression_signs(&rows)?]));
    }
    Ok(true)
}

fn run(cli: Cli) -> AnyResult<bool> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => simulate(a, base_spec(cli.preset, &cfg)?),
        Command::Sweep(a) => sweep(a, base_spec(cli.preset, &cfg)?),
        Command::GraphMetrics(a) => graph_metrics(a, &cfg.graph),
        Command::ProjectMetrics(a) => project_metrics(a, &cfg.project),
        Command::Regress(a) => regress(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more acceptance checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
