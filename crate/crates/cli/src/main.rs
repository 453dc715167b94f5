//! `evfuse` command-line entry point.
//!
//! Exit codes: 0 on success, 1 on data or runtime errors, 2 on usage errors.

mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use evfuse::association::{
    AssociationProblem, ConflictParams, CountPrior, MembershipProfile, PartitionReport, SearchParams, Sensor,
};
use evfuse::cluster::{two_stage_cluster, Linkage, StageOrder, Stop, TwoStageParams};
use evfuse::geo::{coast_density, daily_counts, density_grid, Coastline, ColorScale, DailyCategory};
use evfuse::report::{
    filter_reports, parse_reports, parse_timestamp, write_reports, FilterSpec, GridSpec, ObservationReport,
    QualityCategory, ReportFormat, TimeBinSpec, TimeWindow,
};
use evfuse::rules::{evolve, predict, rules_from_records, rules_to_records, EventSequence, GaParams, RuleRecord};
use evfuse::simulator::{example_planted_rule, score_prediction, simulate, ScenarioConfig};
use evfuse::stats::{interarrival_test, uniformity_test, weekday_rate_test, Calendar};

use output::Run;

#[derive(Debug, Parser)]
#[command(name = "evfuse", version, about = "Evidential association, rule learning and density analysis of observation reports")]
struct Cli {
    /// Random seed (overrides any seed in --config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with subcommand parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Format for report and table outputs.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a report file and convert it to the chosen format.
    Ingest(IngestArgs),
    /// Generate a labeled synthetic scenario.
    Simulate(SimulateArgs),
    /// Partition reports by minimizing metaconflict.
    Associate(AssociateArgs),
    /// Learn prediction rules from event sequences.
    Learn(LearnArgs),
    /// Apply learned rules to sequences.
    Predict(PredictArgs),
    /// Hypothesis tests on report times.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Two-stage hierarchical clustering.
    Cluster(ClusterArgs),
    /// Density tables and figures.
    #[command(subcommand)]
    Density(DensityCommand),
}

#[derive(Debug, Args, Serialize)]
struct ReportFilter {
    /// Quality categories to keep (comma separated, or `all`). Defaults to cat1-cat3.
    #[arg(long, value_delimiter = ',')]
    quality: Vec<String>,
    /// Keep reports at or after this instant.
    #[arg(long)]
    from: Option<String>,
    /// Keep reports before this instant.
    #[arg(long)]
    to: Option<String>,
}

impl ReportFilter {
    fn spec(&self, default_analysis: bool) -> Result<FilterSpec> {
        let mut spec = if default_analysis {
            FilterSpec::default_analysis()
        } else {
            FilterSpec::default()
        };
        if self.quality.iter().any(|q| q == "all") {
            spec.qualities = None;
        } else if !self.quality.is_empty() {
            let set = self
                .quality
                .iter()
                .map(|q| q.parse::<QualityCategory>().map_err(|e| anyhow!(e)))
                .collect::<Result<BTreeSet<_>>>()?;
            spec.qualities = Some(set);
        }
        if self.from.is_some() || self.to.is_some() {
            let from = self.from.as_deref().map(timestamp).transpose()?.unwrap_or(i64::MIN);
            let to = self.to.as_deref().map(timestamp).transpose()?.unwrap_or(i64::MAX);
            spec.time_window = Some(TimeWindow::new(from, to));
        }
        Ok(spec)
    }
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[arg(long)]
    reports: PathBuf,
    #[command(flatten)]
    filter: ReportFilter,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Number of targets (overrides the config).
    #[arg(long)]
    targets: Option<usize>,
    /// Number of event sequences to generate (overrides the config).
    #[arg(long)]
    sequences: Option<usize>,
    /// Plant the built-in example rule in the sequences.
    #[arg(long)]
    plant: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
enum PriorSpec {
    Geometric { q: f64, n_max: usize },
    Uniform { n_max: usize },
    File { path: PathBuf },
}

const DEFAULT_PRIOR_N_MAX: usize = 10;

fn parse_prior(s: &str) -> Result<PriorSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |v: &str| v.parse::<usize>().map_err(|_| format!("bad count `{v}` in prior `{s}`"));
    match parts.as_slice() {
        ["geometric", q] | ["geometric", q, _] => {
            let q: f64 = q.parse().map_err(|_| format!("bad ratio `{q}` in prior `{s}`"))?;
            if !(q > 0.0 && q <= 1.0) {
                return Err(format!("geometric ratio {q} outside (0, 1]"));
            }
            let n_max = parts.get(2).map(|v| num(v)).transpose()?.unwrap_or(DEFAULT_PRIOR_N_MAX);
            if n_max == 0 {
                return Err("n_max must be at least 1".into());
            }
            Ok(PriorSpec::Geometric { q, n_max })
        }
        ["uniform", n] => match num(n)? {
            0 => Err("n_max must be at least 1".into()),
            n_max => Ok(PriorSpec::Uniform { n_max }),
        },
        _ if s.ends_with(".json") => Ok(PriorSpec::File { path: PathBuf::from(s) }),
        _ => Err(format!("expected geometric:q[:n_max], uniform:n_max or a .json file, got `{s}`")),
    }
}

#[derive(Debug, Args, Serialize)]
struct AssociateArgs {
    #[arg(long)]
    reports: PathBuf,
    #[arg(long)]
    sensors: Option<PathBuf>,
    /// Prior over the number of targets: `geometric:q[:n_max]`, `uniform:n_max` or a JSON file.
    #[arg(long, value_parser = parse_prior, default_value = "geometric:0.5")]
    prior: PriorSpec,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Discount pair conflicts by quality reliability.
    #[arg(long)]
    reliability: bool,
    #[command(flatten)]
    filter: ReportFilter,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct AssociateConfig {
    conflict: ConflictParams,
    search: SearchParams,
}

#[derive(Debug, Args, Serialize)]
struct LearnArgs {
    /// Training sequences (JSON array, continuations required).
    #[arg(long)]
    sequences: PathBuf,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct RuleConfig {
    grid: GridSpec,
    bins: TimeBinSpec,
    ga: GaParams,
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false, id = "current")]
struct PredictSource {
    /// Sequences to predict for (JSON array).
    #[arg(long)]
    sequences: Option<PathBuf>,
    /// Reports forming the current situation; the latest one anchors T0.
    #[arg(long)]
    reports: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    rules: PathBuf,
    #[command(flatten)]
    source: PredictSource,
    #[arg(long, default_value_t = 1)]
    top_k: usize,
}

#[derive(Debug, Subcommand)]
enum StatsCommand {
    /// Kolmogorov-Smirnov test of uniform report times over a period.
    Uniformity(UniformityArgs),
    /// Kolmogorov-Smirnov test of exponential inter-arrival times.
    Interarrival(StatsArgs),
    /// Exact binomial test of the weekend share.
    Weekday(WeekdayArgs),
}

#[derive(Debug, Args, Serialize)]
struct StatsArgs {
    #[arg(long)]
    reports: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    filter: ReportFilter,
}

#[derive(Debug, Args, Serialize)]
struct UniformityArgs {
    #[command(flatten)]
    common: StatsArgs,
}

#[derive(Debug, Args, Serialize)]
struct WeekdayArgs {
    #[command(flatten)]
    common: StatsArgs,
    /// Local time offset from UTC used to decide weekends.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    utc_offset_hours: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum LinkageArg {
    Ward,
    Complete,
    Single,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum OrderArg {
    SpaceThenTime,
    TimeThenSpace,
}

#[derive(Debug, Args, Serialize)]
struct ClusterArgs {
    #[arg(long)]
    reports: PathBuf,
    #[arg(long, value_enum, default_value = "space-then-time")]
    order: OrderArg,
    #[arg(long, value_enum, default_value = "ward")]
    linkage: LinkageArg,
    /// Cut the spatial stage into this many clusters.
    #[arg(long, conflicts_with = "space_height")]
    space_k: Option<usize>,
    /// Cut the spatial stage at this merge height (meters).
    #[arg(long)]
    space_height: Option<f64>,
    #[arg(long, conflicts_with = "time_height")]
    time_k: Option<usize>,
    /// Cut the temporal stage at this merge height (seconds).
    #[arg(long)]
    time_height: Option<f64>,
    #[command(flatten)]
    filter: ReportFilter,
}

#[derive(Debug, Subcommand)]
enum DensityCommand {
    /// Report density along a coastline.
    Coast(CoastArgs),
    /// Report counts per grid cell.
    Grid(GridArgs),
    /// Reports per day split by category.
    Daily(DailyArgs),
}

#[derive(Debug, Args, Serialize)]
struct CoastArgs {
    #[arg(long)]
    reports: PathBuf,
    /// Coastline vertices, CSV `x_m,y_m`.
    #[arg(long)]
    coastline: PathBuf,
    #[arg(long, default_value_t = 5000.0)]
    bin_width: f64,
    #[arg(long, default_value_t = 20000.0)]
    max_offset: f64,
    #[command(flatten)]
    filter: ReportFilter,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum ScaleArg {
    Linear,
    Log1p,
    Rank,
}

#[derive(Debug, Args, Serialize)]
struct GridArgs {
    #[arg(long)]
    reports: PathBuf,
    #[arg(long, value_enum, default_value = "log1p")]
    scale: ScaleArg,
    #[command(flatten)]
    filter: ReportFilter,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum ByArg {
    ObsType,
    Quality,
}

#[derive(Debug, Args, Serialize)]
struct DailyArgs {
    #[arg(long)]
    reports: PathBuf,
    #[arg(long, value_enum, default_value = "obs-type")]
    by: ByArg,
    #[command(flatten)]
    filter: ReportFilter,
}

fn timestamp(s: &str) -> Result<i64> {
    parse_timestamp(s).ok_or_else(|| anyhow!("bad timestamp `{s}` (expected RFC 3339 or YYYY-MM-DD)"))
}

fn format_for(path: &Path) -> ReportFormat {
    ReportFormat::from_path(path).unwrap_or(ReportFormat::Json)
}

fn load_reports(run: &mut Run, path: &Path, filter: &ReportFilter, default_analysis: bool) -> Result<Vec<ObservationReport>> {
    let text = run.read_input(path)?;
    let reports = parse_reports(&text, format_for(path)).with_context(|| format!("in {}", path.display()))?;
    Ok(filter_reports(&reports, &filter.spec(default_analysis)?))
}

fn load_json<T: for<'de> Deserialize<'de>>(run: &mut Run, path: &Path) -> Result<T> {
    let text = run.read_input(path)?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(run: &mut Run, config: Option<&Path>) -> Result<T> {
    config.map_or_else(|| Ok(T::default()), |p| load_json(run, p))
}

struct Globals {
    seed: Option<u64>,
    config: Option<PathBuf>,
    format: Option<Format>,
}

impl Globals {
    fn table_format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

fn run_ingest(run: &mut Run, g: &Globals, a: &IngestArgs) -> Result<()> {
    let reports = load_reports(run, &a.reports, &a.filter, false)?;
    run.params(a);
    match g.format.unwrap_or(Format::Json) {
        Format::Json => run.text("reports.json", write_reports(&reports, ReportFormat::Json)),
        Format::Csv => run.text("reports.csv", write_reports(&reports, ReportFormat::Csv)),
    }
    eprintln!("{} reports", reports.len());
    Ok(())
}

fn run_simulate(run: &mut Run, g: &Globals, a: &SimulateArgs) -> Result<()> {
    let mut cfg: ScenarioConfig = load_config(run, g.config.as_deref())?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(n) = a.targets {
        cfg.n_targets = n;
    }
    if let Some(n) = a.sequences {
        cfg.sequences.count = n;
    }
    if a.plant {
        cfg.sequences.planted_rule = Some(example_planted_rule());
    }
    let truth = simulate(&cfg)?;
    run.params(&cfg);
    run.seed(cfg.seed);
    let reports = truth.reports();
    match g.format.unwrap_or(Format::Json) {
        Format::Json => run.text("reports.json", write_reports(&reports, ReportFormat::Json)),
        Format::Csv => run.text("reports.csv", write_reports(&reports, ReportFormat::Csv)),
    }
    run.json("sensors.json", &truth.sensors);
    run.json("sequences.json", &truth.sequences);
    run.json("ground_truth.json", &truth);
    Ok(())
}

fn load_prior(run: &mut Run, spec: &PriorSpec) -> Result<CountPrior> {
    Ok(match spec {
        PriorSpec::Geometric { q, n_max } => CountPrior::geometric(*q, *n_max)?,
        PriorSpec::Uniform { n_max } => CountPrior::uniform(*n_max)?,
        PriorSpec::File { path } => {
            #[derive(Deserialize)]
            #[serde(untagged)]
            enum PriorFile {
                Wrapped { weights: BTreeMap<usize, f64> },
                Bare(BTreeMap<usize, f64>),
            }
            let weights = match load_json::<PriorFile>(run, path)? {
                PriorFile::Wrapped { weights } | PriorFile::Bare(weights) => weights,
            };
            CountPrior::new(weights)?
        }
    })
}

#[derive(Serialize)]
struct AssociateParams<'a> {
    args: &'a AssociateArgs,
    config: &'a AssociateConfig,
}

fn run_associate(run: &mut Run, g: &Globals, a: &AssociateArgs) -> Result<()> {
    let mut cfg: AssociateConfig = load_config(run, g.config.as_deref())?;
    if let Some(seed) = g.seed {
        cfg.search.seed = seed;
    }
    if let Some(r) = a.restarts {
        cfg.search.restarts = r;
    }
    if let Some(m) = a.max_iters {
        cfg.search.max_iters = m;
    }
    if a.reliability && cfg.conflict.reliability.is_none() {
        cfg.conflict.reliability = Some(Default::default());
    }
    let reports = load_reports(run, &a.reports, &a.filter, true)?;
    let sensors: Vec<Sensor> = match &a.sensors {
        Some(p) => load_json(run, p)?,
        None => Vec::new(),
    };
    let prior = load_prior(run, &a.prior)?;
    let problem = AssociationProblem::new(&reports, &cfg.conflict, &sensors, &prior)?;
    let best = problem.minimize(&cfg.search)?;
    let posterior = problem.posterior(&cfg.search)?;
    let memberships: Vec<MembershipProfile> = problem
        .ids()
        .iter()
        .map(|id| problem.membership(id, &best))
        .collect::<Result<_, _>>()?;
    run.params(&AssociateParams { args: a, config: &cfg });
    run.seed(cfg.search.seed);
    run.json("partition.json", &PartitionReport::new(&best, &posterior));
    run.json("membership.json", &memberships);
    eprintln!("{} reports in {} subsets, mcf {:.6}", reports.len(), best.n, best.ledger.mcf);
    Ok(())
}

#[derive(Serialize)]
struct LearnHistory {
    best_score_per_generation: Vec<f64>,
}

fn run_learn(run: &mut Run, g: &Globals, a: &LearnArgs) -> Result<()> {
    let mut cfg: RuleConfig = load_config(run, g.config.as_deref())?;
    if let Some(seed) = g.seed {
        cfg.ga.seed = seed;
    }
    if let Some(p) = a.population {
        cfg.ga.population = p;
    }
    if let Some(n) = a.generations {
        cfg.ga.generations = n;
    }
    let training: Vec<EventSequence> = load_json(run, &a.sequences)?;
    let evolution = evolve(&training, &cfg.grid, &cfg.bins, &cfg.ga)?;
    run.params(&cfg);
    run.seed(cfg.ga.seed);
    run.json("rules.json", &rules_to_records(&evolution.ranked));
    run.json(
        "learn_history.json",
        &LearnHistory {
            best_score_per_generation: evolution.best_history,
        },
    );
    if let Some((rule, stats)) = evolution.ranked.first() {
        eprintln!("best: {rule} (precision {:.3}, score {:.4})", stats.precision_laplace, stats.score);
    }
    Ok(())
}

#[derive(Serialize)]
struct SequencePredictions {
    sequence: usize,
    predictions: Vec<evfuse::rules::Prediction>,
}

fn run_predict(run: &mut Run, g: &Globals, a: &PredictArgs) -> Result<()> {
    let cfg: RuleConfig = load_config(run, g.config.as_deref())?;
    let records: Vec<RuleRecord> = load_json(run, &a.rules)?;
    let rules = rules_from_records(&records, &cfg.grid, &cfg.bins)?;
    let sequences: Vec<EventSequence> = match (&a.source.sequences, &a.source.reports) {
        (Some(p), _) => load_json(run, p)?,
        (None, Some(p)) => {
            let reports = load_reports(run, p, &ReportFilter::default_for_predict(), true)?;
            EventSequence::from_reports(&reports, &cfg.grid, &cfg.bins).into_iter().collect()
        }
        (None, None) => bail!("either --sequences or --reports is required"),
    };
    let mut out = Vec::with_capacity(sequences.len());
    for (i, s) in sequences.iter().enumerate() {
        out.push(SequencePredictions {
            sequence: i,
            predictions: predict(&rules, s, a.top_k)?,
        });
    }
    run.params(&(a, &cfg.grid, &cfg.bins));
    run.json("predictions.json", &out);
    if !sequences.is_empty() && sequences.iter().all(|s| s.continuation.is_some()) {
        let top: Vec<_> = out.iter().map(|p| p.predictions.first().and_then(|p| p.slot)).collect();
        run.json("prediction_score.json", &score_prediction(&top, &sequences, &cfg.grid, &cfg.bins)?);
    }
    Ok(())
}

impl ReportFilter {
    fn default_for_predict() -> Self {
        ReportFilter {
            quality: Vec::new(),
            from: None,
            to: None,
        }
    }
}

fn run_stats(run: &mut Run, cmd: &StatsCommand) -> Result<()> {
    let (name, common) = match cmd {
        StatsCommand::Uniformity(a) => ("uniformity", &a.common),
        StatsCommand::Interarrival(a) => ("interarrival", a),
        StatsCommand::Weekday(a) => ("weekday", &a.common),
    };
    let reports = load_reports(run, &common.reports, &common.filter, true)?;
    let times: Vec<i64> = reports.iter().map(|r| r.time).collect();
    let result = match cmd {
        StatsCommand::Uniformity(a) => {
            let f = &a.common.filter;
            let (Some(from), Some(to)) = (f.from.as_deref(), f.to.as_deref()) else {
                bail!("uniformity needs --from and --to to define the period");
            };
            uniformity_test(&times, TimeWindow::new(timestamp(from)?, timestamp(to)?), common.alpha)?
        }
        StatsCommand::Interarrival(_) => interarrival_test(&times, common.alpha)?,
        StatsCommand::Weekday(a) => {
            let calendar = Calendar {
                utc_offset_seconds: (a.utc_offset_hours * 3600.0).round() as i32,
            };
            weekday_rate_test(&times, &calendar, common.alpha)?
        }
    };
    match cmd {
        StatsCommand::Uniformity(a) => run.params(a),
        StatsCommand::Interarrival(a) => run.params(a),
        StatsCommand::Weekday(a) => run.params(a),
    }
    run.json(&format!("{name}.json"), &result);
    Ok(())
}

fn run_cluster(run: &mut Run, a: &ClusterArgs) -> Result<()> {
    let reports = load_reports(run, &a.reports, &a.filter, true)?;
    let defaults = TwoStageParams::default();
    let stop = |k: Option<usize>, h: Option<f64>, d: Stop| match (k, h) {
        (Some(k), _) => Stop::Clusters(k),
        (None, Some(h)) => Stop::Height(h),
        (None, None) => d,
    };
    let params = TwoStageParams {
        linkage: match a.linkage {
            LinkageArg::Ward => Linkage::Ward,
            LinkageArg::Complete => Linkage::Complete,
            LinkageArg::Single => Linkage::Single,
        },
        space_stop: stop(a.space_k, a.space_height, defaults.space_stop),
        time_stop: stop(a.time_k, a.time_height, defaults.time_stop),
    };
    let order = match a.order {
        OrderArg::SpaceThenTime => StageOrder::SpaceThenTime,
        OrderArg::TimeThenSpace => StageOrder::TimeThenSpace,
    };
    let report = two_stage_cluster(&reports, order, &params);
    run.params(&(a, &params));
    run.json("cluster.json", &report);
    run.text("assignments.csv", report.assignments_csv());
    Ok(())
}

fn run_density(run: &mut Run, g: &Globals, cmd: &DensityCommand) -> Result<()> {
    let table = g.table_format();
    match cmd {
        DensityCommand::Coast(a) => {
            let reports = load_reports(run, &a.reports, &a.filter, true)?;
            let coast = Coastline::from_csv(&run.read_input(&a.coastline)?)?;
            let series = coast_density(&reports, &coast, a.bin_width, a.max_offset)?;
            run.params(a);
            match table {
                Format::Csv => run.text("coast_density.csv", series.to_csv()),
                Format::Json => run.json("coast_density.json", &series),
            }
            run.text("coast_density.svg", series.to_svg());
            eprintln!("{} reports beyond {} m of the coastline", series.excluded, a.max_offset);
        }
        DensityCommand::Grid(a) => {
            let grid: GridSpec = load_config(run, g.config.as_deref())?;
            grid.validate().map_err(|e| anyhow!(e))?;
            let reports = load_reports(run, &a.reports, &a.filter, true)?;
            let scale = match a.scale {
                ScaleArg::Linear => ColorScale::Linear,
                ScaleArg::Log1p => ColorScale::Log1p,
                ScaleArg::Rank => ColorScale::Rank,
            };
            let map = density_grid(&reports, &grid, scale);
            run.params(&(a, &grid));
            match table {
                Format::Csv => run.text("density_grid.csv", map.to_csv()),
                Format::Json => run.json("density_grid.json", &map),
            }
            run.text("density_grid.svg", map.to_svg());
        }
        DensityCommand::Daily(a) => {
            let reports = load_reports(run, &a.reports, &a.filter, true)?;
            let by = match a.by {
                ByArg::ObsType => DailyCategory::ObsType,
                ByArg::Quality => DailyCategory::Quality,
            };
            let counts = daily_counts(&reports, by);
            run.params(a);
            match table {
                Format::Csv => run.text("daily_counts.csv", counts.to_csv()),
                Format::Json => run.json("daily_counts.json", &counts),
            }
            run.text("daily_counts.svg", counts.to_svg());
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let g = Globals {
        seed: cli.seed,
        config: cli.config,
        format: cli.format,
    };
    let name = match &cli.command {
        Command::Ingest(_) => "ingest",
        Command::Simulate(_) => "simulate",
        Command::Associate(_) => "associate",
        Command::Learn(_) => "learn",
        Command::Predict(_) => "predict",
        Command::Stats(StatsCommand::Uniformity(_)) => "stats uniformity",
        Command::Stats(StatsCommand::Interarrival(_)) => "stats interarrival",
        Command::Stats(StatsCommand::Weekday(_)) => "stats weekday",
        Command::Cluster(_) => "cluster",
        Command::Density(DensityCommand::Coast(_)) => "density coast",
        Command::Density(DensityCommand::Grid(_)) => "density grid",
        Command::Density(DensityCommand::Daily(_)) => "density daily",
    };
    let mut run = Run::new(name, &cli.out);
    match &cli.command {
        Command::Ingest(a) => run_ingest(&mut run, &g, a)?,
        Command::Simulate(a) => run_simulate(&mut run, &g, a)?,
        Command::Associate(a) => run_associate(&mut run, &g, a)?,
        Command::Learn(a) => run_learn(&mut run, &g, a)?,
        Command::Predict(a) => run_predict(&mut run, &g, a)?,
        Command::Stats(c) => run_stats(&mut run, c)?,
        Command::Cluster(a) => run_cluster(&mut run, a)?,
        Command::Density(c) => run_density(&mut run, &g, c)?,
    }
    run.commit()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
