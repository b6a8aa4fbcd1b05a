//! `navfidelity` command-line front end.
//!
//! Reports go to the file named by `--out`; diagnostics go to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use navfidelity::baseline::{evaluate_split, run_baseline, EdgeCountDistribution, EvalOptions};
use navfidelity::compose::{compose_dataset, dataset_stats, DatasetStats, JoinSpec};
use navfidelity::episodes::{load_episodes, load_predictions, write_episodes, Episode};
use navfidelity::fixtures::{make_fixture, write_fixture, FixtureKind, FixtureSpec};
use navfidelity::metrics::{MetricConfig, DEFAULT_THRESHOLD};
use navfidelity::oracle::cache_path;
use navfidelity::scene::graph_ids_of;
use navfidelity::{Exec, SceneSet};
use serde::Serialize;

const CONNECTIVITY_ENV: &str = "NAVFIDELITY_CONNECTIVITY_DIR";

#[derive(Parser, Debug)]
#[command(name = "navfidelity", version, about = "Instruction-fidelity evaluation for graph-based navigation")]
struct Cli {
    /// Worker threads for parallel stages (default: available parallelism).
    /// Outputs do not depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score predictions against reference episodes.
    Eval(EvalArgs),
    /// Join pairs of episodes into longer ones.
    Compose(ComposeArgs),
    /// Summarize an episode file.
    Stats(StatsArgs),
    /// Score uniformly random walks as a baseline.
    RandomBaseline(BaselineArgs),
    /// Write a synthetic graph and its episodes.
    Fixture(FixtureArgs),
    /// Precompute all-pairs distance caches.
    CacheDistances(CacheArgs),
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// Directory holding `<graph_id>_connectivity.json` files.
    #[arg(long, env = CONNECTIVITY_ENV)]
    connectivity: PathBuf,

    /// Directory for distance caches; reused when the graph is unchanged.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    /// Success radius in meters.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    success_threshold: f64,

    /// Path-coverage decay constant in meters (default: the success threshold).
    #[arg(long)]
    decay_threshold: Option<f64>,
}

impl ThresholdArgs {
    fn config(&self) -> Result<MetricConfig> {
        let decay = self.decay_threshold.unwrap_or(self.success_threshold);
        Ok(MetricConfig::with_decay(self.success_threshold, decay)?)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Reference episodes (JSON array).
    #[arg(long)]
    episodes: PathBuf,
    /// Predictions, one JSON object per line.
    #[arg(long)]
    predictions: PathBuf,
    /// Report file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Reject trajectories that are not walks along graph edges.
    #[arg(long)]
    strict: bool,
    /// Include per-instruction metrics in the JSON report.
    #[arg(long)]
    per_episode: bool,
    #[command(flatten)]
    scenes: SceneArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Args, Debug)]
struct ComposeArgs {
    /// Source episodes (JSON array).
    #[arg(long)]
    episodes: PathBuf,
    /// Composed episode file.
    #[arg(long)]
    out: PathBuf,
    /// Join two paths when the gap between them is below this many meters.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    join_threshold: f64,
    /// Also join each path with itself.
    #[arg(long)]
    allow_self_join: bool,
    #[command(flatten)]
    scenes: SceneArgs,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Episodes to summarize.
    #[arg(long)]
    episodes: PathBuf,
    /// Report file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    scenes: SceneArgs,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    /// Episodes the random walks are scored against.
    #[arg(long)]
    episodes: PathBuf,
    /// Episodes defining the walk-length distribution (default: --episodes).
    #[arg(long)]
    length_episodes: Option<PathBuf>,
    /// Report file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random walks.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    scenes: SceneArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    #[arg(value_enum)]
    kind: FixtureKindArg,
    /// Node count (line, random) or side length (grid) or lane length (corridors).
    #[arg(default_value_t = 5)]
    size: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Distance between neighboring nodes in meters.
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FixtureKindArg {
    Line,
    Grid,
    Corridors,
    Random,
}

impl From<FixtureKindArg> for FixtureKind {
    fn from(k: FixtureKindArg) -> Self {
        match k {
            FixtureKindArg::Line => FixtureKind::Line,
            FixtureKindArg::Grid => FixtureKind::Grid,
            FixtureKindArg::Corridors => FixtureKind::Corridors,
            FixtureKindArg::Random => FixtureKind::Random,
        }
    }
}

#[derive(Args, Debug)]
struct CacheArgs {
    /// Graph ids to cache; taken from --episodes when omitted.
    #[arg(long = "graph", value_name = "GRAPH_ID")]
    graphs: Vec<String>,
    /// Episode file whose graphs are cached.
    #[arg(long)]
    episodes: Option<PathBuf>,
    /// Optional JSON summary of the written caches.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory holding `<graph_id>_connectivity.json` files.
    #[arg(long, env = CONNECTIVITY_ENV)]
    connectivity: PathBuf,
    /// Directory the caches are written to.
    #[arg(long)]
    cache_dir: PathBuf,
}

fn write_report(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_scenes(args: &SceneArgs, episodes: &[Episode]) -> Result<SceneSet> {
    let ids = graph_ids_of(episodes);
    let (scenes, reports) = SceneSet::load(&args.connectivity, &ids, args.cache_dir.as_deref(), Exec::default())?;
    for (id, r) in reports {
        log::info!(
            "{id}: {} records, {} excluded, {} asymmetric links, {} zero-length links skipped",
            r.records,
            r.excluded_nodes,
            r.asymmetric_links,
            r.degenerate_links_skipped
        );
    }
    Ok(scenes)
}

fn label_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let cfg = a.thresholds.config()?;
    let episodes = load_episodes(&a.episodes)?;
    let predictions = load_predictions(&a.predictions)?;
    let scenes = load_scenes(&a.scenes, &episodes)?;
    let opts = EvalOptions {
        strict: a.strict,
        per_episode: a.per_episode,
    };
    let report = evaluate_split(&episodes, &predictions, &scenes, &cfg, opts, Exec::default())?;
    if !report.unmatched_predictions.is_empty() {
        log::warn!("{} predictions match no episode", report.unmatched_predictions.len());
    }
    if report.missing_predictions > 0 {
        log::warn!("{} instructions have no prediction", report.missing_predictions);
    }
    let text = match a.format {
        Format::Json => report.to_json(),
        Format::Table => report.render_table(&label_of(&a.predictions)),
    };
    write_report(&a.out, &text)
}

fn cmd_compose(a: &ComposeArgs) -> Result<()> {
    let mut spec = JoinSpec::new(a.join_threshold)?;
    spec.allow_self_join = a.allow_self_join;
    let episodes = load_episodes(&a.episodes)?;
    let scenes = load_scenes(&a.scenes, &episodes)?;
    let out = compose_dataset(&episodes, &scenes, &spec, Exec::default())?;
    if out.skipped_pairs > 0 {
        log::warn!("{} pairs skipped because their endpoints are disconnected", out.skipped_pairs);
    }
    log::info!("composed {} episodes", out.episodes.len());
    write_episodes(&out.episodes, &a.out)?;
    Ok(())
}

fn stats_table(label: &str, s: &DatasetStats) -> String {
    format!(
        "{:<24} {:>8} {:>10} {:>10}\n{:<24} {:>8} {:>10.2} {:>10.2}\n",
        "", "samples", "PL(R)", "d(r1,rN)", label, s.sample_count, s.mean_reference_length, s.mean_direct_distance
    )
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let episodes = load_episodes(&a.episodes)?;
    let scenes = load_scenes(&a.scenes, &episodes)?;
    let stats = dataset_stats(&episodes, &scenes)?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&stats)? + "\n",
        Format::Table => stats_table(&label_of(&a.episodes), &stats),
    };
    write_report(&a.out, &text)
}

fn cmd_random_baseline(a: &BaselineArgs) -> Result<()> {
    let cfg = a.thresholds.config()?;
    let episodes = load_episodes(&a.episodes)?;
    let dist = match &a.length_episodes {
        Some(p) => EdgeCountDistribution::from_episodes(&load_episodes(p)?)?,
        None => EdgeCountDistribution::from_episodes(&episodes)?,
    };
    let scenes = load_scenes(&a.scenes, &episodes)?;
    let report = run_baseline(&episodes, &scenes, &dist, a.samples, a.seed, &cfg, Exec::default())?;
    let text = match a.format {
        Format::Json => report.to_json(),
        Format::Table => report.render_table("random"),
    };
    write_report(&a.out, &text)
}

fn cmd_fixture(a: &FixtureArgs) -> Result<()> {
    let spec = FixtureSpec {
        kind: a.kind.into(),
        size: a.size,
        spacing: a.spacing,
        seed: a.seed,
    };
    let fixture = make_fixture(&spec)?;
    let files = write_fixture(&fixture, &a.out)?;
    log::info!("wrote {} and {}", files.connectivity.display(), files.episodes.display());
    Ok(())
}

#[derive(Serialize)]
struct CacheEntry {
    graph_id: String,
    nodes: usize,
    edges: usize,
    cache: PathBuf,
}

fn cmd_cache(a: &CacheArgs) -> Result<()> {
    let mut ids: std::collections::BTreeSet<String> = a.graphs.iter().cloned().collect();
    if let Some(p) = &a.episodes {
        ids.extend(graph_ids_of(&load_episodes(p)?));
    }
    if ids.is_empty() {
        bail!("no graphs given; pass --graph or --episodes");
    }
    fs::create_dir_all(&a.cache_dir).with_context(|| format!("creating {}", a.cache_dir.display()))?;
    let (scenes, _) = SceneSet::load(&a.connectivity, &ids, Some(&a.cache_dir), Exec::default())?;
    let entries: Vec<CacheEntry> = scenes
        .iter()
        .map(|(id, s)| CacheEntry {
            graph_id: id.to_string(),
            nodes: s.graph.len(),
            edges: s.graph.edge_count(),
            cache: cache_path(&a.cache_dir, id),
        })
        .collect();
    for e in &entries {
        log::info!("{}: {} nodes -> {}", e.graph_id, e.nodes, e.cache.display());
    }
    if let Some(out) = &a.out {
        write_report(out, &(serde_json::to_string_pretty(&entries)? + "\n"))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Compose(a) => cmd_compose(a),
        Command::Stats(a) => cmd_stats(a),
        Command::RandomBaseline(a) => cmd_random_baseline(a),
        Command::Fixture(a) => cmd_fixture(a),
        Command::CacheDistances(a) => cmd_cache(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
