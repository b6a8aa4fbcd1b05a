//! Random-walk baseline and batch evaluation into aggregate reports.
//!
//! The walk length is drawn from the edge-count histogram of a training
//! split; each step moves to a uniformly chosen neighbor. Every sample `i`
//! draws from its own ChaCha8 stream `(seed, i)`, and results are reduced in
//! fixed-size chunks in sample order, so reports are identical for any
//! worker count.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::episodes::{Episode, Prediction};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{validate_route, NavGraph, NodeIdx, Route};
use crate::metrics::{evaluate, MetricConfig, MetricReport};
use crate::scene::{Scene, SceneSet};
use crate::summary::MeanAccumulator;

pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), stream = sample index";
pub const PAIRING_POLICY: &str =
    "episode drawn uniformly with replacement over instruction samples; walk starts at the reference start node";

const CHUNK: usize = 1024;

/// Categorical distribution over reference-path edge counts.
#[derive(Debug, Clone)]
pub struct EdgeCountDistribution {
    support: Vec<usize>,
    weights: Vec<u64>,
    index: WeightedIndex<u64>,
}

impl EdgeCountDistribution {
    /// Histogram of `|R| - 1` with one count per instruction sample.
    pub fn from_episodes(episodes: &[Episode]) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for ep in episodes {
            *counts.entry(ep.reference.len().saturating_sub(1)).or_insert(0) +=
                ep.instructions.len() as u64;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: BTreeMap<usize, u64>) -> Result<Self> {
        let (support, weights): (Vec<_>, Vec<_>) = counts.into_iter().filter(|&(_, w)| w > 0).unzip();
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::NothingToEvaluate(format!("empty edge-count histogram: {e}")))?;
        Ok(EdgeCountDistribution {
            support,
            weights,
            index,
        })
    }

    /// Always yields `edges`.
    pub fn fixed(edges: usize) -> Self {
        Self::from_counts(BTreeMap::from([(edges, 1)])).expect("nonempty")
    }

    pub fn probability(&self, edges: usize) -> f64 {
        let total: u64 = self.weights.iter().sum();
        match self.support.binary_search(&edges) {
            Ok(i) => self.weights[i] as f64 / total as f64,
            Err(_) => 0.0,
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.support[self.index.sample(rng)]
    }
}

/// Walks `edges` uniform random steps from `start`; stops early at an isolated node.
pub fn random_walk<R: Rng + ?Sized>(g: &NavGraph, start: NodeIdx, edges: usize, rng: &mut R) -> Route {
    let mut nodes = Vec::with_capacity(edges + 1);
    nodes.push(start);
    let mut cur = start;
    for _ in 0..edges {
        let nb = g.neighbors(cur);
        if nb.is_empty() {
            break;
        }
        cur = nb[rng.random_range(0..nb.len())].0;
        nodes.push(cur);
    }
    Route::new(g.graph_id(), nodes)
}

pub fn sample_random_trajectory(
    g: &NavGraph,
    start: NodeIdx,
    dist: &EdgeCountDistribution,
    seed: u64,
) -> Route {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = dist.sample(&mut rng);
    random_walk(g, start, k, &mut rng)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MetricMeans {
    pub pl: f64,
    pub ne: f64,
    pub one: f64,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
    pub sed: f64,
    pub pc: f64,
    pub ls: f64,
    pub cls: f64,
}

/// Table-formatted values: rates in percent to 1 decimal, lengths in meters to 2 decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub pl: f64,
    pub ne: f64,
    pub sr: f64,
    pub spl: f64,
    pub cls: f64,
    pub osr: f64,
    pub sed: f64,
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

impl TableRow {
    fn from_means(m: &MetricMeans) -> Self {
        TableRow {
            pl: round_to(m.pl, 2),
            ne: round_to(m.ne, 2),
            sr: round_to(100.0 * m.sr, 1),
            spl: round_to(100.0 * m.spl, 1),
            cls: round_to(100.0 * m.cls, 1),
            osr: round_to(100.0 * m.osr, 1),
            sed: round_to(100.0 * m.sed, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct MetricAccumulator {
    fields: [MeanAccumulator; 10],
}

impl MetricAccumulator {
    fn add(&mut self, r: &MetricReport) {
        let vals = [r.pl, r.ne, r.one, r.sr, r.osr, r.spl, r.sed, r.pc, r.ls, r.cls];
        for (acc, v) in self.fields.iter_mut().zip(vals) {
            acc.add(v);
        }
    }

    fn merge(&mut self, other: &MetricAccumulator) {
        for (a, b) in self.fields.iter_mut().zip(&other.fields) {
            a.merge(b);
        }
    }

    fn count(&self) -> u64 {
        self.fields[0].count()
    }

    fn collect(&self, f: impl Fn(&MeanAccumulator) -> f64) -> MetricMeans {
        let v: Vec<f64> = self.fields.iter().map(f).collect();
        MetricMeans {
            pl: v[0],
            ne: v[1],
            one: v[2],
            sr: v[3],
            osr: v[4],
            spl: v[5],
            sed: v[6],
            pc: v[7],
            ls: v[8],
            cls: v[9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub instr_id: String,
    pub graph_id: String,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    /// `random_baseline` or `evaluation`.
    pub kind: String,
    pub count: u64,
    /// Fraction of instruction samples that were evaluated.
    pub coverage: f64,
    pub means: MetricMeans,
    pub std_errors: MetricMeans,
    pub table: TableRow,
    pub config: MetricConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<String>,
    pub unmatched_predictions: Vec<String>,
    pub missing_predictions: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub episodes: Vec<EpisodeResult>,
}

impl AggregateReport {
    fn from_accumulator(kind: &str, acc: &MetricAccumulator, cfg: &MetricConfig) -> Self {
        let means = acc.collect(MeanAccumulator::mean);
        AggregateReport {
            kind: kind.to_string(),
            count: acc.count(),
            coverage: 1.0,
            means,
            std_errors: acc.collect(MeanAccumulator::std_error),
            table: TableRow::from_means(&means),
            config: *cfg,
            seed: None,
            rng: None,
            pairing: None,
            unmatched_predictions: Vec::new(),
            missing_predictions: 0,
            episodes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned text table in the column order PL, NE, SR, SPL, CLS.
    pub fn render_table(&self, label: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>7} {:>7} {:>6} {:>6} {:>6}",
            "", "PL", "NE", "SR", "SPL", "CLS"
        );
        let t = &self.table;
        let _ = writeln!(
            out,
            "{:<24} {:>7.2} {:>7.2} {:>6.1} {:>6.1} {:>6.1}",
            label, t.pl, t.ne, t.sr, t.spl, t.cls
        );
        out
    }
}

struct ResolvedSample<'a> {
    scene: &'a Scene,
    reference: Route,
}

fn resolve_references<'a>(episodes: &[Episode], scenes: &'a SceneSet) -> Result<Vec<ResolvedSample<'a>>> {
    episodes
        .iter()
        .map(|ep| {
            let scene = scenes.get(&ep.graph_id)?;
            let reference = scene.graph.resolve(&ep.reference_path())?;
            Ok(ResolvedSample { scene, reference })
        })
        .collect()
}

/// Runs `n_samples` random walks, each paired with an episode drawn
/// uniformly over instruction samples, and averages all metrics.
pub fn run_baseline(
    episodes: &[Episode],
    scenes: &SceneSet,
    dist: &EdgeCountDistribution,
    n_samples: usize,
    seed: u64,
    cfg: &MetricConfig,
    exec: Exec,
) -> Result<AggregateReport> {
    if n_samples == 0 {
        return Err(Error::NothingToEvaluate("zero samples requested".into()));
    }
    let resolved = resolve_references(episodes, scenes)?;
    let by_sample: Vec<usize> = episodes
        .iter()
        .enumerate()
        .flat_map(|(i, ep)| std::iter::repeat_n(i, ep.instructions.len()))
        .collect();
    if by_sample.is_empty() {
        return Err(Error::NothingToEvaluate("no instruction samples".into()));
    }
    let chunks = n_samples.div_ceil(CHUNK);
    let partials = exec.map_range(chunks, |c| -> Result<MetricAccumulator> {
        let mut acc = MetricAccumulator::default();
        for i in (c * CHUNK)..((c + 1) * CHUNK).min(n_samples) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let s = &resolved[by_sample[rng.random_range(0..by_sample.len())]];
            let k = dist.sample(&mut rng);
            let start = s.reference.first().expect("nonempty");
            let walk = random_walk(&s.scene.graph, start, k, &mut rng);
            acc.add(&evaluate(&walk, &s.reference, &s.scene.oracle, cfg)?);
        }
        Ok(acc)
    });
    let mut total = MetricAccumulator::default();
    for p in partials {
        total.merge(&p?);
    }
    let mut report = AggregateReport::from_accumulator("random_baseline", &total, cfg);
    report.seed = Some(seed);
    report.rng = Some(RNG_ALGORITHM.to_string());
    report.pairing = Some(PAIRING_POLICY.to_string());
    Ok(report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Reject trajectories that are not navigable walks on their graph.
    pub strict: bool,
    /// Include per-instruction metrics in the report.
    pub per_episode: bool,
}

/// Scores external predictions against their episodes.
///
/// Predictions whose `instr_id` matches no episode are listed, as is the
/// number of instruction samples without a prediction.
pub fn evaluate_split(
    episodes: &[Episode],
    predictions: &[Prediction],
    scenes: &SceneSet,
    cfg: &MetricConfig,
    opts: EvalOptions,
    exec: Exec,
) -> Result<AggregateReport> {
    if predictions.is_empty() {
        return Err(Error::NothingToEvaluate("no predictions".into()));
    }
    let mut lookup: HashMap<String, (usize, usize)> = HashMap::new();
    for (i, ep) in episodes.iter().enumerate() {
        for k in 0..ep.instructions.len() {
            lookup.insert(ep.instr_id(k), (i, k));
        }
    }
    let total_samples = lookup.len();
    let mut matched = Vec::new();
    let mut unmatched = Vec::new();
    for p in predictions {
        match lookup.get(&p.instr_id) {
            Some(&(i, k)) => matched.push((episodes[i].path_id, k, i, p)),
            None => unmatched.push(p.instr_id.clone()),
        }
    }
    unmatched.sort();
    if matched.is_empty() {
        return Err(Error::NothingToEvaluate(format!(
            "none of {} predictions match an episode",
            predictions.len()
        )));
    }
    matched.sort_by_key(|&(path_id, k, i, _)| (path_id, k, i));

    let resolved = resolve_references(episodes, scenes)?;
    let results = exec.map_slice(&matched, |&(_, _, i, p)| -> Result<EpisodeResult> {
        let s = &resolved[i];
        let traj = s.scene.graph.route(&p.trajectory)?;
        if opts.strict {
            let v = validate_route(&s.scene.graph, &traj);
            if !v.is_empty() {
                let why: Vec<String> = v.iter().map(ToString::to_string).collect();
                return Err(Error::NotNavigable(format!("{}: {}", p.instr_id, why.join("; "))));
            }
        }
        Ok(EpisodeResult {
            instr_id: p.instr_id.clone(),
            graph_id: s.scene.graph.graph_id().to_string(),
            metrics: evaluate(&traj, &s.reference, &s.scene.oracle, cfg)?,
        })
    });
    let mut acc = MetricAccumulator::default();
    let mut per_episode = Vec::with_capacity(results.len());
    for r in results {
        let r = r?;
        acc.add(&r.metrics);
        per_episode.push(r);
    }
    let mut report = AggregateReport::from_accumulator("evaluation", &acc, cfg);
    report.coverage = matched.len() as f64 / total_samples as f64;
    report.missing_predictions = total_samples - matched.len();
    report.unmatched_predictions = unmatched;
    if opts.per_episode {
        report.episodes = per_episode;
    }
    if report.coverage < 1.0 {
        log::warn!("only {:.1}% of instruction samples have predictions", 100.0 * report.coverage);
    }
    Ok(report)
}
