//! Extended-path composition: joins path `A` to path `B` when `B` starts
//! within the join threshold of where `A` ends, bridging the gap with the
//! shortest path between them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::episodes::{Composition, Episode};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{NavGraph, Route};
use crate::metrics::DEFAULT_THRESHOLD;
use crate::oracle::DistanceOracle;
use crate::scene::SceneSet;
use crate::summary::{Histogram, MeanAccumulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinSpec {
    /// Paths join when `d(a_last, b_first) < join_threshold`.
    pub join_threshold: f64,
    pub allow_self_join: bool,
}

impl Default for JoinSpec {
    fn default() -> Self {
        JoinSpec {
            join_threshold: DEFAULT_THRESHOLD,
            allow_self_join: false,
        }
    }
}

impl JoinSpec {
    pub fn new(join_threshold: f64) -> Result<Self> {
        if !(join_threshold.is_finite() && join_threshold >= 0.0) {
            return Err(Error::InvalidThreshold(join_threshold));
        }
        Ok(JoinSpec {
            join_threshold,
            allow_self_join: false,
        })
    }
}

/// Joins `a` then `b`, or returns `None` if they are too far apart.
///
/// The bridge excludes both endpoints; when `a` ends where `b` starts the
/// shared node appears once.
pub fn join_paths(a: &Route, b: &Route, o: &DistanceOracle, spec: &JoinSpec) -> Result<Option<Route>> {
    o.check_route(a)?;
    o.check_route(b)?;
    let end = a.last().expect("checked nonempty");
    let start = b.first().expect("checked nonempty");
    let Some(bridge) = o.shortest_route(end, start) else {
        return Err(Error::Unreachable {
            graph_id: o.graph_id().to_string(),
            from: end.to_string(),
            to: start.to_string(),
        });
    };
    if o.dist(end, start) >= spec.join_threshold {
        return Ok(None);
    }
    let mut nodes = Vec::with_capacity(a.len() + bridge.len() + b.len());
    nodes.extend_from_slice(&a.nodes);
    if bridge.len() > 2 {
        nodes.extend_from_slice(&bridge[1..bridge.len() - 1]);
    }
    if end == start {
        nodes.extend_from_slice(&b.nodes[1..]);
    } else {
        nodes.extend_from_slice(&b.nodes);
    }
    Ok(Some(Route::new(a.graph_id.clone(), nodes)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposeOutput {
    pub episodes: Vec<Episode>,
    /// Candidate pairs dropped because a join failed (unreachable endpoints).
    pub skipped_pairs: usize,
}

struct Candidate {
    first: usize,
    second: usize,
    route: Route,
}

fn compose_graph(
    g: &NavGraph,
    o: &DistanceOracle,
    members: &[(usize, Route)],
    episodes: &[Episode],
    spec: &JoinSpec,
) -> (Vec<Candidate>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for (ia, (a_idx, a)) in members.iter().enumerate() {
        for (ib, (b_idx, b)) in members.iter().enumerate() {
            if ia == ib && !spec.allow_self_join {
                continue;
            }
            match join_paths(a, b, o, spec) {
                Ok(Some(route)) => out.push(Candidate {
                    first: *a_idx,
                    second: *b_idx,
                    route,
                }),
                Ok(None) => {}
                Err(e) => {
                    log::debug!(
                        "{}: skipping {} -> {}: {e}",
                        g.graph_id(),
                        episodes[*a_idx].path_id,
                        episodes[*b_idx].path_id
                    );
                    skipped += 1;
                }
            }
        }
    }
    (out, skipped)
}

/// Composes every joinable ordered pair of episodes on the same graph.
///
/// Output is sorted by `(graph_id, first path_id, second path_id)` and
/// composed episodes are numbered from 0 in that order. Each carries the
/// cross product of both instruction lists, joined with one space.
pub fn compose_dataset(
    episodes: &[Episode],
    scenes: &SceneSet,
    spec: &JoinSpec,
    exec: Exec,
) -> Result<ComposeOutput> {
    let mut by_graph: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, ep) in episodes.iter().enumerate() {
        by_graph.entry(ep.graph_id.as_str()).or_default().push(i);
    }
    let mut groups = Vec::with_capacity(by_graph.len());
    for (gid, mut idxs) in by_graph {
        let scene = scenes.get(gid)?;
        idxs.sort_by_key(|&i| (episodes[i].path_id, i));
        let members = idxs
            .into_iter()
            .map(|i| Ok((i, scene.graph.resolve(&episodes[i].reference_path())?)))
            .collect::<Result<Vec<_>>>()?;
        groups.push((scene, members));
    }

    let results = exec.map_slice(&groups, |(scene, members)| {
        compose_graph(&scene.graph, &scene.oracle, members, episodes, spec)
    });

    let mut out = Vec::new();
    let mut skipped_pairs = 0;
    for ((scene, _), (candidates, skipped)) in groups.iter().zip(results) {
        skipped_pairs += skipped;
        for c in candidates {
            let (a, b) = (&episodes[c.first], &episodes[c.second]);
            let mut instructions = Vec::with_capacity(a.instructions.len() * b.instructions.len());
            let mut pairs = Vec::with_capacity(instructions.capacity());
            for (i, ia) in a.instructions.iter().enumerate() {
                for (j, ib) in b.instructions.iter().enumerate() {
                    instructions.push(format!("{ia} {ib}"));
                    pairs.push([i, j]);
                }
            }
            out.push(Episode {
                path_id: out.len() as u64,
                graph_id: a.graph_id.clone(),
                reference: scene.graph.to_nav_path(&c.route).nodes,
                heading: a.heading,
                distance: None,
                instructions,
                provenance: Some(Composition {
                    first_path_id: a.path_id,
                    second_path_id: b.path_id,
                    instruction_pairs: pairs,
                }),
            });
        }
    }
    Ok(ComposeOutput {
        episodes: out,
        skipped_pairs,
    })
}

/// Dataset summary over instruction samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub path_records: usize,
    pub sample_count: usize,
    /// Mean reference path length PL(R), meters.
    pub mean_reference_length: f64,
    /// Mean shortest distance from start to goal, meters.
    pub mean_direct_distance: f64,
    pub histograms: StatsHistograms,
}

/// Sample-weighted histograms: steps in edges, lengths in 1 m bins, tokens by whitespace split.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatsHistograms {
    pub steps: Histogram,
    pub path_length_m: Histogram,
    pub direct_distance_m: Histogram,
    pub instruction_tokens: Histogram,
}

pub fn dataset_stats(episodes: &[Episode], scenes: &SceneSet) -> Result<DatasetStats> {
    let mut length = MeanAccumulator::default();
    let mut direct = MeanAccumulator::default();
    let mut h = StatsHistograms::default();
    let mut samples = 0usize;
    for ep in episodes {
        let scene = scenes.get(&ep.graph_id)?;
        let r = scene.graph.resolve(&ep.reference_path())?;
        let pl = scene.oracle.path_length(&r)?;
        let d = scene
            .oracle
            .dist(r.first().expect("nonempty"), r.last().expect("nonempty"));
        let n = ep.instructions.len();
        samples += n;
        length.add_weighted(pl, n as f64);
        direct.add_weighted(d, n as f64);
        h.steps.add_bin(r.len() - 1, n as u64);
        h.path_length_m.add_value(pl, n as u64);
        h.direct_distance_m.add_value(d, n as u64);
        for instr in &ep.instructions {
            h.instruction_tokens
                .add_bin(instr.split_whitespace().count(), 1);
        }
    }
    let mean = |m: &MeanAccumulator| if samples == 0 { 0.0 } else { m.mean() };
    Ok(DatasetStats {
        path_records: episodes.len(),
        sample_count: samples,
        mean_reference_length: mean(&length),
        mean_direct_distance: mean(&direct),
        histograms: h,
    })
}
