//! Deterministic synthetic environments and episodes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::episodes::{write_episodes, Episode};
use crate::error::{Error, Result};
use crate::graph::{write_connectivity, NavGraph, NavPath, NodeIdx};
use crate::oracle::DistanceOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Line,
    Grid,
    Corridors,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    /// Nodes for `line` and `random`, side length for `grid`, corridor nodes for `corridors`.
    pub size: usize,
    pub spacing: f64,
    pub seed: u64,
}

impl FixtureSpec {
    pub fn new(kind: FixtureKind, size: usize) -> Self {
        FixtureSpec {
            kind,
            size,
            spacing: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub graph: NavGraph,
    pub episodes: Vec<Episode>,
    /// Extra named routes, e.g. the `near` and `far` corridor paths.
    pub named_paths: BTreeMap<String, NavPath>,
}

/// Unit-spaced `v0 - v1 - ... - v{n-1}` along the x axis.
pub fn line(n: usize, spacing: f64) -> NavGraph {
    let mut b = NavGraph::builder("line");
    let ids: Vec<_> = (0..n)
        .map(|i| {
            b.add_node(format!("v{i}"), [i as f64 * spacing, 0.0, 0.0])
                .expect("distinct ids")
        })
        .collect();
    for w in ids.windows(2) {
        b.add_edge(w[0], w[1]).expect("valid edge");
    }
    b.build()
}

/// `n x n` lattice with 4-neighbor edges; node `g{row}_{col}` has index `row * n + col`.
pub fn grid(n: usize, spacing: f64) -> NavGraph {
    let mut b = NavGraph::builder("grid");
    for r in 0..n {
        for c in 0..n {
            b.add_node(
                format!("g{r}_{c}"),
                [c as f64 * spacing, r as f64 * spacing, 0.0],
            )
            .expect("distinct ids");
        }
    }
    let at = |r: usize, c: usize| NodeIdx((r * n + c) as u32);
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                b.add_edge(at(r, c), at(r, c + 1)).expect("valid edge");
            }
            if r + 1 < n {
                b.add_edge(at(r, c), at(r + 1, c)).expect("valid edge");
            }
        }
    }
    b.build()
}

/// Three parallel corridors of `n` nodes at `y = 0` (reference), `y = 1`
/// (near) and `y = 5` (far). Reference node `r{i}` has straight rungs to
/// `n{i}` and `f{i}`; the near and far lanes only meet through the reference.
pub fn corridors(n: usize, spacing: f64) -> NavGraph {
    let mut b = NavGraph::builder("corridors");
    let mut lanes = Vec::new();
    for (prefix, y) in [("r", 0.0), ("n", 1.0), ("f", 5.0)] {
        let lane: Vec<_> = (0..n)
            .map(|i| {
                b.add_node(format!("{prefix}{i}"), [i as f64 * spacing, y * spacing, 0.0])
                    .expect("distinct ids")
            })
            .collect();
        for w in lane.windows(2) {
            b.add_edge(w[0], w[1]).expect("valid edge");
        }
        lanes.push(lane);
    }
    for ((&r, &near), &far) in lanes[0].iter().zip(&lanes[1]).zip(&lanes[2]) {
        b.add_edge(r, near).expect("valid edge");
        b.add_edge(r, far).expect("valid edge");
    }
    b.build()
}

/// Random geometric graph on `n` nodes, regenerated until connected.
pub fn random_graph(n: usize, seed: u64) -> NavGraph {
    random_graph_spaced(n, 1.0, seed)
}

fn random_graph_spaced(n: usize, spacing: f64, seed: u64) -> NavGraph {
    let side = (n as f64).sqrt() * 1.2 * spacing;
    let mut radius = 2.0 * spacing;
    let mut attempt = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let positions: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side, 0.0])
            .collect();
        let mut b = NavGraph::builder(format!("random{seed}"));
        let ids: Vec<_> = positions
            .iter()
            .enumerate()
            .map(|(i, p)| b.add_node(format!("n{i}"), *p).expect("distinct ids"))
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = positions[i][0] - positions[j][0];
                let dy = positions[i][1] - positions[j][1];
                if (dx * dx + dy * dy).sqrt() < radius {
                    // Coincident points cannot carry an edge; skip them.
                    let _ = b.add_edge(ids[i], ids[j]);
                }
            }
        }
        let g = b.build();
        if g.is_connected() {
            return g;
        }
        attempt += 1;
        if attempt.is_multiple_of(32) {
            radius *= 1.1;
        }
    }
}

fn instructions_for(g: &NavGraph, from: NodeIdx, to: NodeIdx) -> Vec<String> {
    let (a, b) = (g.node_id(from), g.node_id(to));
    vec![
        format!("walk from {a} to {b}"),
        format!("go to {b} and stop"),
        format!("start at {a} then head toward {b}"),
    ]
}

fn episode(path_id: u64, g: &NavGraph, nodes: &[NodeIdx]) -> Episode {
    let first = nodes[0];
    let last = *nodes.last().expect("nonempty");
    Episode {
        path_id,
        graph_id: g.graph_id().to_string(),
        reference: nodes.iter().map(|&n| g.node_id(n).to_string()).collect(),
        heading: 0.0,
        distance: None,
        instructions: instructions_for(g, first, last),
        provenance: None,
    }
}

fn shortest_path_episodes(g: &NavGraph, count: usize, seed: u64) -> Vec<Episode> {
    let o = DistanceOracle::build(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = g.len();
    let mut out = Vec::with_capacity(count);
    while out.len() < count && n > 1 {
        let a = NodeIdx(rng.random_range(0..n as u32));
        let b = NodeIdx(rng.random_range(0..n as u32));
        if a == b {
            continue;
        }
        if let Some(nodes) = o.shortest_route(a, b) {
            out.push(episode(out.len() as u64, g, &nodes));
        }
    }
    out
}

pub fn make_fixture(spec: &FixtureSpec) -> Result<Fixture> {
    if !(spec.spacing.is_finite() && spec.spacing > 0.0) {
        return Err(Error::Fixture(format!("spacing must be positive, got {}", spec.spacing)));
    }
    let mut named_paths = BTreeMap::new();
    let (graph, episodes) = match spec.kind {
        FixtureKind::Line => {
            if spec.size < 1 {
                return Err(Error::Fixture("line needs at least one node".into()));
            }
            let g = line(spec.size, spec.spacing);
            let nodes: Vec<_> = g.nodes().collect();
            let eps = vec![episode(0, &g, &nodes)];
            (g, eps)
        }
        FixtureKind::Grid => {
            if spec.size < 2 {
                return Err(Error::Fixture("grid side must be at least 2".into()));
            }
            let g = grid(spec.size, spec.spacing);
            let eps = shortest_path_episodes(&g, spec.size * 2, spec.seed);
            (g, eps)
        }
        FixtureKind::Corridors => {
            if spec.size < 2 {
                return Err(Error::Fixture("corridors need at least two nodes".into()));
            }
            let g = corridors(spec.size, spec.spacing);
            let lane = |p: &str| -> Vec<String> { (0..spec.size).map(|i| format!("{p}{i}")).collect() };
            let r = g.route(&lane("r"))?;
            let eps = vec![episode(0, &g, &r.nodes)];
            named_paths.insert("near".to_string(), NavPath::new("corridors", lane("n")));
            named_paths.insert("far".to_string(), NavPath::new("corridors", lane("f")));
            (g, eps)
        }
        FixtureKind::Random => {
            if spec.size < 2 {
                return Err(Error::Fixture("random graphs need at least two nodes".into()));
            }
            let g = random_graph_spaced(spec.size, spec.spacing, spec.seed);
            let eps = shortest_path_episodes(&g, (spec.size / 4).max(3), spec.seed);
            (g, eps)
        }
    };
    Ok(Fixture {
        graph,
        episodes,
        named_paths,
    })
}

/// Files written by [`write_fixture`].
#[derive(Debug, Clone)]
pub struct FixtureFiles {
    pub connectivity: PathBuf,
    pub episodes: PathBuf,
    pub named_paths: Option<PathBuf>,
}

/// Writes `<graph_id>_connectivity.json`, `episodes.json` and, when present,
/// `named_paths.json` into `dir`.
pub fn write_fixture(f: &Fixture, dir: &Path) -> Result<FixtureFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let connectivity = write_connectivity(&f.graph, dir)?;
    let episodes = dir.join("episodes.json");
    write_episodes(&f.episodes, &episodes)?;
    let named_paths = if f.named_paths.is_empty() {
        None
    } else {
        let p = dir.join("named_paths.json");
        let text = serde_json::to_string_pretty(&f.named_paths)?;
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Some(p)
    };
    Ok(FixtureFiles {
        connectivity,
        episodes,
        named_paths,
    })
}
