//! Environment graphs: viewpoints with 3-D positions joined by navigable
//! edges weighted by Euclidean length.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense index of a node inside one [`NavGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIdx(pub u32);

impl NodeIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub type Position = [f64; 3];

fn euclidean(a: &Position, b: &Position) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Undirected navigation graph for one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct NavGraph {
    graph_id: String,
    ids: Vec<String>,
    index: HashMap<String, NodeIdx>,
    positions: Vec<Position>,
    // Sorted by neighbor index.
    adjacency: Vec<Vec<(NodeIdx, f64)>>,
}

impl NavGraph {
    pub fn builder(graph_id: impl Into<String>) -> GraphBuilder {
        GraphBuilder {
            graph_id: graph_id.into(),
            ids: Vec::new(),
            index: HashMap::new(),
            positions: Vec::new(),
            adjacency: Vec::new(),
        }
    }

    pub fn graph_id(&self) -> &str {
        &self.graph_id
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn node_id(&self, idx: NodeIdx) -> &str {
        &self.ids[idx.index()]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    pub fn position(&self, idx: NodeIdx) -> Position {
        self.positions[idx.index()]
    }

    pub fn neighbors(&self, idx: NodeIdx) -> &[(NodeIdx, f64)] {
        &self.adjacency[idx.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        (0..self.ids.len() as u32).map(NodeIdx)
    }

    pub fn edge_weight(&self, a: NodeIdx, b: NodeIdx) -> Option<f64> {
        let adj = &self.adjacency[a.index()];
        adj.binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|i| adj[i].1)
    }

    pub fn has_edge(&self, a: NodeIdx, b: NodeIdx) -> bool {
        self.edge_weight(a, b).is_some()
    }

    /// Each undirected edge once, as `(low, high, weight)`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeIdx, NodeIdx, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, adj)| {
            let a = NodeIdx(a as u32);
            adj.iter()
                .filter(move |(b, _)| *b > a)
                .map(move |&(b, w)| (a, b, w))
        })
    }

    /// Copy of this graph with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> NavGraph {
        let mut g = self.clone();
        for p in &mut g.positions {
            for c in p.iter_mut() {
                *c *= factor;
            }
        }
        for (a, adj) in g.adjacency.iter_mut().enumerate() {
            for (b, w) in adj.iter_mut() {
                *w = euclidean(&g.positions[a], &g.positions[b.index()]);
            }
        }
        g
    }

    /// SHA-256 over graph id, node ids, positions and edge list.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.graph_id.as_bytes());
        h.update([0u8]);
        h.update((self.ids.len() as u64).to_le_bytes());
        for (id, pos) in self.ids.iter().zip(&self.positions) {
            h.update(id.as_bytes());
            h.update([0u8]);
            for c in pos {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        for (a, b, _) in self.edges() {
            h.update(a.0.to_le_bytes());
            h.update(b.0.to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn resolve(&self, path: &NavPath) -> Result<Route> {
        if path.graph_id != self.graph_id {
            return Err(Error::GraphMismatch {
                expected: self.graph_id.clone(),
                found: path.graph_id.clone(),
            });
        }
        self.route(&path.nodes)
    }

    /// Resolves string ids to a [`Route`] on this graph.
    pub fn route<S: AsRef<str>>(&self, ids: &[S]) -> Result<Route> {
        if ids.is_empty() {
            return Err(Error::EmptyPath);
        }
        let nodes = ids
            .iter()
            .map(|id| {
                self.index_of(id.as_ref()).ok_or_else(|| Error::UnknownNode {
                    graph_id: self.graph_id.clone(),
                    node: id.as_ref().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Route::new(self.graph_id.clone(), nodes))
    }

    /// Route from raw dense indices, checked against the node count.
    pub fn route_from_indices(&self, indices: &[usize]) -> Result<Route> {
        if indices.is_empty() {
            return Err(Error::EmptyPath);
        }
        let nodes = indices
            .iter()
            .map(|&i| {
                if i < self.len() {
                    Ok(NodeIdx(i as u32))
                } else {
                    Err(Error::NodeIndexOutOfRange {
                        graph_id: self.graph_id.clone(),
                        index: i,
                        len: self.len(),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Route::new(self.graph_id.clone(), nodes))
    }

    pub fn to_nav_path(&self, route: &Route) -> NavPath {
        NavPath {
            graph_id: self.graph_id.clone(),
            nodes: route
                .nodes
                .iter()
                .map(|&n| self.node_id(n).to_string())
                .collect(),
        }
    }

    /// Node indices reachable from `start`, including `start`.
    pub fn component_of(&self, start: NodeIdx) -> Vec<NodeIdx> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![start];
        seen[start.index()] = true;
        let mut out = Vec::new();
        while let Some(n) = stack.pop() {
            out.push(n);
            for &(m, _) in self.neighbors(n) {
                if !seen[m.index()] {
                    seen[m.index()] = true;
                    stack.push(m);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.component_of(NodeIdx(0)).len() == self.len()
    }
}

/// Incremental constructor for [`NavGraph`].
#[derive(Debug)]
pub struct GraphBuilder {
    graph_id: String,
    ids: Vec<String>,
    index: HashMap<String, NodeIdx>,
    positions: Vec<Position>,
    adjacency: Vec<Vec<(NodeIdx, f64)>>,
}

impl GraphBuilder {
    pub fn add_node(&mut self, id: impl Into<String>, position: Position) -> Result<NodeIdx> {
        let id = id.into();
        if position.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGraph(format!(
                "node `{id}` has a non-finite position"
            )));
        }
        if self.index.contains_key(&id) {
            return Err(Error::InvalidGraph(format!("duplicate node id `{id}`")));
        }
        let idx = NodeIdx(self.ids.len() as u32);
        self.index.insert(id.clone(), idx);
        self.ids.push(id);
        self.positions.push(position);
        self.adjacency.push(Vec::new());
        Ok(idx)
    }

    /// Adds the undirected edge `a`–`b`. Returns `false` if it already existed.
    pub fn add_edge(&mut self, a: NodeIdx, b: NodeIdx) -> Result<bool> {
        let n = self.ids.len();
        if a.index() >= n || b.index() >= n {
            return Err(Error::InvalidGraph(format!(
                "edge ({a}, {b}) references a missing node"
            )));
        }
        if a == b {
            return Err(Error::InvalidGraph(format!(
                "self-loop on `{}`",
                self.ids[a.index()]
            )));
        }
        let w = euclidean(&self.positions[a.index()], &self.positions[b.index()]);
        if w <= 0.0 {
            return Err(Error::InvalidGraph(format!(
                "zero-length edge between `{}` and `{}`",
                self.ids[a.index()],
                self.ids[b.index()]
            )));
        }
        let adj = &mut self.adjacency[a.index()];
        match adj.binary_search_by_key(&b, |&(m, _)| m) {
            Ok(_) => Ok(false),
            Err(pos) => {
                adj.insert(pos, (b, w));
                let adj_b = &mut self.adjacency[b.index()];
                let pos_b = adj_b.binary_search_by_key(&a, |&(m, _)| m).unwrap_err();
                adj_b.insert(pos_b, (a, w));
                Ok(true)
            }
        }
    }

    pub fn add_edge_by_id(&mut self, a: &str, b: &str) -> Result<bool> {
        let lookup = |id: &str| {
            self.index.get(id).copied().ok_or_else(|| Error::UnknownNode {
                graph_id: self.graph_id.clone(),
                node: id.to_string(),
            })
        };
        let (a, b) = (lookup(a)?, lookup(b)?);
        self.add_edge(a, b)
    }

    pub fn build(self) -> NavGraph {
        NavGraph {
            graph_id: self.graph_id,
            ids: self.ids,
            index: self.index,
            positions: self.positions,
            adjacency: self.adjacency,
        }
    }
}

/// A node sequence named by viewpoint ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavPath {
    pub graph_id: String,
    pub nodes: Vec<String>,
}

impl NavPath {
    pub fn new<S: Into<String>>(graph_id: impl Into<String>, nodes: impl IntoIterator<Item = S>) -> Self {
        NavPath {
            graph_id: graph_id.into(),
            nodes: nodes.into_iter().map(Into::into).collect(),
        }
    }
}

/// A node sequence resolved against one graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Route {
    pub graph_id: String,
    pub nodes: Vec<NodeIdx>,
}

impl Route {
    pub fn new(graph_id: impl Into<String>, nodes: Vec<NodeIdx>) -> Self {
        Route {
            graph_id: graph_id.into(),
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> Option<NodeIdx> {
        self.nodes.first().copied()
    }

    pub fn last(&self) -> Option<NodeIdx> {
        self.nodes.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyPath,
    GraphMismatch { expected: String, found: String },
    UnknownNode { index: usize, node: String },
    NotAdjacent { index: usize, from: String, to: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyPath => write!(f, "empty path"),
            Violation::GraphMismatch { expected, found } => {
                write!(f, "path is on graph `{found}`, expected `{expected}`")
            }
            Violation::UnknownNode { index, node } => {
                write!(f, "unknown node `{node}` at index {index}")
            }
            Violation::NotAdjacent { index, from, to } => {
                write!(f, "step {index}: `{from}` -> `{to}` is not an edge")
            }
        }
    }
}

/// Lists every reason `path` is not a navigable walk on `g`.
pub fn validate_path(g: &NavGraph, path: &NavPath) -> Vec<Violation> {
    let mut out = Vec::new();
    if path.graph_id != g.graph_id {
        out.push(Violation::GraphMismatch {
            expected: g.graph_id.clone(),
            found: path.graph_id.clone(),
        });
        return out;
    }
    if path.nodes.is_empty() {
        out.push(Violation::EmptyPath);
        return out;
    }
    let resolved: Vec<Option<NodeIdx>> = path.nodes.iter().map(|n| g.index_of(n)).collect();
    for (i, (id, r)) in path.nodes.iter().zip(&resolved).enumerate() {
        if r.is_none() {
            out.push(Violation::UnknownNode {
                index: i,
                node: id.clone(),
            });
        }
    }
    for i in 0..resolved.len() - 1 {
        if let (Some(a), Some(b)) = (resolved[i], resolved[i + 1]) {
            if !g.has_edge(a, b) {
                out.push(Violation::NotAdjacent {
                    index: i,
                    from: path.nodes[i].clone(),
                    to: path.nodes[i + 1].clone(),
                });
            }
        }
    }
    out
}

/// Same as [`validate_path`] for an already resolved route.
pub fn validate_route(g: &NavGraph, route: &Route) -> Vec<Violation> {
    if route.graph_id != g.graph_id {
        return vec![Violation::GraphMismatch {
            expected: g.graph_id.clone(),
            found: route.graph_id.clone(),
        }];
    }
    if route.nodes.is_empty() {
        return vec![Violation::EmptyPath];
    }
    route
        .nodes
        .windows(2)
        .enumerate()
        .filter(|(_, w)| !g.has_edge(w[0], w[1]))
        .map(|(i, w)| Violation::NotAdjacent {
            index: i,
            from: g.node_id(w[0]).to_string(),
            to: g.node_id(w[1]).to_string(),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Connectivity files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ConnectivityRecord {
    image_id: String,
    included: bool,
    pose: Vec<f64>,
    unobstructed: Vec<bool>,
}

/// Warnings gathered while ingesting a connectivity file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub records: usize,
    pub excluded_nodes: usize,
    /// Links declared in only one direction, added in both.
    pub asymmetric_links: usize,
    /// Links between coincident positions, which cannot carry a positive weight.
    pub degenerate_links_skipped: usize,
}

pub fn connectivity_path(dir: &Path, graph_id: &str) -> PathBuf {
    dir.join(format!("{graph_id}_connectivity.json"))
}

/// Reads `<dir>/<graph_id>_connectivity.json`.
pub fn load_connectivity(dir: &Path, graph_id: &str) -> Result<(NavGraph, LoadReport)> {
    let path = connectivity_path(dir, graph_id);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_connectivity(graph_id, &text).map_err(|message| Error::Connectivity { path, message })
}

/// Parses the JSON text of a connectivity file.
pub fn parse_connectivity(
    graph_id: &str,
    text: &str,
) -> std::result::Result<(NavGraph, LoadReport), String> {
    let records: Vec<ConnectivityRecord> =
        serde_json::from_str(text).map_err(|e| format!("malformed json: {e}"))?;
    let n = records.len();
    let mut report = LoadReport {
        records: n,
        ..LoadReport::default()
    };
    let mut builder = NavGraph::builder(graph_id);
    let mut local: Vec<Option<NodeIdx>> = Vec::with_capacity(n);
    for (i, rec) in records.iter().enumerate() {
        if rec.pose.len() != 16 {
            return Err(format!(
                "record {i} (`{}`): pose has {} values, expected 16",
                rec.image_id,
                rec.pose.len()
            ));
        }
        if rec.unobstructed.len() != n {
            return Err(format!(
                "record {i} (`{}`): unobstructed has {} entries, expected {n}",
                rec.image_id,
                rec.unobstructed.len()
            ));
        }
        if !rec.included {
            report.excluded_nodes += 1;
            local.push(None);
            continue;
        }
        let pos = [rec.pose[3], rec.pose[7], rec.pose[11]];
        let idx = builder
            .add_node(rec.image_id.clone(), pos)
            .map_err(|e| format!("record {i}: {e}"))?;
        local.push(Some(idx));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (Some(a), Some(b)) = (local[i], local[j]) else {
                continue;
            };
            let fwd = records[i].unobstructed[j];
            let back = records[j].unobstructed[i];
            if !(fwd || back) {
                continue;
            }
            if fwd != back {
                report.asymmetric_links += 1;
            }
            match builder.add_edge(a, b) {
                Ok(_) => {}
                Err(Error::InvalidGraph(_)) => report.degenerate_links_skipped += 1,
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    if report.asymmetric_links > 0 {
        log::warn!(
            "{graph_id}: symmetrized {} one-directional links",
            report.asymmetric_links
        );
    }
    if report.degenerate_links_skipped > 0 {
        log::warn!(
            "{graph_id}: skipped {} links between coincident nodes",
            report.degenerate_links_skipped
        );
    }
    Ok((builder.build(), report))
}

/// Serializes `g` in the connectivity format (identity rotation poses).
pub fn connectivity_json(g: &NavGraph) -> String {
    let n = g.len();
    let records: Vec<ConnectivityRecord> = g
        .nodes()
        .map(|a| {
            let [x, y, z] = g.position(a);
            let mut unobstructed = vec![false; n];
            for &(b, _) in g.neighbors(a) {
                unobstructed[b.index()] = true;
            }
            ConnectivityRecord {
                image_id: g.node_id(a).to_string(),
                included: true,
                pose: vec![
                    1.0, 0.0, 0.0, x, 0.0, 1.0, 0.0, y, 0.0, 0.0, 1.0, z, 0.0, 0.0, 0.0, 1.0,
                ],
                unobstructed,
            }
        })
        .collect();
    serde_json::to_string(&records).expect("connectivity records serialize")
}

pub fn write_connectivity(g: &NavGraph, dir: &Path) -> Result<PathBuf> {
    let path = connectivity_path(dir, g.graph_id());
    fs::write(&path, connectivity_json(g)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
