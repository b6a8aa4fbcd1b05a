//! All-pairs shortest-path distances along graph edges.
//!
//! One Dijkstra run per source node, `O(EV + V^2 log V)` overall. Sources are
//! independent, so construction fans out across workers; each row is a pure
//! function of the graph and the source.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{NavGraph, NavPath, NodeIdx, Route};

const NO_PRED: u32 = u32::MAX;
const CACHE_MAGIC: &[u8; 8] = b"NAVDIST\0";
pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Immutable table of shortest-path lengths (meters) for one graph.
///
/// Unreachable pairs hold `f64::INFINITY`. The table is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceOracle {
    graph_id: String,
    n: usize,
    dist: Vec<f64>,
    // pred[s * n + v]: predecessor of v on the chosen shortest path from s.
    pred: Vec<u32>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // Min-heap on (dist, node).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
fn tie_tolerance(d: f64) -> f64 {
    1e-9 * d.abs().max(1.0)
}

/// Single-source Dijkstra. Among equal-length routes the predecessor with the
/// smallest index wins.
fn dijkstra_row(g: &NavGraph, source: usize) -> (Vec<f64>, Vec<u32>) {
    let n = g.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source as u32,
    });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        let u = node as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in g.neighbors(NodeIdx(node)) {
            let v = v.index();
            if done[v] {
                continue;
            }
            let nd = d + w;
            if nd < dist[v] - tie_tolerance(dist[v]) || dist[v].is_infinite() {
                dist[v] = nd;
                pred[v] = node;
                heap.push(HeapEntry {
                    dist: nd,
                    node: v as u32,
                });
            } else if (nd - dist[v]).abs() <= tie_tolerance(dist[v]) && node < pred[v] {
                pred[v] = node;
            }
        }
    }
    (dist, pred)
}

impl DistanceOracle {
    pub fn build(g: &NavGraph) -> Self {
        Self::build_with(g, Exec::default())
    }

    pub fn build_with(g: &NavGraph, exec: Exec) -> Self {
        let n = g.len();
        let rows = exec.map_range(n, |s| dijkstra_row(g, s));
        let mut dist = Vec::with_capacity(n * n);
        let mut pred = Vec::with_capacity(n * n);
        for (d, p) in rows {
            dist.extend(d);
            pred.extend(p);
        }
        // Summation order differs between the two directions; keep the smaller.
        for a in 0..n {
            for b in (a + 1)..n {
                let m = dist[a * n + b].min(dist[b * n + a]);
                dist[a * n + b] = m;
                dist[b * n + a] = m;
            }
        }
        DistanceOracle {
            graph_id: g.graph_id().to_string(),
            n,
            dist,
            pred,
        }
    }

    pub fn graph_id(&self) -> &str {
        &self.graph_id
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, a: NodeIdx, b: NodeIdx) -> f64 {
        self.dist[a.index() * self.n + b.index()]
    }

    pub fn row(&self, a: NodeIdx) -> &[f64] {
        &self.dist[a.index() * self.n..(a.index() + 1) * self.n]
    }

    pub fn check_route(&self, route: &Route) -> Result<()> {
        if route.graph_id != self.graph_id {
            return Err(Error::GraphMismatch {
                expected: self.graph_id.clone(),
                found: route.graph_id.clone(),
            });
        }
        if route.nodes.is_empty() {
            return Err(Error::EmptyPath);
        }
        if let Some(bad) = route.nodes.iter().find(|n| n.index() >= self.n) {
            return Err(Error::NodeIndexOutOfRange {
                graph_id: self.graph_id.clone(),
                index: bad.index(),
                len: self.n,
            });
        }
        Ok(())
    }

    /// Sum of shortest-path distances between consecutive nodes.
    pub fn path_length(&self, route: &Route) -> Result<f64> {
        self.check_route(route)?;
        Ok(self.path_length_unchecked(&route.nodes))
    }

    pub(crate) fn path_length_unchecked(&self, nodes: &[NodeIdx]) -> f64 {
        nodes.windows(2).map(|w| self.dist(w[0], w[1])).sum()
    }

    /// Node sequence of the chosen shortest path, or `None` if unreachable.
    pub fn shortest_route(&self, from: NodeIdx, to: NodeIdx) -> Option<Vec<NodeIdx>> {
        if self.dist(from, to).is_infinite() {
            return None;
        }
        let base = from.index() * self.n;
        let mut nodes = vec![to];
        let mut cur = to;
        while cur != from {
            let p = self.pred[base + cur.index()];
            debug_assert_ne!(p, NO_PRED);
            cur = NodeIdx(p);
            nodes.push(cur);
        }
        nodes.reverse();
        Some(nodes)
    }

    // -- cache -------------------------------------------------------------

    pub fn to_cache_bytes(&self, g: &NavGraph) -> Vec<u8> {
        assert_eq!(g.graph_id(), self.graph_id, "oracle/graph mismatch");
        let id = self.graph_id.as_bytes();
        let mut out = Vec::with_capacity(64 + id.len() + self.n * self.n * 12);
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&g.content_hash());
        for d in &self.dist {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for p in &self.pred {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    /// Decodes a cache blob, rejecting it unless the header matches `g`.
    pub fn from_cache_bytes(bytes: &[u8], g: &NavGraph) -> std::result::Result<Self, String> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CACHE_MAGIC {
            return Err("bad magic".into());
        }
        let version = u32::from_le_bytes(r.array()?);
        if version != CACHE_FORMAT_VERSION {
            return Err(format!("format version {version}, expected {CACHE_FORMAT_VERSION}"));
        }
        let id_len = u32::from_le_bytes(r.array()?) as usize;
        let id = std::str::from_utf8(r.take(id_len)?).map_err(|e| e.to_string())?;
        if id != g.graph_id() {
            return Err(format!("cache is for graph `{id}`"));
        }
        let n = u64::from_le_bytes(r.array()?) as usize;
        if n != g.len() {
            return Err(format!("cache has {n} nodes, graph has {}", g.len()));
        }
        let hash: [u8; 32] = r.array()?;
        if hash != g.content_hash() {
            return Err("graph content hash changed".into());
        }
        let mut dist = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            dist.push(f64::from_le_bytes(r.array()?));
        }
        let mut pred = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            pred.push(u32::from_le_bytes(r.array()?));
        }
        if r.pos != bytes.len() {
            return Err("trailing bytes".into());
        }
        Ok(DistanceOracle {
            graph_id: id.to_string(),
            n,
            dist,
            pred,
        })
    }

    pub fn write_cache(&self, g: &NavGraph, path: &Path) -> Result<()> {
        fs::write(path, self.to_cache_bytes(g)).map_err(|e| Error::io(path, e))
    }

    pub fn read_cache(path: &Path, g: &NavGraph) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_cache_bytes(&bytes, g).map_err(|message| Error::Cache {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Uses the cache in `dir` when valid; otherwise builds and rewrites it.
    pub fn load_or_build(dir: &Path, g: &NavGraph, exec: Exec) -> Result<Self> {
        let path = cache_path(dir, g.graph_id());
        if path.exists() {
            match Self::read_cache(&path, g) {
                Ok(o) => return Ok(o),
                Err(e) => log::warn!("rebuilding stale oracle cache: {e}"),
            }
        }
        let o = Self::build_with(g, exec);
        o.write_cache(g, &path)?;
        Ok(o)
    }
}

pub fn cache_path(dir: &Path, graph_id: &str) -> PathBuf {
    dir.join(format!("{graph_id}.navdist"))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| "truncated".to_string())?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> std::result::Result<[u8; N], String> {
        Ok(self.take(N)?.try_into().expect("slice length"))
    }
}

/// Shortest path between two viewpoint ids.
pub fn shortest_path_nodes(o: &DistanceOracle, g: &NavGraph, from: &str, to: &str) -> Result<NavPath> {
    if o.graph_id() != g.graph_id() {
        return Err(Error::GraphMismatch {
            expected: g.graph_id().to_string(),
            found: o.graph_id().to_string(),
        });
    }
    let route = g.route(&[from, to])?;
    let nodes = o
        .shortest_route(route.nodes[0], route.nodes[1])
        .ok_or_else(|| Error::Unreachable {
            graph_id: g.graph_id().to_string(),
            from: from.to_string(),
            to: to.to_string(),
        })?;
    Ok(g.to_nav_path(&Route::new(g.graph_id(), nodes)))
}
