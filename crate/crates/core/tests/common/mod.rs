//! Independent reference implementations shared by the integration tests.
//!
//! Everything here is written directly from the metric definitions and
//! deliberately avoids the library's oracle and metric code.

#![allow(dead_code, clippy::needless_range_loop)]

use navfidelity::{NavGraph, NodeIdx, Route};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All-pairs shortest path distances by Floyd–Warshall.
pub fn floyd_warshall(g: &NavGraph) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (a, b, w) in g.edges() {
        let (a, b) = (a.index(), b.index());
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Every metric of the definition table, transcribed formula by formula.
#[derive(Debug, Clone, Copy)]
pub struct Transcribed {
    pub pl: f64,
    pub ne: f64,
    pub one: f64,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
    pub sed: f64,
    pub pc: f64,
    pub epl: f64,
    pub ls: f64,
    pub cls: f64,
}

fn levenshtein(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        m[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            m[i][j] = (m[i - 1][j] + 1).min(m[i][j - 1] + 1).min(m[i - 1][j - 1] + sub);
        }
    }
    m[a.len()][b.len()]
}

pub fn transcribe(p: &[usize], r: &[usize], d: &[Vec<f64>], d_th: f64) -> Transcribed {
    transcribe_with_decay(p, r, d, d_th, d_th)
}

pub fn transcribe_with_decay(p: &[usize], r: &[usize], d: &[Vec<f64>], d_th: f64, decay: f64) -> Transcribed {
    let length = |s: &[usize]| -> f64 {
        let mut total = 0.0;
        for i in 1..s.len() {
            total += d[s[i - 1]][s[i]];
        }
        total
    };
    let goal = r[r.len() - 1];
    let pl = length(p);
    let ne = d[p[p.len() - 1]][goal];
    let mut one = f64::INFINITY;
    for &x in p {
        one = one.min(d[x][goal]);
    }
    let sr = if ne <= d_th { 1.0 } else { 0.0 };
    let osr = if one <= d_th { 1.0 } else { 0.0 };

    let direct = d[p[0]][goal];
    let spl = if sr == 0.0 {
        0.0
    } else if pl.max(direct) == 0.0 {
        sr
    } else {
        sr * direct / pl.max(direct)
    };

    let actions = |s: &[usize]| -> Vec<(usize, usize)> { s.windows(2).map(|w| (w[0], w[1])).collect() };
    let denom = p.len().max(r.len()) - 1;
    let sed = if sr == 0.0 {
        0.0
    } else if denom == 0 {
        sr
    } else {
        sr * (1.0 - levenshtein(&actions(p), &actions(r)) as f64 / denom as f64)
    };

    let mut coverage = 0.0;
    for &x in r {
        let mut nearest = f64::INFINITY;
        for &y in p {
            nearest = nearest.min(d[x][y]);
        }
        coverage += (-nearest / decay).exp();
    }
    let pc = coverage / r.len() as f64;
    let epl = pc * length(r);
    let ls = if epl == 0.0 {
        if pl == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        epl / (epl + (epl - pl).abs())
    };
    Transcribed {
        pl,
        ne,
        one,
        sr,
        osr,
        spl,
        sed,
        pc,
        epl,
        ls,
        cls: pc * ls,
    }
}

/// A random connected geometric graph with `n` nodes, built independently of
/// the library's fixture generator: a random spanning tree plus extra chords.
pub fn random_connected_graph(n: usize, rng: &mut ChaCha8Rng, name: &str) -> NavGraph {
    let mut b = NavGraph::builder(name);
    let side = (n as f64).sqrt() * 2.0;
    let mut idx = Vec::with_capacity(n);
    for i in 0..n {
        let pos = [
            rng.random_range(0.0..side),
            rng.random_range(0.0..side),
            rng.random_range(0.0..0.5),
        ];
        idx.push(b.add_node(format!("n{i}"), pos).unwrap());
    }
    for i in 1..n {
        let j = rng.random_range(0..i);
        b.add_edge(idx[i], idx[j]).unwrap();
    }
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let c = rng.random_range(0..n);
        if a != c {
            b.add_edge(idx[a], idx[c]).unwrap();
        }
    }
    b.build()
}

/// A random walk of `steps` edges starting at `start`.
pub fn walk(g: &NavGraph, start: usize, steps: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = vec![start];
    let mut cur = NodeIdx(start as u32);
    for _ in 0..steps {
        let nb = g.neighbors(cur);
        if nb.is_empty() {
            break;
        }
        cur = nb[rng.random_range(0..nb.len())].0;
        out.push(cur.index());
    }
    out
}

/// An arbitrary node sequence (not necessarily navigable).
pub fn teleporting(n: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..n)).collect()
}

pub fn route(g: &NavGraph, nodes: &[usize]) -> Route {
    Route::new(g.graph_id(), nodes.iter().map(|&i| NodeIdx(i as u32)).collect())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One randomly drawn (graph, P, R, d_th) instance.
pub struct Instance {
    pub graph: NavGraph,
    pub p: Vec<usize>,
    pub r: Vec<usize>,
    pub d_th: f64,
}

pub fn random_instance(seed: u64, max_nodes: usize) -> Instance {
    let mut rng = rng(seed);
    let n = rng.random_range(2..=max_nodes);
    let graph = random_connected_graph(n, &mut rng, &format!("inst{seed}"));
    let r_steps = rng.random_range(0..8);
    let r_start = rng.random_range(0..n);
    let r = walk(&graph, r_start, r_steps, &mut rng);
    let p = match rng.random_range(0..4) {
        0 => r.clone(),
        1 => {
            let steps = rng.random_range(0..10);
            walk(&graph, r[0], steps, &mut rng)
        }
        2 => {
            let steps = rng.random_range(0..10);
            let start = rng.random_range(0..n);
            walk(&graph, start, steps, &mut rng)
        }
        _ => {
            let len = rng.random_range(1..8);
            teleporting(n, len, &mut rng)
        }
    };
    let d_th = [0.5, 1.0, 2.0, 3.0, 5.0][rng.random_range(0..5)];
    Instance { graph, p, r, d_th }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol
}
