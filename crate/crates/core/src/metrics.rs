//! Navigation metrics for a predicted route `P` against a reference `R`.
//!
//! All functions are pure. Distances come from a [`DistanceOracle`], so a
//! prediction that teleports between non-adjacent nodes is still scored.
//!
//! | metric | value |
//! |--------|-------|
//! | PL  | sum of `d(p_i, p_i+1)` |
//! | NE  | `d(p_last, r_last)` |
//! | ONE | `min_p d(p, r_last)` |
//! | SR / OSR | `NE <= d_th` / `ONE <= d_th` |
//! | SPL | `SR * d(p_1, r_last) / max(PL(P), d(p_1, r_last))` |
//! | SED | `SR * (1 - ED(A_P, A_R) / (max(abs P, abs R) - 1))` |
//! | PC  | `mean_r exp(-d(r, P) / d_th)` |
//! | LS  | `EPL / (EPL + abs(EPL - PL(P)))`, `EPL = PC * PL(R)` |
//! | CLS | `PC * LS` |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeIdx, Route};
use crate::oracle::DistanceOracle;

pub const DEFAULT_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Success radius in meters.
    pub success_threshold: f64,
    /// Decay constant of the coverage term; normally equal to the success radius.
    pub decay_threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig::new(DEFAULT_THRESHOLD).expect("default threshold is valid")
    }
}

fn check_threshold(t: f64) -> Result<f64> {
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err(Error::InvalidThreshold(t))
    }
}

impl MetricConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        let t = check_threshold(threshold)?;
        Ok(MetricConfig {
            success_threshold: t,
            decay_threshold: t,
        })
    }

    pub fn with_decay(success_threshold: f64, decay_threshold: f64) -> Result<Self> {
        Ok(MetricConfig {
            success_threshold: check_threshold(success_threshold)?,
            decay_threshold: check_threshold(decay_threshold)?,
        })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_decay(self.success_threshold * factor, self.decay_threshold * factor)
    }
}

/// Every metric for one `(P, R)` pair.
///
/// `sr`/`osr` are 0 or 1; `spl`, `sed`, `pc`, `ls`, `cls` lie in `[0, 1]`.
/// `epl` is the expected optimal length in meters. Distances to unreachable
/// goals are infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
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

fn check_pair(p: &Route, r: &Route, o: &DistanceOracle) -> Result<()> {
    o.check_route(p)?;
    o.check_route(r)?;
    Ok(())
}

fn goal(r: &Route) -> NodeIdx {
    *r.nodes.last().expect("checked nonempty")
}

fn reference_length(r: &Route, o: &DistanceOracle) -> Result<f64> {
    let len = o.path_length_unchecked(&r.nodes);
    if len.is_finite() {
        Ok(len)
    } else {
        Err(Error::DisconnectedReference)
    }
}

pub fn path_length(p: &Route, o: &DistanceOracle) -> Result<f64> {
    o.path_length(p)
}

pub fn navigation_error(p: &Route, r: &Route, o: &DistanceOracle) -> Result<f64> {
    check_pair(p, r, o)?;
    Ok(o.dist(goal(p), goal(r)))
}

pub fn oracle_navigation_error(p: &Route, r: &Route, o: &DistanceOracle) -> Result<f64> {
    check_pair(p, r, o)?;
    let row = o.row(goal(r));
    Ok(p.nodes
        .iter()
        .map(|n| row[n.index()])
        .fold(f64::INFINITY, f64::min))
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn success_rate(p: &Route, r: &Route, o: &DistanceOracle, cfg: &MetricConfig) -> Result<f64> {
    Ok(indicator(navigation_error(p, r, o)? <= cfg.success_threshold))
}

pub fn oracle_success_rate(
    p: &Route,
    r: &Route,
    o: &DistanceOracle,
    cfg: &MetricConfig,
) -> Result<f64> {
    Ok(indicator(oracle_navigation_error(p, r, o)? <= cfg.success_threshold))
}

fn spl_from(sr: f64, shortest: f64, pl: f64) -> f64 {
    if sr == 0.0 {
        return 0.0;
    }
    let denom = pl.max(shortest);
    if denom == 0.0 {
        // Started on the goal and never moved.
        sr
    } else {
        sr * shortest / denom
    }
}

pub fn spl(p: &Route, r: &Route, o: &DistanceOracle, cfg: &MetricConfig) -> Result<f64> {
    let sr = success_rate(p, r, o, cfg)?;
    let shortest = o.dist(p.nodes[0], goal(r));
    let pl = o.path_length_unchecked(&p.nodes);
    Ok(spl_from(sr, shortest, pl))
}

/// Levenshtein distance with unit insertion, deletion and substitution costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn actions(nodes: &[NodeIdx]) -> Vec<(NodeIdx, NodeIdx)> {
    nodes.windows(2).map(|w| (w[0], w[1])).collect()
}

fn sed_from(sr: f64, p: &[NodeIdx], r: &[NodeIdx]) -> f64 {
    if sr == 0.0 {
        return 0.0;
    }
    let denom = p.len().max(r.len()) - 1;
    if denom == 0 {
        return sr;
    }
    let ed = edit_distance(&actions(p), &actions(r));
    sr * (1.0 - ed as f64 / denom as f64)
}

pub fn sed(p: &Route, r: &Route, o: &DistanceOracle, cfg: &MetricConfig) -> Result<f64> {
    let sr = success_rate(p, r, o, cfg)?;
    Ok(sed_from(sr, &p.nodes, &r.nodes))
}

fn coverage_unchecked(p: &[NodeIdx], r: &[NodeIdx], o: &DistanceOracle, decay: f64) -> f64 {
    let total: f64 = r
        .iter()
        .map(|&rn| {
            let row = o.row(rn);
            let near = p
                .iter()
                .map(|pn| row[pn.index()])
                .fold(f64::INFINITY, f64::min);
            (-near / decay).exp()
        })
        .sum();
    total / r.len() as f64
}

pub fn path_coverage(p: &Route, r: &Route, o: &DistanceOracle, cfg: &MetricConfig) -> Result<f64> {
    check_pair(p, r, o)?;
    Ok(coverage_unchecked(&p.nodes, &r.nodes, o, cfg.decay_threshold))
}

fn length_score_from(epl: f64, pl: f64) -> f64 {
    if epl == 0.0 {
        indicator(pl == 0.0)
    } else {
        epl / (epl + (epl - pl).abs())
    }
}

/// Returns `(LS, EPL)`.
pub fn length_score(
    p: &Route,
    r: &Route,
    o: &DistanceOracle,
    cfg: &MetricConfig,
) -> Result<(f64, f64)> {
    let pc = path_coverage(p, r, o, cfg)?;
    let epl = pc * reference_length(r, o)?;
    let pl = o.path_length_unchecked(&p.nodes);
    Ok((length_score_from(epl, pl), epl))
}

pub fn cls(p: &Route, r: &Route, o: &DistanceOracle, cfg: &MetricConfig) -> Result<f64> {
    let pc = path_coverage(p, r, o, cfg)?;
    let epl = pc * reference_length(r, o)?;
    let pl = o.path_length_unchecked(&p.nodes);
    Ok(pc * length_score_from(epl, pl))
}

/// Computes all metrics for one pair in a single pass over the inputs.
pub fn evaluate(p: &Route, r: &Route, o: &DistanceOracle, cfg: &MetricConfig) -> Result<MetricReport> {
    check_pair(p, r, o)?;
    let pl_r = reference_length(r, o)?;
    let g = goal(r);
    let to_goal = o.row(g);

    let pl = o.path_length_unchecked(&p.nodes);
    let ne = to_goal[goal(p).index()];
    let one = p
        .nodes
        .iter()
        .map(|n| to_goal[n.index()])
        .fold(f64::INFINITY, f64::min);
    let sr = indicator(ne <= cfg.success_threshold);
    let osr = indicator(one <= cfg.success_threshold);
    let spl = spl_from(sr, to_goal[p.nodes[0].index()], pl);
    let sed = sed_from(sr, &p.nodes, &r.nodes);
    let pc = coverage_unchecked(&p.nodes, &r.nodes, o, cfg.decay_threshold);
    let epl = pc * pl_r;
    let ls = length_score_from(epl, pl);
    Ok(MetricReport {
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
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::line;
    use crate::graph::NavGraph;

    const TOL: f64 = 1e-6;

    struct Line5 {
        g: NavGraph,
        o: DistanceOracle,
        r: Route,
    }

    fn line5() -> Line5 {
        let g = line(5, 1.0);
        let o = DistanceOracle::build(&g);
        let r = g.route(&["v0", "v1", "v2", "v3", "v4"]).unwrap();
        Line5 { g, o, r }
    }

    impl Line5 {
        fn p(&self, ids: &[&str]) -> Route {
            self.g.route(ids).unwrap()
        }
    }

    fn cfg(t: f64) -> MetricConfig {
        MetricConfig::new(t).unwrap()
    }

    #[test]
    fn navigation_errors() {
        let f = line5();
        assert_eq!(navigation_error(&f.r, &f.r, &f.o).unwrap(), 0.0);
        assert_eq!(navigation_error(&f.p(&["v0", "v1", "v2"]), &f.r, &f.o).unwrap(), 2.0);
        assert_eq!(navigation_error(&f.p(&["v0"]), &f.r, &f.o).unwrap(), 4.0);
        assert_eq!(oracle_navigation_error(&f.r, &f.r, &f.o).unwrap(), 0.0);
        assert_eq!(
            oracle_navigation_error(&f.p(&["v0", "v1", "v2"]), &f.r, &f.o).unwrap(),
            2.0
        );
        assert_eq!(
            oracle_navigation_error(&f.p(&["v0", "v1", "v2", "v3", "v2"]), &f.r, &f.o).unwrap(),
            1.0
        );
    }

    #[test]
    fn success_indicators() {
        let f = line5();
        let half = f.p(&["v0", "v1", "v2"]);
        assert_eq!(success_rate(&f.r, &f.r, &f.o, &cfg(1.0)).unwrap(), 1.0);
        assert_eq!(success_rate(&half, &f.r, &f.o, &cfg(1.0)).unwrap(), 0.0);
        assert_eq!(oracle_success_rate(&half, &f.r, &f.o, &cfg(1.0)).unwrap(), 0.0);
        assert_eq!(success_rate(&half, &f.r, &f.o, &cfg(3.0)).unwrap(), 1.0);
        // NE == d_th is a success.
        assert_eq!(success_rate(&half, &f.r, &f.o, &cfg(2.0)).unwrap(), 1.0);
    }

    #[test]
    fn spl_values() {
        let f = line5();
        assert_eq!(spl(&f.r, &f.r, &f.o, &cfg(3.0)).unwrap(), 1.0);
        let half = f.p(&["v0", "v1", "v2"]);
        assert_eq!(spl(&half, &f.r, &f.o, &cfg(3.0)).unwrap(), 1.0);
        let long = f.p(&["v0", "v1", "v2", "v1", "v2", "v3", "v2", "v3", "v4"]);
        assert_eq!(o_len(&f, &long), 8.0);
        assert_eq!(spl(&long, &f.r, &f.o, &cfg(3.0)).unwrap(), 0.5);
        assert_eq!(spl(&half, &f.r, &f.o, &cfg(1.0)).unwrap(), 0.0);
    }

    fn o_len(f: &Line5, p: &Route) -> f64 {
        f.o.path_length(p).unwrap()
    }

    #[test]
    fn sed_values() {
        let f = line5();
        assert_eq!(sed(&f.r, &f.r, &f.o, &cfg(1.0)).unwrap(), 1.0);
        let short_r = f.p(&["v0", "v1", "v2"]);
        let p = f.p(&["v0", "v1"]);
        assert_eq!(sed(&p, &short_r, &f.o, &cfg(1.0)).unwrap(), 0.5);
        // Oscillation sharing only the first action; length-matched to R.
        let osc = f.p(&["v0", "v1", "v0", "v1", "v0"]);
        assert_eq!(edit_distance(&actions(&osc.nodes), &actions(&f.r.nodes)), 3);
        assert_eq!(sed(&osc, &f.r, &f.o, &cfg(1.0)).unwrap(), 0.0);
        let back = f.p(&["v1", "v0", "v1", "v0", "v1"]);
        assert_eq!(edit_distance(&actions(&back.nodes), &actions(&f.r.nodes)), 4);
        assert_eq!(sed(&back, &f.r, &f.o, &cfg(3.0)).unwrap(), 0.0);
        // Zero actions on both sides.
        let single = f.p(&["v4"]);
        assert_eq!(sed(&single, &single, &f.o, &cfg(1.0)).unwrap(), 1.0);
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance::<u8>(&[], &[]), 0);
        assert_eq!(edit_distance(b"kitten", b"sitting"), 3);
        assert_eq!(edit_distance(b"", b"abc"), 3);
        assert_eq!(edit_distance(b"abc", b""), 3);
        assert_eq!(edit_distance(b"flaw", b"lawn"), 2);
    }

    #[test]
    fn coverage_values() {
        let f = line5();
        assert_eq!(path_coverage(&f.r, &f.r, &f.o, &cfg(1.0)).unwrap(), 1.0);
        let half = f.p(&["v0", "v1", "v2"]);
        let pc = path_coverage(&half, &f.r, &f.o, &cfg(1.0)).unwrap();
        assert!((pc - 0.700643).abs() < TOL, "{pc}");
        let goal_only = f.p(&["v4"]);
        let pc = path_coverage(&goal_only, &f.r, &f.o, &cfg(1.0)).unwrap();
        assert!((pc - 0.314263).abs() < TOL, "{pc}");
    }

    #[test]
    fn length_score_values() {
        let f = line5();
        assert_eq!(length_score(&f.r, &f.r, &f.o, &cfg(1.0)).unwrap().0, 1.0);
        let half = f.p(&["v0", "v1", "v2"]);
        let (ls, epl) = length_score(&half, &f.r, &f.o, &cfg(1.0)).unwrap();
        assert!((epl - 2.802572).abs() < TOL, "{epl}");
        assert!((ls - 0.777382).abs() < TOL, "{ls}");
        let single = f.p(&["v2"]);
        assert_eq!(length_score(&single, &single, &f.o, &cfg(1.0)).unwrap().0, 1.0);
        let moved = f.p(&["v2", "v3"]);
        assert_eq!(length_score(&moved, &single, &f.o, &cfg(1.0)).unwrap().0, 0.0);
    }

    #[test]
    fn cls_values() {
        let f = line5();
        assert_eq!(cls(&f.r, &f.r, &f.o, &cfg(1.0)).unwrap(), 1.0);
        let half = f.p(&["v0", "v1", "v2"]);
        let c = cls(&half, &f.r, &f.o, &cfg(1.0)).unwrap();
        assert!((c - 0.544667).abs() < TOL, "{c}");
        let start = f.p(&["v0"]);
        let (ls, epl) = length_score(&start, &f.r, &f.o, &cfg(1.0)).unwrap();
        assert!((epl - 1.257054).abs() < TOL, "{epl}");
        assert_eq!(ls, 0.5);
        let c = cls(&start, &f.r, &f.o, &cfg(1.0)).unwrap();
        assert!((c - 0.157132).abs() < TOL, "{c}");
    }

    #[test]
    fn evaluate_identity_report() {
        let f = line5();
        let rep = evaluate(&f.r, &f.r, &f.o, &cfg(3.0)).unwrap();
        assert_eq!(rep.ne, 0.0);
        assert_eq!(rep.sr, 1.0);
        assert_eq!(rep.spl, 1.0);
        assert_eq!(rep.sed, 1.0);
        assert_eq!(rep.cls, 1.0);
        assert_eq!(rep.pl, 4.0);
    }

    #[test]
    fn evaluate_half_path_at_three_meters() {
        let f = line5();
        let half = f.p(&["v0", "v1", "v2"]);
        let rep = evaluate(&half, &f.r, &f.o, &cfg(3.0)).unwrap();
        let pc = (3.0 + (-1.0f64 / 3.0).exp() + (-2.0f64 / 3.0).exp()) / 5.0;
        let epl = pc * 4.0;
        let ls = epl / (epl + (epl - 2.0f64).abs());
        assert_eq!(rep.sr, 1.0);
        assert_eq!(rep.spl, 1.0);
        assert!((rep.pc - pc).abs() < 1e-12);
        assert!((rep.cls - pc * ls).abs() < 1e-12);
        assert!((rep.cls - 0.600429).abs() < TOL, "{}", rep.cls);
    }

    #[test]
    fn evaluate_matches_individual_functions() {
        let f = line5();
        let c = cfg(1.5);
        let p = f.p(&["v1", "v3", "v2", "v4", "v3"]);
        let rep = evaluate(&p, &f.r, &f.o, &c).unwrap();
        assert_eq!(rep.pl, path_length(&p, &f.o).unwrap());
        assert_eq!(rep.ne, navigation_error(&p, &f.r, &f.o).unwrap());
        assert_eq!(rep.one, oracle_navigation_error(&p, &f.r, &f.o).unwrap());
        assert_eq!(rep.sr, success_rate(&p, &f.r, &f.o, &c).unwrap());
        assert_eq!(rep.osr, oracle_success_rate(&p, &f.r, &f.o, &c).unwrap());
        assert_eq!(rep.spl, spl(&p, &f.r, &f.o, &c).unwrap());
        assert_eq!(rep.sed, sed(&p, &f.r, &f.o, &c).unwrap());
        assert_eq!(rep.pc, path_coverage(&p, &f.r, &f.o, &c).unwrap());
        assert_eq!((rep.ls, rep.epl), length_score(&p, &f.r, &f.o, &c).unwrap());
        assert_eq!(rep.cls, cls(&p, &f.r, &f.o, &c).unwrap());
    }

    #[test]
    fn graph_mismatch_and_bad_threshold() {
        let f = line5();
        let other = Route::new("other", vec![NodeIdx(0)]);
        assert!(matches!(
            evaluate(&other, &f.r, &f.o, &cfg(3.0)),
            Err(Error::GraphMismatch { .. })
        ));
        assert!(MetricConfig::new(0.0).is_err());
        assert!(MetricConfig::new(f64::NAN).is_err());
        assert!(MetricConfig::with_decay(3.0, -1.0).is_err());
    }

    #[test]
    fn disconnected_prediction_degrades_gracefully() {
        let mut b = NavGraph::builder("split");
        let a = b.add_node("a", [0.0; 3]).unwrap();
        let c = b.add_node("c", [1.0, 0.0, 0.0]).unwrap();
        b.add_node("island", [9.0, 0.0, 0.0]).unwrap();
        b.add_edge(a, c).unwrap();
        let g = b.build();
        let o = DistanceOracle::build(&g);
        let r = g.route(&["a", "c"]).unwrap();
        let p = g.route(&["island"]).unwrap();
        let rep = evaluate(&p, &r, &o, &cfg(3.0)).unwrap();
        assert_eq!(rep.sr, 0.0);
        assert_eq!(rep.spl, 0.0);
        assert_eq!(rep.pc, 0.0);
        assert_eq!(rep.cls, 0.0);
        assert!(rep.ne.is_infinite());
        let teleport = g.route(&["a", "island"]).unwrap();
        assert!(matches!(
            evaluate(&r, &teleport, &o, &cfg(3.0)),
            Err(Error::DisconnectedReference)
        ));
    }
}
