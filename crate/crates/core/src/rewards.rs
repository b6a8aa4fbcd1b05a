//! Per-step reward traces for trainers.
//!
//! A trajectory `s_1..s_T` yields `T` rewards: one per transition for
//! `t < T`, then the terminal reward at `t = T`. Discounting is left to the
//! trainer.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::Route;
use crate::metrics::{self, MetricConfig};
use crate::oracle::DistanceOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    DenseGoal,
    SparseFidelity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTrace {
    pub kind: RewardKind,
    /// `rewards[t]` for `t = 0..T`; the last entry is the terminal reward.
    pub rewards: Vec<f64>,
    pub config: MetricConfig,
    /// Whether the CLS-improvement shaping term fills the non-terminal steps.
    pub cls_shaping: bool,
}

impl RewardTrace {
    pub fn terminal(&self) -> f64 {
        *self.rewards.last().expect("trace is never empty")
    }

    pub fn steps(&self) -> &[f64] {
        &self.rewards[..self.rewards.len() - 1]
    }

    pub fn total(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Goal-distance progress per step plus a success indicator at the end.
///
/// Non-terminal steps are in meters; the terminal reward is 0 or 1.
pub fn dense_goal_reward(
    trajectory: &Route,
    reference: &Route,
    o: &DistanceOracle,
    cfg: &MetricConfig,
) -> Result<RewardTrace> {
    o.check_route(trajectory)?;
    o.check_route(reference)?;
    let to_goal = o.row(reference.last().expect("checked nonempty"));
    let d: Vec<f64> = trajectory.nodes.iter().map(|n| to_goal[n.index()]).collect();
    let mut rewards: Vec<f64> = d.windows(2).map(|w| w[0] - w[1]).collect();
    let last = *d.last().expect("checked nonempty");
    rewards.push(if last <= cfg.success_threshold { 1.0 } else { 0.0 });
    Ok(RewardTrace {
        kind: RewardKind::DenseGoal,
        rewards,
        config: *cfg,
        cls_shaping: false,
    })
}

/// Zero until the final step, which pays success plus CLS of the whole
/// trajectory.
///
/// With `cls_shaping`, step `t < T` instead pays
/// `CLS(s_1..s_t+1) - CLS(s_1..s_t)`.
pub fn sparse_fidelity_reward(
    trajectory: &Route,
    reference: &Route,
    o: &DistanceOracle,
    cfg: &MetricConfig,
    cls_shaping: bool,
) -> Result<RewardTrace> {
    let report = metrics::evaluate(trajectory, reference, o, cfg)?;
    let t = trajectory.len();
    let mut rewards = vec![0.0; t];
    if cls_shaping {
        let mut prev = prefix_cls(trajectory, 1, reference, o, cfg)?;
        for (step, slot) in rewards.iter_mut().enumerate().take(t - 1) {
            let cur = prefix_cls(trajectory, step + 2, reference, o, cfg)?;
            *slot = cur - prev;
            prev = cur;
        }
    }
    rewards[t - 1] = report.sr + report.cls;
    Ok(RewardTrace {
        kind: RewardKind::SparseFidelity,
        rewards,
        config: *cfg,
        cls_shaping,
    })
}

fn prefix_cls(
    trajectory: &Route,
    len: usize,
    reference: &Route,
    o: &DistanceOracle,
    cfg: &MetricConfig,
) -> Result<f64> {
    let prefix = Route::new(trajectory.graph_id.clone(), trajectory.nodes[..len].to_vec());
    metrics::cls(&prefix, reference, o, cfg)
}
