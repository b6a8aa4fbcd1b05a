//! Instruction-fidelity evaluation for graph-based navigation.
//!
//! * [`graph`] and [`oracle`]: environment graphs and all-pairs shortest paths.
//! * [`metrics`]: PL, NE, ONE, SR, OSR, SPL, SED and the coverage/length-score
//!   metric CLS.
//! * [`episodes`]: R2R-style episode files and JSON Lines predictions.
//! * [`compose`]: joins short paths into long ones and summarizes datasets.
//! * [`rewards`]: goal-oriented and fidelity-oriented reward traces.
//! * [`baseline`]: the random-walk baseline and batch evaluation.
//! * [`fixtures`]: deterministic synthetic graphs for tests and demos.

pub mod baseline;
pub mod compose;
pub mod episodes;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod graph;
pub mod metrics;
pub mod oracle;
pub mod rewards;
pub mod scene;
pub mod summary;

pub use error::{Error, Result};
pub use exec::Exec;
pub use graph::{NavGraph, NavPath, NodeIdx, Route};
pub use metrics::{MetricConfig, MetricReport};
pub use oracle::DistanceOracle;
pub use scene::{Scene, SceneSet};
