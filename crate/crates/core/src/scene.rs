//! Graphs paired with their distance oracles, keyed by graph id.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::episodes::Episode;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{load_connectivity, LoadReport, NavGraph};
use crate::oracle::DistanceOracle;

#[derive(Debug, Clone)]
pub struct Scene {
    pub graph: NavGraph,
    pub oracle: DistanceOracle,
}

#[derive(Debug, Clone, Default)]
pub struct SceneSet {
    scenes: BTreeMap<String, Scene>,
}

impl SceneSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_graphs(graphs: Vec<NavGraph>, exec: Exec) -> Self {
        let oracles = exec.map_slice(&graphs, |g| DistanceOracle::build_with(g, exec));
        let scenes = graphs
            .into_iter()
            .zip(oracles)
            .map(|(graph, oracle)| (graph.graph_id().to_string(), Scene { graph, oracle }))
            .collect();
        SceneSet { scenes }
    }

    pub fn insert(&mut self, graph: NavGraph) {
        let oracle = DistanceOracle::build(&graph);
        self.scenes
            .insert(graph.graph_id().to_string(), Scene { graph, oracle });
    }

    /// Loads connectivity for `graph_ids` from `dir`, reusing oracle caches in
    /// `cache_dir` when given.
    pub fn load(
        dir: &Path,
        graph_ids: &BTreeSet<String>,
        cache_dir: Option<&Path>,
        exec: Exec,
    ) -> Result<(Self, BTreeMap<String, LoadReport>)> {
        let ids: Vec<&String> = graph_ids.iter().collect();
        let loaded = exec.map_slice(&ids, |id| -> Result<(Scene, LoadReport)> {
            let (graph, report) = load_connectivity(dir, id)?;
            let oracle = match cache_dir {
                Some(c) => DistanceOracle::load_or_build(c, &graph, exec)?,
                None => DistanceOracle::build_with(&graph, exec),
            };
            Ok((Scene { graph, oracle }, report))
        });
        let mut set = SceneSet::new();
        let mut reports = BTreeMap::new();
        for (id, res) in ids.into_iter().zip(loaded) {
            let (scene, report) = res?;
            set.scenes.insert(id.clone(), scene);
            reports.insert(id.clone(), report);
        }
        Ok((set, reports))
    }

    pub fn get(&self, graph_id: &str) -> Result<&Scene> {
        self.scenes
            .get(graph_id)
            .ok_or_else(|| Error::MissingGraph(graph_id.to_string()))
    }

    pub fn graphs(&self) -> BTreeMap<String, NavGraph> {
        self.scenes
            .iter()
            .map(|(k, s)| (k.clone(), s.graph.clone()))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Scene)> {
        self.scenes.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }
}

pub fn graph_ids_of(episodes: &[Episode]) -> BTreeSet<String> {
    episodes.iter().map(|e| e.graph_id.clone()).collect()
}
