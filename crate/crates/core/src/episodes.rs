//! Instruction/path episodes and agent predictions.
//!
//! Episode files are JSON arrays using the R2R field names (`path_id`,
//! `scan`, `path`, `heading`, `instructions`); composed episodes carry an
//! extra `provenance` object. Prediction files are JSON Lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{validate_path, NavGraph, NavPath, Violation};

/// Where a composed episode came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub first_path_id: u64,
    pub second_path_id: u64,
    /// `(first instruction index, second instruction index)` for each joined instruction.
    pub instruction_pairs: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub path_id: u64,
    #[serde(rename = "scan")]
    pub graph_id: String,
    #[serde(rename = "path")]
    pub reference: Vec<String>,
    pub heading: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    pub instructions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Composition>,
}

impl Episode {
    pub fn reference_path(&self) -> NavPath {
        NavPath::new(self.graph_id.clone(), self.reference.iter().cloned())
    }

    pub fn instr_id(&self, instruction_index: usize) -> String {
        format!("{}_{}", self.path_id, instruction_index)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.reference.is_empty() {
            return Err(format!("path_id {}: empty path", self.path_id));
        }
        if self.instructions.is_empty() {
            return Err(format!("path_id {}: no instructions", self.path_id));
        }
        if !self.heading.is_finite() {
            return Err(format!("path_id {}: heading is not finite", self.path_id));
        }
        Ok(())
    }
}

/// Number of instruction/path samples (one per instruction).
pub fn sample_count(episodes: &[Episode]) -> usize {
    episodes.iter().map(|e| e.instructions.len()).sum()
}

pub fn parse_episodes(text: &str) -> Result<Vec<Episode>> {
    let raw: Vec<serde_json::Value> = serde_json::from_str(text)?;
    raw.into_iter()
        .enumerate()
        .map(|(index, v)| {
            let ep: Episode = serde_json::from_value(v).map_err(|e| Error::Schema {
                index,
                message: e.to_string(),
            })?;
            ep.check().map_err(|message| Error::Schema { index, message })?;
            Ok(ep)
        })
        .collect()
}

pub fn load_episodes(path: &Path) -> Result<Vec<Episode>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_episodes(&text)
}

/// Canonical serialization: one compact record per line inside a JSON array.
pub fn episodes_to_string(episodes: &[Episode]) -> String {
    let mut out = String::from("[");
    for (i, ep) in episodes.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&serde_json::to_string(ep).expect("episode serializes"));
    }
    out.push_str("\n]\n");
    out
}

pub fn write_episodes(episodes: &[Episode], path: &Path) -> Result<()> {
    fs::write(path, episodes_to_string(episodes)).map_err(|e| Error::io(path, e))
}

/// Checks every reference path against its graph; returns `(record index, violations)`.
pub fn validate_episodes(
    episodes: &[Episode],
    graphs: &BTreeMap<String, NavGraph>,
) -> Result<Vec<(usize, Vec<Violation>)>> {
    let mut bad = Vec::new();
    for (i, ep) in episodes.iter().enumerate() {
        let g = graphs
            .get(&ep.graph_id)
            .ok_or_else(|| Error::MissingGraph(ep.graph_id.clone()))?;
        let v = validate_path(g, &ep.reference_path());
        if !v.is_empty() {
            bad.push((i, v));
        }
    }
    Ok(bad)
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub instr_id: String,
    pub trajectory: Vec<String>,
}

// Accepts bare viewpoint ids or R2R-style `[viewpoint, heading, elevation]` steps.
#[derive(Deserialize)]
#[serde(untagged)]
enum Step {
    Id(String),
    Full(Vec<serde_json::Value>),
}

#[derive(Deserialize)]
struct RawPrediction {
    instr_id: String,
    trajectory: Vec<Step>,
}

impl Prediction {
    /// Splits `"<path_id>_<instruction index>"`.
    pub fn parse_instr_id(&self) -> Option<(u64, usize)> {
        parse_instr_id(&self.instr_id)
    }
}

pub fn parse_instr_id(id: &str) -> Option<(u64, usize)> {
    let (path, idx) = id.rsplit_once('_')?;
    Some((path.parse().ok()?, idx.parse().ok()?))
}

fn parse_prediction_line(line: &str) -> std::result::Result<Prediction, String> {
    let raw: RawPrediction = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let trajectory = raw
        .trajectory
        .into_iter()
        .map(|s| match s {
            Step::Id(id) => Ok(id),
            Step::Full(v) => v
                .first()
                .and_then(|x| x.as_str())
                .map(str::to_string)
                .ok_or_else(|| "trajectory step must start with a viewpoint id".to_string()),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if trajectory.is_empty() {
        return Err("empty trajectory".into());
    }
    Ok(Prediction {
        instr_id: raw.instr_id,
        trajectory,
    })
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::PredictionLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let p = parse_prediction_line(&line).map_err(|message| Error::PredictionLine {
            line: line_no,
            message,
        })?;
        out.push(p);
    }
    let mut seen = BTreeSet::new();
    let dups: BTreeSet<String> = out
        .iter()
        .filter(|p| !seen.insert(p.instr_id.as_str()))
        .map(|p| p.instr_id.clone())
        .collect();
    if !dups.is_empty() {
        return Err(Error::DuplicateInstrIds(dups.into_iter().collect()));
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(std::io::BufReader::new(f))
}

pub fn predictions_to_string(preds: &[Prediction]) -> String {
    let mut out = String::new();
    for p in preds {
        out.push_str(&serde_json::to_string(p).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

/// One prediction per instruction sample, following the reference exactly.
pub fn reference_predictions(episodes: &[Episode]) -> Vec<Prediction> {
    episodes
        .iter()
        .flat_map(|ep| {
            (0..ep.instructions.len()).map(move |k| Prediction {
                instr_id: ep.instr_id(k),
                trajectory: ep.reference.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_record_loads() {
        let eps = parse_episodes(
            r#"[{"path_id":1,"scan":"s","path":["a","b"],"heading":0,"instructions":["go"]}]"#,
        )
        .unwrap();
        assert_eq!(eps.len(), 1);
        assert_eq!(eps[0].graph_id, "s");
        assert_eq!(eps[0].reference, ["a", "b"]);
        assert_eq!(eps[0].provenance, None);
        assert_eq!(sample_count(&eps), 1);
    }

    #[test]
    fn empty_path_is_a_schema_error_with_index() {
        let err = parse_episodes(
            r#"[{"path_id":1,"scan":"s","path":["a"],"heading":0,"instructions":["go"]},
                {"path_id":2,"scan":"s","path":[],"heading":0,"instructions":["go"]}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema { index: 1, .. }), "{err}");
        let err = parse_episodes(r#"[{"path_id":1,"scan":"s","path":["a"],"heading":0,"instructions":[]}]"#)
            .unwrap_err();
        assert!(matches!(err, Error::Schema { index: 0, .. }));
        let err = parse_episodes(r#"[{"path_id":"x"}]"#).unwrap_err();
        assert!(matches!(err, Error::Schema { index: 0, .. }));
    }

    #[test]
    fn r2r_extra_fields_survive() {
        let text = r#"[{"distance":10.86,"scan":"8WUmhLawc2A","path_id":4332,"path":["a","b"],"heading":5.657,"instructions":["x","y","z"]}]"#;
        let eps = parse_episodes(text).unwrap();
        assert_eq!(eps[0].distance, Some(10.86));
        assert_eq!(parse_episodes(&episodes_to_string(&eps)).unwrap(), eps);
    }

    #[test]
    fn composed_round_trip_is_byte_stable() {
        let eps = vec![Episode {
            path_id: 7,
            graph_id: "s".into(),
            reference: vec!["a".into(), "b".into()],
            heading: 0.1 + 0.2,
            distance: None,
            instructions: vec!["go left turn".into()],
            provenance: Some(Composition {
                first_path_id: 1,
                second_path_id: 2,
                instruction_pairs: vec![[0, 0]],
            }),
        }];
        let text = episodes_to_string(&eps);
        let back = parse_episodes(&text).unwrap();
        assert_eq!(back, eps);
        assert_eq!(episodes_to_string(&back), text);
    }

    #[test]
    fn predictions_parse_both_step_forms() {
        let text = "{\"instr_id\":\"3_0\",\"trajectory\":[\"a\",\"b\"]}\n\n{\"instr_id\":\"3_1\",\"trajectory\":[[\"a\",0.0,0.0]]}\n";
        let preds = read_predictions(text.as_bytes()).unwrap();
        assert_eq!(preds.len(), 2);
        assert_eq!(preds[1].trajectory, ["a"]);
        assert_eq!(preds[0].parse_instr_id(), Some((3, 0)));
    }

    #[test]
    fn malformed_prediction_names_line() {
        let text = "{\"instr_id\":\"1_0\",\"trajectory\":[\"a\"]}\nnot json\n";
        let err = read_predictions(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::PredictionLine { line: 2, .. }), "{err}");
        let text = "{\"instr_id\":\"1_0\",\"trajectory\":[]}\n";
        assert!(matches!(
            read_predictions(text.as_bytes()).unwrap_err(),
            Error::PredictionLine { line: 1, .. }
        ));
    }

    #[test]
    fn duplicate_instr_ids_are_listed() {
        let text = "{\"instr_id\":\"1_0\",\"trajectory\":[\"a\"]}\n{\"instr_id\":\"1_0\",\"trajectory\":[\"b\"]}\n{\"instr_id\":\"2_0\",\"trajectory\":[\"b\"]}\n";
        match read_predictions(text.as_bytes()).unwrap_err() {
            Error::DuplicateInstrIds(ids) => assert_eq!(ids, ["1_0"]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn instr_id_parsing() {
        assert_eq!(parse_instr_id("4332_2"), Some((4332, 2)));
        assert_eq!(parse_instr_id("4332"), None);
        assert_eq!(parse_instr_id("a_b"), None);
    }
}
