//! JSON scenario documents.
//!
//! ```json
//! {
//!   "dimension": 100.0, "alpha": 3.0, "source": 0, "dest": 1,
//!   "nodes": [{"id": 0, "x": 0.0, "y": 0.0, "noise_var": 1.0}, ...],
//!   "wardens": [{"x": 12.5, "y": 40.0, "noise_var": 1.0}, ...]
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so `save` followed by
//! `load` reproduces every field bit-exactly.

use std::fs;
use std::path::Path;

use covert_route_core::scenario::{Point, SystemNode, Warden};
use covert_route_core::{NodeId, Scenario, ScenarioError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: malformed scenario: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{path}: invalid scenario: {source}")]
    Invalid { path: String, source: ScenarioError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: usize,
    x: f64,
    y: f64,
    noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WardenRecord {
    x: f64,
    y: f64,
    noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    dimension: f64,
    alpha: f64,
    source: usize,
    dest: usize,
    nodes: Vec<NodeRecord>,
    wardens: Vec<WardenRecord>,
}

impl From<&Scenario> for ScenarioDocument {
    fn from(s: &Scenario) -> Self {
        Self {
            dimension: s.dimension(),
            alpha: s.alpha(),
            source: s.source().0,
            dest: s.dest().0,
            nodes: s
                .nodes()
                .iter()
                .map(|n| NodeRecord { id: n.id.0, x: n.position.x, y: n.position.y, noise_var: n.noise_var })
                .collect(),
            wardens: s
                .wardens()
                .iter()
                .map(|w| WardenRecord { x: w.position.x, y: w.position.y, noise_var: w.noise_var })
                .collect(),
        }
    }
}

impl ScenarioDocument {
    fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| SystemNode { id: NodeId(n.id), position: Point::new(n.x, n.y), noise_var: n.noise_var })
            .collect();
        let wardens = self
            .wardens
            .into_iter()
            .map(|w| Warden { position: Point::new(w.x, w.y), noise_var: w.noise_var })
            .collect();
        Scenario::new(self.dimension, self.alpha, nodes, wardens, NodeId(self.source), NodeId(self.dest))
    }
}

/// Renders a scenario as pretty-printed JSON with a trailing newline.
pub fn to_json(scenario: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(&ScenarioDocument::from(scenario))
        .expect("scenario documents contain only finite numbers");
    text.push('\n');
    text
}

/// Parses and validates a scenario document. `origin` labels error messages.
pub fn from_json(text: &str, origin: &str) -> Result<Scenario, FileError> {
    let doc: ScenarioDocument =
        serde_json::from_str(text).map_err(|source| FileError::Parse { path: origin.to_owned(), source })?;
    doc.into_scenario().map_err(|source| FileError::Invalid { path: origin.to_owned(), source })
}

pub fn load(path: &Path) -> Result<Scenario, FileError> {
    let label = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| FileError::Io { path: label.clone(), source })?;
    from_json(&text, &label)
}

pub fn save(scenario: &Scenario, path: &Path) -> Result<(), FileError> {
    fs::write(path, to_json(scenario)).map_err(|source| FileError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use covert_route_core::RandomScenario;

    #[test]
    fn text_round_trip_is_bit_exact() {
        let s = RandomScenario {
            n_relays: 9,
            n_wardens: 4,
            dimension: 100.0,
            alpha: 3.0,
            node_noise: 0.7,
            warden_noise: 1.3,
        }
        .generate(11)
        .unwrap();
        let back = from_json(&to_json(&s), "mem").unwrap();
        assert_eq!(back, s);
        for (a, b) in s.nodes().iter().zip(back.nodes()) {
            assert_eq!(a.position.x.to_bits(), b.position.x.to_bits());
            assert_eq!(a.position.y.to_bits(), b.position.y.to_bits());
        }
    }

    #[test]
    fn alpha_below_two_is_rejected() {
        let text = r#"{"dimension": 10, "alpha": 1.5, "source": 0, "dest": 1,
            "nodes": [{"id": 0, "x": 0, "y": 0, "noise_var": 1}, {"id": 1, "x": 1, "y": 1, "noise_var": 1}],
            "wardens": []}"#;
        let err = from_json(text, "f.json").unwrap_err();
        assert!(err.to_string().contains("alpha < 2"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"dimension": 10, "alpha": 2, "source": 0, "dest": 1, "nodes": [], "wardens": [], "extra": 1}"#;
        assert!(matches!(from_json(text, "f"), Err(FileError::Parse { .. })));
    }
}
