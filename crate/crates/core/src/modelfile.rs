//! The JSON model file format.
//!
//! ```json
//! {
//!   "values": ["u"],
//!   "points": ["p0", "p1", "p2", "p3"],
//!   "opens": [["p0", "p1", "p2"], ["p0", "p1", "p3"]],
//!   "predicates": { "vote": { "p0": { "u": "T" } } }
//! }
//! ```
//!
//! Missing predicate, point or value entries read as `F`. Saving writes every
//! cell, with object keys sorted, so a saved file loads and saves back to the
//! same bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::kernel3::TruthValue;
use crate::semantics::{Model, ModelError};
use crate::semitopo::{Semitopology, SemitopologyError};

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    values: Vec<String>,
    points: Vec<String>,
    #[serde(default)]
    opens: Vec<Vec<String>>,
    #[serde(default)]
    predicates: BTreeMap<String, BTreeMap<String, BTreeMap<String, TruthValue>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Space(#[from] SemitopologyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("predicate {pred:?} mentions unknown point {point:?}")]
    UnknownPoint { pred: String, point: String },
    #[error("predicate {pred:?} at {point:?} mentions unknown value {value:?}")]
    UnknownValue { pred: String, point: String, value: String },
}

/// Parse a model. `extra_predicates` are declared in addition to those the
/// file mentions, as `F` everywhere.
pub fn load_model(text: &str, extra_predicates: &[String]) -> Result<Model, ModelFileError> {
    let file: ModelFile = serde_json::from_str(text)?;
    let space = Semitopology::new(&file.points, &file.opens)?;
    let mut preds: Vec<String> = file.predicates.keys().cloned().collect();
    for p in extra_predicates {
        if !preds.contains(p) {
            preds.push(p.clone());
        }
    }
    let mut model = Model::new(&file.values, space, &preds)?;
    for (pred, by_point) in &file.predicates {
        let pi = model.predicate_index(pred).expect("declared above");
        for (point, by_value) in by_point {
            let pt = model
                .space()
                .point_index(point)
                .ok_or_else(|| ModelFileError::UnknownPoint { pred: pred.clone(), point: point.clone() })?;
            for (value, tv) in by_value {
                let vi = model.value_index(value).ok_or_else(|| ModelFileError::UnknownValue {
                    pred: pred.clone(),
                    point: point.clone(),
                    value: value.clone(),
                })?;
                model.set_at(pi, pt, vi, *tv);
            }
        }
    }
    Ok(model)
}

/// Canonical text of a model: every cell written, keys sorted, basis listed
/// in the semitopology's order. Ends with a newline.
pub fn save_model(m: &Model) -> String {
    let space = m.space();
    let mut predicates = BTreeMap::new();
    for (pi, pred) in m.predicates().iter().enumerate() {
        let mut by_point = BTreeMap::new();
        for (pt, point) in space.points().iter().enumerate() {
            let by_value: BTreeMap<String, TruthValue> =
                m.values().iter().enumerate().map(|(vi, v)| (v.clone(), m.get_at(pi, pt, vi))).collect();
            by_point.insert(point.clone(), by_value);
        }
        predicates.insert(pred.clone(), by_point);
    }
    let file = ModelFile {
        values: m.values().to_vec(),
        points: space.points().to_vec(),
        opens: space.basis().iter().map(|o| space.names_of(*o)).collect(),
        predicates,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model files always serialize");
    s.push('\n');
    s
}

/// SHA-256 of the canonical text, in hex.
pub fn model_digest(m: &Model) -> String {
    let hash = Sha256::digest(save_model(m).as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}
