//! JSON clue files.
//!
//! ```json
//! {
//!   "sr":  [["country", "nationality"]],
//!   "rer": [{"relations": ["capital", "capital"], "k_score": "-inf"}],
//!   "ou":  ["capital", {"relation": "nationality", "ratio": 0.97}]
//! }
//! ```
//!
//! Bare entries (relation arrays, relation strings) are manual clues. Object
//! entries carry the mined score; `k_score` is a number or the string `"-inf"`.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{ClueKind, ClueSet, Provenance, TypeClue, UniquenessClue};
use crate::error::{Error, Result};

fn relation_name(v: &Value) -> Option<String> {
    v.as_str()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
}

fn relation_pair(v: &Value) -> Option<(String, String)> {
    match v.as_array().map(Vec::as_slice) {
        Some([a, b]) => Some((relation_name(a)?, relation_name(b)?)),
        _ => None,
    }
}

fn score(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64().filter(|x| *x <= 0.0),
        Value::String(s) if s == "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

fn type_entry(v: &Value) -> Option<(String, String, f64, Provenance)> {
    if let Some((a, b)) = relation_pair(v) {
        return Some((a, b, f64::NEG_INFINITY, Provenance::Manual));
    }
    let obj = v.as_object()?;
    let (a, b) = relation_pair(obj.get("relations")?)?;
    let k = score(obj.get("k_score")?)?;
    if obj.keys().any(|k| k != "relations" && k != "k_score") {
        return None;
    }
    Some((a, b, k, Provenance::Mined))
}

fn unique_entry(v: &Value) -> Option<(String, f64, Provenance)> {
    if let Some(r) = relation_name(v) {
        return Some((r, 1.0, Provenance::Manual));
    }
    let obj = v.as_object()?;
    let r = relation_name(obj.get("relation")?)?;
    let ratio = obj
        .get("ratio")?
        .as_f64()
        .filter(|x| (0.0..=1.0).contains(x))?;
    if obj.keys().any(|k| k != "relation" && k != "ratio") {
        return None;
    }
    Some((r, ratio, Provenance::Mined))
}

/// Parses a clue document, collecting every problem before failing.
pub fn parse_clues(text: &str) -> Result<ClueSet> {
    if text.trim().is_empty() {
        return Ok(ClueSet::new());
    }
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    let Some(doc) = doc.as_object() else {
        return Err(Error::Validation(vec![
            "clue file must be a JSON object".into()
        ]));
    };

    let mut problems = Vec::new();
    let mut out = ClueSet::new();
    for (tag, entries) in doc {
        let Some(kind) = ClueKind::parse(tag) else {
            problems.push(format!("unknown clue kind {tag:?}"));
            continue;
        };
        let Some(entries) = entries.as_array() else {
            problems.push(format!("{tag}: expected an array"));
            continue;
        };
        for (i, entry) in entries.iter().enumerate() {
            if kind.is_type_clue() {
                match type_entry(entry) {
                    Some((a, b, k, prov)) => {
                        let clue = TypeClue::new(kind, a, b, k, prov);
                        let key = clue.key();
                        if !out.insert_type(clue) {
                            problems.push(format!("{tag}[{i}]: duplicate clue {key}"));
                        }
                    }
                    None => problems.push(format!("{tag}[{i}]: malformed relation pair {entry}")),
                }
            } else {
                match unique_entry(entry) {
                    Some((r, ratio, prov)) => {
                        let clue = UniquenessClue::new(kind, r, ratio, prov);
                        let key = clue.key();
                        if !out.insert_unique(clue) {
                            problems.push(format!("{tag}[{i}]: duplicate clue {key}"));
                        }
                    }
                    None => problems.push(format!("{tag}[{i}]: malformed relation {entry}")),
                }
            }
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(Error::Validation(problems))
    }
}

/// Reads a clue file. Manual entries get `k_score = -inf` and ratio 1.0.
pub fn load_clues(path: impl AsRef<Path>) -> Result<ClueSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clues(&text)
}

fn score_value(k: f64) -> Value {
    if k == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(k)
    }
}

/// Renders clues in the file schema. Keys appear in a fixed order; empty kinds are omitted.
pub fn clues_to_json(clues: &ClueSet) -> String {
    let mut doc = Map::new();
    for kind in ClueKind::ALL {
        let entries: Vec<Value> = if kind.is_type_clue() {
            clues
                .type_clues(kind)
                .map(|c| match c.provenance {
                    Provenance::Manual => json!([c.rel_a, c.rel_b]),
                    Provenance::Mined => json!({
                        "relations": [c.rel_a, c.rel_b],
                        "k_score": score_value(c.k_score),
                    }),
                })
                .collect()
        } else {
            clues
                .unique_clues(kind)
                .map(|c| match c.provenance {
                    Provenance::Manual => json!(c.rel),
                    Provenance::Mined => json!({ "relation": c.rel, "ratio": c.ratio }),
                })
                .collect()
        };
        if !entries.is_empty() {
            doc.insert(kind.as_str().to_owned(), Value::Array(entries));
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("clue json");
    text.push('\n');
    text
}

pub fn save_clues(clues: &ClueSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, clues_to_json(clues)).map_err(|e| Error::io(path, e))
}
