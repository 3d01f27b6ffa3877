//! Per-pair candidate relations from sentence-level scores.
//!
//! Each mention admits its top-k relations scoring at least `min_conf`. A pair's
//! candidate set is the union over its mentions, and the confidence of candidate
//! `r` sums `score(m, r)` over exactly the mentions that admitted `r`.
//!
//! Predictions are read as JSON lines:
//!
//! ```text
//! {"pair_id":"p1","subject":"USA","object":"Washington","mention_id":"m1","scores":{"capital":0.7,"NA":0.2}}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved "no relation" label; never a candidate.
pub const NA: &str = "NA";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionPrediction {
    pub pair_id: String,
    pub subject: String,
    pub object: String,
    pub mention_id: String,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub conf: f64,
    pub max_mention: f64,
    /// Mentions that admitted this relation, sorted by id.
    pub supporting_mentions: Vec<String>,
}

impl Candidate {
    /// Objective weight of selecting this candidate.
    pub fn weight(&self) -> f64 {
        self.conf + self.max_mention
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCandidates {
    pub pair_id: String,
    pub subject: String,
    pub object: String,
    pub candidates: BTreeMap<String, Candidate>,
}

impl PairCandidates {
    pub fn empty(pair_id: &str, subject: &str, object: &str) -> Self {
        PairCandidates {
            pair_id: pair_id.to_owned(),
            subject: subject.to_owned(),
            object: object.to_owned(),
            candidates: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateParams {
    pub top_k: usize,
    pub min_conf: f64,
}

impl Default for CandidateParams {
    fn default() -> Self {
        CandidateParams {
            top_k: 3,
            min_conf: 0.1,
        }
    }
}

impl CandidateParams {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Parameter("top_k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_conf) {
            return Err(Error::Parameter(format!(
                "confidence threshold must be in [0, 1], got {}",
                self.min_conf
            )));
        }
        Ok(())
    }
}

/// The up-to-`top_k` non-NA relations of one mention with score at least
/// `min_conf`, best first. Ties are broken by relation identifier.
pub fn select_mention_candidates(
    scores: &BTreeMap<String, f64>,
    top_k: usize,
    min_conf: f64,
) -> Vec<&str> {
    let mut ranked: Vec<(&str, f64)> = scores
        .iter()
        .filter(|(r, &s)| r.as_str() != NA && s >= min_conf)
        .map(|(r, &s)| (r.as_str(), s))
        .collect();
    // BTreeMap iteration is already ascending by relation; a stable sort keeps that for ties.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked.truncate(top_k);
    ranked.into_iter().map(|(r, _)| r).collect()
}

fn validate_mention(m: &MentionPrediction) -> Result<()> {
    let mut problems = Vec::new();
    for (field, value) in [
        ("pair_id", &m.pair_id),
        ("subject", &m.subject),
        ("object", &m.object),
        ("mention_id", &m.mention_id),
    ] {
        if value.trim().is_empty() {
            problems.push(format!("mention {:?}: empty {field}", m.mention_id));
        }
    }
    for (rel, &s) in &m.scores {
        if !(0.0..=1.0).contains(&s) {
            problems.push(format!(
                "pair {} mention {}: score {s} for {rel} outside [0, 1]",
                m.pair_id, m.mention_id
            ));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

/// Aggregates the mentions of one entity pair into its candidate set.
pub fn aggregate(
    mentions: &[MentionPrediction],
    params: CandidateParams,
) -> Result<PairCandidates> {
    let Some(first) = mentions.first() else {
        return Err(Error::Validation(vec!["no mentions to aggregate".into()]));
    };
    let mut seen = BTreeSet::new();
    let mut problems = Vec::new();
    for m in mentions {
        validate_mention(m)?;
        if m.pair_id != first.pair_id || m.subject != first.subject || m.object != first.object {
            problems.push(format!(
                "mention {} disagrees with pair {} on pair id or arguments",
                m.mention_id, first.pair_id
            ));
        }
        if !seen.insert(m.mention_id.as_str()) {
            problems.push(format!(
                "pair {}: duplicate mention id {}",
                first.pair_id, m.mention_id
            ));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    // Sum in mention-id order so the result does not depend on input order.
    let mut ordered: Vec<&MentionPrediction> = mentions.iter().collect();
    ordered.sort_by(|a, b| a.mention_id.cmp(&b.mention_id));

    let mut out = PairCandidates::empty(&first.pair_id, &first.subject, &first.object);
    for m in ordered {
        let total: f64 = m.scores.values().sum();
        if total > 1.0 + 1e-6 {
            log::warn!(
                "pair {} mention {}: scores sum to {total}; using them unnormalized",
                m.pair_id,
                m.mention_id
            );
        }
        for rel in select_mention_candidates(&m.scores, params.top_k, params.min_conf) {
            let s = m.scores[rel];
            let c = out.candidates.entry(rel.to_owned()).or_insert(Candidate {
                conf: 0.0,
                max_mention: 0.0,
                supporting_mentions: Vec::new(),
            });
            c.conf += s;
            c.max_mention = c.max_mention.max(s);
            c.supporting_mentions.push(m.mention_id.clone());
        }
    }
    // A candidate admitted only at score 0 (min_conf = 0) carries no weight.
    out.candidates.retain(|_, c| c.max_mention > 0.0);
    Ok(out)
}

/// Groups mentions by pair id and aggregates each pair. Output is sorted by pair id.
pub fn build_candidates(
    mentions: &[MentionPrediction],
    params: CandidateParams,
) -> Result<Vec<PairCandidates>> {
    params.validate()?;
    let mut by_pair: BTreeMap<&str, Vec<MentionPrediction>> = BTreeMap::new();
    for m in mentions {
        by_pair
            .entry(m.pair_id.as_str())
            .or_default()
            .push(m.clone());
    }
    by_pair.values().map(|ms| aggregate(ms, params)).collect()
}

/// Parses JSON-lines prediction records; blank lines are skipped.
pub fn parse_predictions(text: &str) -> Result<Vec<MentionPrediction>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let m: MentionPrediction =
            serde_json::from_str(line).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        validate_mention(&m).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        out.push(m);
    }
    Ok(out)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<MentionPrediction>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}

pub fn write_predictions<W: Write>(
    out: &mut W,
    mentions: &[MentionPrediction],
) -> std::io::Result<()> {
    for m in mentions {
        serde_json::to_writer(&mut *out, m)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes one JSON record per pair.
pub fn write_candidates<W: Write>(out: &mut W, pairs: &[PairCandidates]) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut *out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
