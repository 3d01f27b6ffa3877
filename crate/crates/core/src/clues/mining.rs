use std::collections::BTreeSet;

use super::{ClueKind, ClueSet, Provenance, TypeClue, UniquenessClue};
use crate::error::{Error, Result};
use crate::kb_store::KbIndex;

/// Thresholds for mining clues from a KB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningParams {
    /// Type clues are emitted when the overlap score is strictly below this value.
    pub kappa: f64,
    /// Uniqueness clues are emitted when the single-partner ratio is at least this value.
    pub theta: f64,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            kappa: -3.0,
            theta: 0.8,
        }
    }
}

/// Log of the mean of the two directional overlap ratios between `a` and `b`
/// (natural log). Returns `-inf` when the sets are disjoint.
pub fn kulczynski<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain(
            "overlap score is undefined for an empty argument set".into(),
        ));
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let shared = small.iter().filter(|x| large.contains(*x)).count();
    if shared == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let shared = shared as f64;
    Ok((0.5 * (shared / a.len() as f64 + shared / b.len() as f64)).ln())
}

fn score_if_defined(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Option<f64> {
    kulczynski(a, b).ok()
}

/// Mines SR, RO and RER clues over all relation pairs of `kb`.
///
/// SR and RO are mined over unordered pairs of distinct relations. RER is mined
/// over ordered pairs, self-pairs included: `(a, b)` compares the objects of `a`
/// with the subjects of `b`.
pub fn mine_type_clues(kb: &KbIndex, kappa: f64) -> ClueSet {
    let rels: Vec<&str> = kb.relations().collect();
    let mut out = ClueSet::new();
    for (i, &r1) in rels.iter().enumerate() {
        let (s1, o1) = kb.argument_sets(r1);
        for &r2 in &rels[i..] {
            let (s2, o2) = kb.argument_sets(r2);
            if r1 != r2 {
                if let Some(k) = score_if_defined(s1, s2).filter(|&k| k < kappa) {
                    out.insert_type(TypeClue::new(ClueKind::Sr, r1, r2, k, Provenance::Mined));
                }
                if let Some(k) = score_if_defined(o1, o2).filter(|&k| k < kappa) {
                    out.insert_type(TypeClue::new(ClueKind::Ro, r1, r2, k, Provenance::Mined));
                }
            }
            if let Some(k) = score_if_defined(o1, s2).filter(|&k| k < kappa) {
                out.insert_type(TypeClue::new(ClueKind::Rer, r1, r2, k, Provenance::Mined));
            }
            if r1 != r2 {
                if let Some(k) = score_if_defined(o2, s1).filter(|&k| k < kappa) {
                    out.insert_type(TypeClue::new(ClueKind::Rer, r2, r1, k, Provenance::Mined));
                }
            }
        }
    }
    out
}

/// Fraction of subjects with exactly one object, and of objects with exactly one
/// subject, under `relation`. `None` for a relation without triples.
pub fn uniqueness_ratios(kb: &KbIndex, relation: &str) -> Option<(f64, f64)> {
    let stats = kb.stats(relation).filter(|s| s.triple_count > 0)?;
    let single_obj = stats.subj_fanout.values().filter(|&&n| n == 1).count();
    let single_subj = stats.obj_fanin.values().filter(|&&n| n == 1).count();
    Some((
        single_obj as f64 / stats.subjects.len() as f64,
        single_subj as f64 / stats.objects.len() as f64,
    ))
}

/// Mines OU and SU clues: relations whose single-partner ratio reaches `theta`.
pub fn mine_uniqueness_clues(kb: &KbIndex, theta: f64) -> ClueSet {
    let mut out = ClueSet::new();
    for rel in kb.relations() {
        let Some((ou, su)) = uniqueness_ratios(kb, rel) else {
            continue;
        };
        if ou >= theta {
            out.insert_unique(UniquenessClue::new(
                ClueKind::Ou,
                rel,
                ou,
                Provenance::Mined,
            ));
        }
        if su >= theta {
            out.insert_unique(UniquenessClue::new(
                ClueKind::Su,
                rel,
                su,
                Provenance::Mined,
            ));
        }
    }
    out
}

/// Both clue categories with validated thresholds.
pub fn mine_clues(kb: &KbIndex, params: MiningParams) -> Result<ClueSet> {
    if params.kappa >= 0.0 || params.kappa.is_nan() {
        return Err(Error::Parameter(format!(
            "kappa must be negative, got {}",
            params.kappa
        )));
    }
    if !(params.theta > 0.0 && params.theta <= 1.0) {
        return Err(Error::Parameter(format!(
            "uniqueness threshold must be in (0, 1], got {}",
            params.theta
        )));
    }
    let types = mine_type_clues(kb, params.kappa);
    let uniques = mine_uniqueness_clues(kb, params.theta);
    Ok(types.merge(uniques))
}
