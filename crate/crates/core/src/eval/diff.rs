use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::RankedPrediction;
use crate::kb_store::Triple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffKind {
    /// A wrong baseline prediction that the new output drops.
    Eliminated,
    /// A pair where the baseline was only wrong and the new output has a gold relation.
    Corrected,
    /// A gold prediction for a pair the baseline left empty.
    Introduced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffRecord {
    pub kind: DiffKind,
    pub pair_id: String,
    pub relations: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DiffReport {
    pub eliminated: usize,
    pub corrected: usize,
    pub introduced: usize,
    pub details: Vec<DiffRecord>,
}

fn is_gold(p: &RankedPrediction, gold: &BTreeSet<Triple>) -> bool {
    gold.contains(&Triple {
        subject: p.subject.clone(),
        relation: p.relation.clone(),
        object: p.object.clone(),
    })
}

fn by_pair(preds: &[RankedPrediction]) -> BTreeMap<&str, Vec<&RankedPrediction>> {
    let mut out: BTreeMap<&str, Vec<&RankedPrediction>> = BTreeMap::new();
    for p in preds {
        out.entry(p.pair_id.as_str()).or_default().push(p);
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| a.relation.cmp(&b.relation));
    }
    out
}

/// Compares a system output with a baseline output against gold triples.
pub fn diff_analysis(
    baseline: &[RankedPrediction],
    system: &[RankedPrediction],
    gold: &BTreeSet<Triple>,
) -> DiffReport {
    let base = by_pair(baseline);
    let sys = by_pair(system);
    let sys_keys: BTreeSet<(&str, &str)> = system
        .iter()
        .map(|p| (p.pair_id.as_str(), p.relation.as_str()))
        .collect();

    let mut details = Vec::new();
    for (pair, preds) in &base {
        for p in preds {
            if !is_gold(p, gold) && !sys_keys.contains(&(*pair, p.relation.as_str())) {
                details.push(DiffRecord {
                    kind: DiffKind::Eliminated,
                    pair_id: pair.to_string(),
                    relations: vec![p.relation.clone()],
                });
            }
        }
        if preds.iter().all(|p| !is_gold(p, gold)) {
            let fixed: Vec<String> = sys
                .get(pair)
                .into_iter()
                .flatten()
                .filter(|p| is_gold(p, gold))
                .map(|p| p.relation.clone())
                .collect();
            if !fixed.is_empty() {
                details.push(DiffRecord {
                    kind: DiffKind::Corrected,
                    pair_id: pair.to_string(),
                    relations: fixed,
                });
            }
        }
    }
    for (pair, preds) in &sys {
        if base.contains_key(pair) {
            continue;
        }
        for p in preds.iter().filter(|p| is_gold(p, gold)) {
            details.push(DiffRecord {
                kind: DiffKind::Introduced,
                pair_id: pair.to_string(),
                relations: vec![p.relation.clone()],
            });
        }
    }
    details.sort_by(|a, b| {
        (a.kind, &a.pair_id, &a.relations).cmp(&(b.kind, &b.pair_id, &b.relations))
    });

    let count = |k| details.iter().filter(|d| d.kind == k).count();
    DiffReport {
        eliminated: count(DiffKind::Eliminated),
        corrected: count(DiffKind::Corrected),
        introduced: count(DiffKind::Introduced),
        details,
    }
}
