//! Instantiates clues as at-most-one constraints over candidate predictions.
//!
//! One binary decision variable exists per (pair, candidate relation). Type clues
//! produce two-variable constraints between predictions whose pairs share the
//! relevant entity slot; uniqueness clues produce one group constraint per
//! (relation, shared entity). Entity joins go through inverted indexes, so the
//! cost grows with the candidates rather than with the relation vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::candidates::PairCandidates;
use crate::clues::{ClueKey, ClueKind, ClueSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionVar {
    pub id: usize,
    pub pair_id: String,
    pub subject: String,
    pub object: String,
    pub relation: String,
    pub conf: f64,
    pub max_mention: f64,
    /// `conf + max_mention`
    pub objective_coeff: f64,
}

/// `sum(vars) <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardConstraint {
    pub family: ClueKind,
    /// Sorted for symmetric families; `(object side, subject side)` for RER.
    pub vars: Vec<usize>,
    pub clue: ClueKey,
    /// Score of the source clue; `None` for uniqueness constraints.
    pub k_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub vars: Vec<DecisionVar>,
    pub constraints: Vec<HardConstraint>,
    /// RER matches inside a single pair (subject equal to object), which are not emitted.
    pub skipped_self_rer: usize,
}

/// A violation indicator for one softened type constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxVar {
    pub id: usize,
    pub var_a: usize,
    pub var_b: usize,
    pub penalty: f64,
    pub family: ClueKind,
    pub clue: ClueKey,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SoftAugmentation {
    pub aux: Vec<AuxVar>,
}

/// Builds decision variables and all hard constraints.
pub fn generate_hard(candidates: &[PairCandidates], clues: &ClueSet) -> Result<Generated> {
    let mut pairs: Vec<&PairCandidates> = candidates.iter().collect();
    pairs.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    let dups: Vec<String> = pairs
        .windows(2)
        .filter(|w| w[0].pair_id == w[1].pair_id)
        .map(|w| format!("duplicate pair id {}", w[0].pair_id))
        .collect();
    if !dups.is_empty() {
        return Err(Error::Validation(dups));
    }

    let mut vars = Vec::new();
    let mut pair_of = Vec::new();
    for (p_idx, pair) in pairs.iter().enumerate() {
        for (rel, c) in &pair.candidates {
            vars.push(DecisionVar {
                id: vars.len(),
                pair_id: pair.pair_id.clone(),
                subject: pair.subject.clone(),
                object: pair.object.clone(),
                relation: rel.clone(),
                conf: c.conf,
                max_mention: c.max_mention,
                objective_coeff: c.weight(),
            });
            pair_of.push(p_idx);
        }
    }

    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut by_object: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for v in &vars {
        by_subject.entry(v.subject.as_str()).or_default().push(v.id);
        by_object.entry(v.object.as_str()).or_default().push(v.id);
    }

    let mut out: BTreeMap<(ClueKind, Vec<usize>), HardConstraint> = BTreeMap::new();
    let mut emit = |family: ClueKind, ids: Vec<usize>, clue: ClueKey, k_score: Option<f64>| {
        out.entry((family, ids.clone())).or_insert(HardConstraint {
            family,
            vars: ids,
            clue,
            k_score,
        });
    };

    for (family, index) in [(ClueKind::Sr, &by_subject), (ClueKind::Ro, &by_object)] {
        for ids in index.values() {
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    if let Some(c) = clues.type_clue(family, &vars[a].relation, &vars[b].relation) {
                        emit(family, vec![a, b], c.key(), Some(c.k_score));
                    }
                }
            }
        }
    }

    let mut skipped_self_rer = 0;
    for (entity, as_object) in &by_object {
        let Some(as_subject) = by_subject.get(entity) else {
            continue;
        };
        for &a in as_object {
            for &b in as_subject {
                let Some(c) = clues.type_clue(ClueKind::Rer, &vars[a].relation, &vars[b].relation)
                else {
                    continue;
                };
                if pair_of[a] == pair_of[b] {
                    skipped_self_rer += 1;
                    continue;
                }
                emit(ClueKind::Rer, vec![a, b], c.key(), Some(c.k_score));
            }
        }
    }

    for (family, entity_of) in [
        (
            ClueKind::Ou,
            (|v: &DecisionVar| v.subject.clone()) as fn(&DecisionVar) -> String,
        ),
        (ClueKind::Su, |v: &DecisionVar| v.object.clone()),
    ] {
        let mut groups: BTreeMap<(&str, String), Vec<usize>> = BTreeMap::new();
        for v in &vars {
            if clues.unique_clue(family, &v.relation).is_some() {
                groups
                    .entry((v.relation.as_str(), entity_of(v)))
                    .or_default()
                    .push(v.id);
            }
        }
        for ((rel, _), ids) in groups {
            if ids.len() >= 2 {
                let key = clues.unique_clue(family, rel).expect("clue").key();
                emit(family, ids, key, None);
            }
        }
    }

    if skipped_self_rer > 0 {
        log::info!("skipped {skipped_self_rer} RER matches inside a single pair");
    }
    Ok(Generated {
        vars,
        constraints: out.into_values().collect(),
        skipped_self_rer,
    })
}

/// Turns type constraints with a finite clue score into penalised violation
/// indicators. Uniqueness constraints and infinite-score constraints stay hard.
///
/// Auxiliary ids continue after the decision variables.
pub fn soften(
    vars: &[DecisionVar],
    hard: &[HardConstraint],
    alpha: f64,
) -> Result<(Vec<HardConstraint>, SoftAugmentation)> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::Parameter(format!(
            "penalty weight must be finite and non-negative, got {alpha}"
        )));
    }
    let mut remaining = Vec::new();
    let mut soft = SoftAugmentation::default();
    for c in hard {
        match c.k_score {
            Some(k) if c.family.is_type_clue() && k.is_finite() => {
                debug_assert_eq!(c.vars.len(), 2);
                soft.aux.push(AuxVar {
                    id: vars.len() + soft.aux.len(),
                    var_a: c.vars[0],
                    var_b: c.vars[1],
                    penalty: -alpha * k,
                    family: c.family,
                    clue: c.clue.clone(),
                });
            }
            _ => remaining.push(c.clone()),
        }
    }
    Ok((remaining, soft))
}

/// Number of constraints per family, in family order.
pub fn census(constraints: &[HardConstraint]) -> BTreeMap<ClueKind, usize> {
    let mut out: BTreeMap<ClueKind, usize> = ClueKind::ALL.iter().map(|&k| (k, 0)).collect();
    for c in constraints {
        *out.entry(c.family).or_default() += 1;
    }
    out
}

/// One line per constraint: family, clue, then the variables as `pair:relation`.
pub fn dump_constraints(vars: &[DecisionVar], constraints: &[HardConstraint]) -> String {
    let mut s = String::new();
    for c in constraints {
        let _ = write!(s, "{}\t{}\t", c.family, c.clue);
        let descr: Vec<String> = c
            .vars
            .iter()
            .map(|&v| format!("{}:{}", vars[v].pair_id, vars[v].relation))
            .collect();
        s.push_str(&descr.join(" "));
        s.push('\n');
    }
    s
}

/// Variables that appear in some constraint.
pub fn constrained_vars(constraints: &[HardConstraint]) -> BTreeSet<usize> {
    constraints
        .iter()
        .flat_map(|c| c.vars.iter().copied())
        .collect()
}
