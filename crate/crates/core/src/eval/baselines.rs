use std::collections::BTreeMap;

use super::RankedPrediction;
use crate::candidates::{MentionPrediction, PairCandidates, NA};
use crate::clues::ClueSet;
use crate::constraints::{generate_hard, DecisionVar};
use crate::error::Result;
use crate::ilp::{build_model, IlpModel, Solution};

/// Mintz++ style OR-ing: each mention votes for its top label; the pair gets the
/// union of voted relations, each scored by its best voting mention.
///
/// A mention whose top label is NA votes for nothing. Ties between labels go
/// to the smaller identifier.
pub fn mintzpp(mentions: &[MentionPrediction]) -> Vec<RankedPrediction> {
    let mut by_pair: BTreeMap<&str, BTreeMap<&str, (f64, &MentionPrediction)>> = BTreeMap::new();
    for m in mentions {
        let mut top: Option<(&str, f64)> = None;
        for (rel, &s) in &m.scores {
            if top.is_none_or(|(_, best)| s > best) {
                top = Some((rel.as_str(), s));
            }
        }
        let Some((rel, s)) = top else { continue };
        let votes = by_pair.entry(m.pair_id.as_str()).or_default();
        if rel == NA || s <= 0.0 {
            continue;
        }
        let e = votes.entry(rel).or_insert((s, m));
        if s > e.0 {
            e.0 = s;
        }
    }
    let mut out = Vec::new();
    for (pair_id, votes) in by_pair {
        for (rel, (score, m)) in votes {
            out.push(RankedPrediction {
                pair_id: pair_id.to_owned(),
                subject: m.subject.clone(),
                object: m.object.clone(),
                relation: rel.to_owned(),
                score,
            });
        }
    }
    out
}

/// Greedy conflict resolution over the hard rows of `model`: visits primary
/// variables by descending `priority` (ties by id) and keeps each one that does
/// not conflict with an already kept variable. Linked variables are set from
/// their ends afterwards.
pub fn greedy_select(model: &IlpModel, priority: &[f64]) -> Vec<bool> {
    let n = model.num_vars();
    let mut conflicts = vec![Vec::new(); n];
    for &[a, b] in model.pairwise() {
        conflicts[a].push(b);
        conflicts[b].push(a);
    }
    for g in model.groups() {
        for &a in g {
            conflicts[a].extend(g.iter().copied().filter(|&b| b != a));
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&v| !model.is_aux(v)).collect();
    order.sort_by(|&a, &b| priority[b].total_cmp(&priority[a]).then(a.cmp(&b)));

    let mut chosen = vec![false; n];
    let mut blocked = vec![false; n];
    for v in order {
        if blocked[v] {
            continue;
        }
        chosen[v] = true;
        for &u in &conflicts[v] {
            blocked[u] = true;
        }
    }
    for l in model.links() {
        chosen[l.aux] = chosen[l.a] && chosen[l.b];
    }
    chosen
}

/// The rule-based alternative to the ILP: among conflicting candidates keep the
/// most confident ones, greedily. Predictions are scored like ILP output.
pub fn rule_based(candidates: &[PairCandidates], clues: &ClueSet) -> Result<Vec<RankedPrediction>> {
    let generated = generate_hard(candidates, clues)?;
    let model = build_model(&generated.vars, &generated.constraints, None)?;
    let priority: Vec<f64> = generated.vars.iter().map(|v| v.conf).collect();
    let chosen = greedy_select(&model, &priority);
    Ok(selected_predictions(&generated.vars, &chosen))
}

fn selected_predictions(vars: &[DecisionVar], chosen: &[bool]) -> Vec<RankedPrediction> {
    vars.iter()
        .filter(|v| chosen[v.id])
        .map(|v| RankedPrediction {
            pair_id: v.pair_id.clone(),
            subject: v.subject.clone(),
            object: v.object.clone(),
            relation: v.relation.clone(),
            score: v.objective_coeff,
        })
        .collect()
}

/// Selected decision variables of a solution, ranked by objective coefficient.
pub fn ilp_predictions(vars: &[DecisionVar], solution: &Solution) -> Vec<RankedPrediction> {
    selected_predictions(vars, &solution.assignment)
}
