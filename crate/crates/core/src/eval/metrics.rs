use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use super::{sort_ranked, RankedPrediction};
use crate::error::{Error, Result};
use crate::kb_store::Triple;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    /// 1-based prefix length.
    pub rank: usize,
    pub hits: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakF1 {
    pub rank: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision and recall at every prefix of the ranked predictions.
///
/// A prediction is a hit when its triple is in `gold` and no earlier prediction
/// already hit the same triple.
pub fn pr_curve(predictions: &[RankedPrediction], gold: &BTreeSet<Triple>) -> Result<Vec<PrPoint>> {
    if gold.is_empty() {
        return Err(Error::Domain(
            "gold set is empty; recall is undefined".into(),
        ));
    }
    let mut ranked = predictions.to_vec();
    sort_ranked(&mut ranked);
    let mut found: BTreeSet<Triple> = BTreeSet::new();
    let mut points = Vec::with_capacity(ranked.len());
    for (i, p) in ranked.iter().enumerate() {
        let t = Triple {
            subject: p.subject.clone(),
            relation: p.relation.clone(),
            object: p.object.clone(),
        };
        if gold.contains(&t) {
            found.insert(t);
        }
        let rank = i + 1;
        points.push(PrPoint {
            rank,
            hits: found.len(),
            precision: found.len() as f64 / rank as f64,
            recall: found.len() as f64 / gold.len() as f64,
        });
    }
    Ok(points)
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// The curve point with the highest F1; earliest rank on ties. Zero for an empty curve.
pub fn peak_f1(curve: &[PrPoint]) -> PeakF1 {
    let mut best = PeakF1 {
        rank: 0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    for pt in curve {
        let f = f1(pt.precision, pt.recall);
        if f > best.f1 {
            best = PeakF1 {
                rank: pt.rank,
                precision: pt.precision,
                recall: pt.recall,
                f1: f,
            };
        }
    }
    best
}

/// Two-column CSV: `recall,precision`.
pub fn pr_csv(curve: &[PrPoint]) -> String {
    let mut s = String::from("recall,precision\n");
    for pt in curve {
        let _ = writeln!(s, "{},{}", pt.recall, pt.precision);
    }
    s
}
