//! Baselines, precision-recall evaluation and output comparison.

mod baselines;
mod diff;
mod metrics;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baselines::{greedy_select, ilp_predictions, mintzpp, rule_based};
pub use diff::{diff_analysis, DiffKind, DiffRecord, DiffReport};
pub use metrics::{peak_f1, pr_csv, pr_curve, PeakF1, PrPoint};

/// A final pair-level prediction with its ranking key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub pair_id: String,
    pub subject: String,
    pub object: String,
    pub relation: String,
    pub score: f64,
}

/// Descending score; ties by pair id, then relation.
pub fn sort_ranked(preds: &mut [RankedPrediction]) {
    preds.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.pair_id.cmp(&b.pair_id))
            .then_with(|| a.relation.cmp(&b.relation))
    });
}

const HEADER: &str = "# pair_id\tsubject\trelation\tobject\tscore";

/// Tab-separated prediction file, ranked order, with a comment header.
pub fn write_ranked<W: Write>(out: &mut W, preds: &[RankedPrediction]) -> std::io::Result<()> {
    let mut sorted = preds.to_vec();
    sort_ranked(&mut sorted);
    writeln!(out, "{HEADER}")?;
    for p in &sorted {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.pair_id, p.subject, p.relation, p.object, p.score
        )?;
    }
    Ok(())
}

pub fn parse_ranked(text: &str) -> Result<Vec<RankedPrediction>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 5 || f[..4].iter().any(|s| s.is_empty()) {
            return Err(Error::parse(
                line_no,
                "expected pair_id, subject, relation, object, score",
            ));
        }
        let score: f64 = f[4]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad score {:?}", f[4])))?;
        if score <= 0.0 || !score.is_finite() {
            return Err(Error::parse(line_no, "score must be positive and finite"));
        }
        out.push(RankedPrediction {
            pair_id: f[0].to_owned(),
            subject: f[1].to_owned(),
            relation: f[2].to_owned(),
            object: f[3].to_owned(),
            score,
        });
    }
    Ok(out)
}

pub fn read_ranked(path: impl AsRef<Path>) -> Result<Vec<RankedPrediction>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ranked(&text)
}
