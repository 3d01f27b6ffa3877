//! CPLEX-style LP text export.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::IlpModel;
use crate::error::{Error, Result};

const TERMS_PER_LINE: usize = 8;

/// Formats a coefficient with 9 significant digits, like C's `%.9g`.
pub fn format_coeff(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        format!("v_{s}")
    } else {
        s
    }
}

/// Unique LP-safe names: sanitised, with `_<id>` appended on collision.
pub fn lp_names(model: &IlpModel) -> Vec<String> {
    let raw: Vec<String> = model.vars().iter().map(|v| sanitize(&v.name)).collect();
    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for n in &raw {
        *counts.entry(n.as_str()).or_default() += 1;
    }
    let mut used: BTreeSet<String> = raw
        .iter()
        .filter(|n| counts[n.as_str()] == 1)
        .cloned()
        .collect();
    raw.iter()
        .enumerate()
        .map(|(id, n)| {
            if counts[n.as_str()] == 1 {
                return n.clone();
            }
            let mut candidate = format!("{n}_{id}");
            while used.contains(&candidate) {
                candidate.push('_');
            }
            used.insert(candidate.clone());
            candidate
        })
        .collect()
}

fn push_terms(out: &mut String, terms: &[(f64, &str)], unit: bool) {
    for (i, (c, name)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let neg = *c < 0.0;
        let mag = c.abs();
        let sign = match (i, neg) {
            (0, false) => "",
            (0, true) => "-",
            (_, false) => " + ",
            (_, true) => " - ",
        };
        out.push_str(sign);
        if unit && mag == 1.0 {
            out.push_str(name);
        } else {
            let _ = write!(out, "{} {}", format_coeff(mag), name);
        }
    }
}

/// Renders the model. Output depends only on the model.
pub fn write_lp(model: &IlpModel) -> String {
    let names = lp_names(model);
    let mut out = String::from("Maximize\n obj: ");
    let obj: Vec<(f64, &str)> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.coeff != 0.0)
        .map(|(v, n)| (v.coeff, n.as_str()))
        .collect();
    if obj.is_empty() {
        out.push('0');
    } else {
        push_terms(&mut out, &obj, false);
    }
    out.push('\n');

    let mut rows: Vec<(Vec<(f64, &str)>, i32)> = Vec::new();
    for [a, b] in model.pairwise() {
        rows.push((
            vec![(1.0, names[*a].as_str()), (1.0, names[*b].as_str())],
            1,
        ));
    }
    for g in model.groups() {
        rows.push((g.iter().map(|&v| (1.0, names[v].as_str())).collect(), 1));
    }
    for l in model.links() {
        let (x, a, b) = (
            names[l.aux].as_str(),
            names[l.a].as_str(),
            names[l.b].as_str(),
        );
        rows.push((vec![(1.0, x), (-1.0, a)], 0));
        rows.push((vec![(1.0, x), (-1.0, b)], 0));
        rows.push((vec![(1.0, a), (1.0, b), (-1.0, x)], 1));
    }
    if !rows.is_empty() {
        out.push_str("Subject To\n");
        for (i, (terms, rhs)) in rows.iter().enumerate() {
            let _ = write!(out, " c{}: ", i + 1);
            push_terms(&mut out, terms, true);
            let _ = writeln!(out, " <= {rhs}");
        }
    }
    if !names.is_empty() {
        out.push_str("Binary\n");
        for n in &names {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_lp(model: &IlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_lp(model)).map_err(|e| Error::io(path, e))
}
