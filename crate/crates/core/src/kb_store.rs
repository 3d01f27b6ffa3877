//! Knowledge-base triple ingestion and per-relation argument statistics.
//!
//! Triples are read from tab-separated text (`subject \t relation \t object`),
//! one per line. Blank lines and lines starting with `#` are skipped. Fields are
//! trimmed and compared as exact strings; the store is a set, so repeated facts
//! collapse to one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(subject, relation, object)` fact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    /// Builds a triple from raw fields, trimming whitespace. Fails if any field is empty.
    pub fn new(subject: &str, relation: &str, object: &str) -> Result<Self> {
        let subject = subject.trim();
        let relation = relation.trim();
        let object = object.trim();
        if subject.is_empty() || relation.is_empty() || object.is_empty() {
            return Err(Error::Domain(format!(
                "triple fields must be non-empty: ({subject:?}, {relation:?}, {object:?})"
            )));
        }
        Ok(Triple {
            subject: subject.to_owned(),
            relation: relation.to_owned(),
            object: object.to_owned(),
        })
    }
}

/// Argument statistics of a single relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationStats {
    pub subjects: BTreeSet<String>,
    pub objects: BTreeSet<String>,
    /// subject -> number of distinct objects under this relation
    pub subj_fanout: BTreeMap<String, usize>,
    /// object -> number of distinct subjects under this relation
    pub obj_fanin: BTreeMap<String, usize>,
    pub triple_count: usize,
}

/// Immutable index over a deduplicated set of triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KbIndex {
    triples: BTreeSet<Triple>,
    relations: BTreeMap<String, RelationStats>,
}

impl KbIndex {
    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I) -> Self {
        let triples: BTreeSet<Triple> = triples.into_iter().collect();
        let mut relations: BTreeMap<String, RelationStats> = BTreeMap::new();
        for t in &triples {
            let stats = relations.entry(t.relation.clone()).or_default();
            stats.subjects.insert(t.subject.clone());
            stats.objects.insert(t.object.clone());
            *stats.subj_fanout.entry(t.subject.clone()).or_default() += 1;
            *stats.obj_fanin.entry(t.object.clone()).or_default() += 1;
            stats.triple_count += 1;
        }
        KbIndex { triples, relations }
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Relation identifiers in ascending order.
    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    pub fn stats(&self, relation: &str) -> Option<&RelationStats> {
        self.relations.get(relation)
    }

    /// Distinct triples in canonical order.
    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Subject and object sets of `relation`; both empty for an unseen relation.
    pub fn argument_sets(&self, relation: &str) -> (&BTreeSet<String>, &BTreeSet<String>) {
        static EMPTY: BTreeSet<String> = BTreeSet::new();
        match self.relations.get(relation) {
            Some(s) => (&s.subjects, &s.objects),
            None => (&EMPTY, &EMPTY),
        }
    }

    /// Writes the distinct triples in canonical order using the triple-file format.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write_triples(&mut out, self.triples.iter())
    }
}

/// Parses triple-file text. Line numbers in errors are 1-based.
pub fn parse_triples(text: &str) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let triple = Triple::new(fields[0], fields[1], fields[2])
            .map_err(|_| Error::parse(line_no, "empty field"))?;
        out.push(triple);
    }
    Ok(out)
}

/// Reads a triple file into a plain list (duplicates kept, file order).
pub fn read_triples(path: impl AsRef<Path>) -> Result<Vec<Triple>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text)
}

/// Loads a triple file and builds the index.
pub fn load_triples(path: impl AsRef<Path>) -> Result<KbIndex> {
    Ok(KbIndex::from_triples(read_triples(path)?))
}

pub fn write_triples<'a, W, I>(out: &mut W, triples: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Triple>,
{
    for t in triples {
        writeln!(out, "{}\t{}\t{}", t.subject, t.relation, t.object)?;
    }
    Ok(())
}
