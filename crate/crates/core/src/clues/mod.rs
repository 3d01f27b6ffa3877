//! Clues: relation-level statements that two predictions should not co-occur.
//!
//! Type clues (`SR`, `RO`, `RER`) come from argument-set overlap between two
//! relations. Uniqueness clues (`OU`, `SU`) mark relations whose subject maps to
//! a single object, or whose object maps to a single subject.

mod file;
mod mining;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::candidates::PairCandidates;

pub use file::{clues_to_json, load_clues, parse_clues, save_clues};
pub use mining::{kulczynski, mine_clues, mine_type_clues, mine_uniqueness_clues, MiningParams};

/// The five clue classes; also used to tag the constraint family a clue produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClueKind {
    /// Two relations should not share a subject.
    Sr,
    /// Two relations should not share an object.
    Ro,
    /// The object of the first relation should not be the subject of the second.
    Rer,
    /// A subject bears at most one object under the relation.
    Ou,
    /// An object bears at most one subject under the relation.
    Su,
}

impl ClueKind {
    pub const ALL: [ClueKind; 5] = [
        ClueKind::Sr,
        ClueKind::Ro,
        ClueKind::Rer,
        ClueKind::Ou,
        ClueKind::Su,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClueKind::Sr => "sr",
            ClueKind::Ro => "ro",
            ClueKind::Rer => "rer",
            ClueKind::Ou => "ou",
            ClueKind::Su => "su",
        }
    }

    pub fn is_type_clue(self) -> bool {
        matches!(self, ClueKind::Sr | ClueKind::Ro | ClueKind::Rer)
    }

    /// SR and RO are symmetric; RER is directed.
    pub fn is_symmetric(self) -> bool {
        matches!(self, ClueKind::Sr | ClueKind::Ro)
    }

    pub fn parse(tag: &str) -> Option<ClueKind> {
        ClueKind::ALL.into_iter().find(|k| k.as_str() == tag)
    }
}

impl fmt::Display for ClueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_ascii_uppercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Manual,
    Mined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeClue {
    pub kind: ClueKind,
    pub rel_a: String,
    pub rel_b: String,
    /// Log-scale overlap score; `-inf` for disjoint sets and for manual clues.
    pub k_score: f64,
    pub provenance: Provenance,
}

impl TypeClue {
    /// Builds a clue, putting symmetric kinds into canonical order.
    pub fn new(
        kind: ClueKind,
        rel_a: impl Into<String>,
        rel_b: impl Into<String>,
        k_score: f64,
        provenance: Provenance,
    ) -> Self {
        assert!(kind.is_type_clue(), "{kind} is not a type clue");
        let (mut rel_a, mut rel_b) = (rel_a.into(), rel_b.into());
        if kind.is_symmetric() && rel_b < rel_a {
            std::mem::swap(&mut rel_a, &mut rel_b);
        }
        TypeClue {
            kind,
            rel_a,
            rel_b,
            k_score,
            provenance,
        }
    }

    pub fn key(&self) -> ClueKey {
        ClueKey {
            kind: self.kind,
            rel_a: self.rel_a.clone(),
            rel_b: Some(self.rel_b.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessClue {
    pub kind: ClueKind,
    pub rel: String,
    /// Fraction of subjects (OU) or objects (SU) with a single partner; 1.0 for manual clues.
    pub ratio: f64,
    pub provenance: Provenance,
}

impl UniquenessClue {
    pub fn new(kind: ClueKind, rel: impl Into<String>, ratio: f64, provenance: Provenance) -> Self {
        assert!(!kind.is_type_clue(), "{kind} is not a uniqueness clue");
        UniquenessClue {
            kind,
            rel: rel.into(),
            ratio,
            provenance,
        }
    }

    pub fn key(&self) -> ClueKey {
        ClueKey {
            kind: self.kind,
            rel_a: self.rel.clone(),
            rel_b: None,
        }
    }
}

/// Identity of a clue: kind plus canonical relation key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClueKey {
    pub kind: ClueKind,
    pub rel_a: String,
    pub rel_b: Option<String>,
}

impl fmt::Display for ClueKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rel_b {
            Some(b) => write!(f, "{}({},{})", self.kind, self.rel_a, b),
            None => write!(f, "{}({})", self.kind, self.rel_a),
        }
    }
}

/// A deduplicated collection of clues of all five kinds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClueSet {
    types: BTreeMap<ClueKey, TypeClue>,
    uniques: BTreeMap<ClueKey, UniquenessClue>,
}

impl ClueSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a clue; returns false (and leaves the set unchanged) if an equal key exists.
    pub fn insert_type(&mut self, clue: TypeClue) -> bool {
        let key = clue.key();
        if self.types.contains_key(&key) {
            return false;
        }
        self.types.insert(key, clue);
        true
    }

    pub fn insert_unique(&mut self, clue: UniquenessClue) -> bool {
        let key = clue.key();
        if self.uniques.contains_key(&key) {
            return false;
        }
        self.uniques.insert(key, clue);
        true
    }

    /// Type clues of one kind in canonical order.
    pub fn type_clues(&self, kind: ClueKind) -> impl Iterator<Item = &TypeClue> {
        self.types.values().filter(move |c| c.kind == kind)
    }

    pub fn unique_clues(&self, kind: ClueKind) -> impl Iterator<Item = &UniquenessClue> {
        self.uniques.values().filter(move |c| c.kind == kind)
    }

    pub fn all_type_clues(&self) -> impl Iterator<Item = &TypeClue> {
        self.types.values()
    }

    pub fn all_unique_clues(&self) -> impl Iterator<Item = &UniquenessClue> {
        self.uniques.values()
    }

    /// Looks up a type clue. For SR/RO the argument order does not matter; for RER
    /// `rel_a` is the relation whose object is the shared entity.
    pub fn type_clue(&self, kind: ClueKind, rel_a: &str, rel_b: &str) -> Option<&TypeClue> {
        let (a, b) = if kind.is_symmetric() && rel_b < rel_a {
            (rel_b, rel_a)
        } else {
            (rel_a, rel_b)
        };
        self.types.get(&ClueKey {
            kind,
            rel_a: a.to_owned(),
            rel_b: Some(b.to_owned()),
        })
    }

    pub fn unique_clue(&self, kind: ClueKind, rel: &str) -> Option<&UniquenessClue> {
        self.uniques.get(&ClueKey {
            kind,
            rel_a: rel.to_owned(),
            rel_b: None,
        })
    }

    pub fn count(&self, kind: ClueKind) -> usize {
        if kind.is_type_clue() {
            self.type_clues(kind).count()
        } else {
            self.unique_clues(kind).count()
        }
    }

    pub fn len(&self) -> usize {
        self.types.len() + self.uniques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn keys(&self) -> BTreeSet<ClueKey> {
        self.types
            .keys()
            .chain(self.uniques.keys())
            .cloned()
            .collect()
    }

    /// Union of two clue sets. On key collisions the manual clue wins; between two
    /// clues of equal provenance, `self` wins.
    pub fn merge(mut self, other: ClueSet) -> ClueSet {
        for (key, clue) in other.types {
            match self.types.get(&key) {
                Some(existing)
                    if !(existing.provenance == Provenance::Mined
                        && clue.provenance == Provenance::Manual) => {}
                _ => {
                    self.types.insert(key, clue);
                }
            }
        }
        for (key, clue) in other.uniques {
            match self.uniques.get(&key) {
                Some(existing)
                    if !(existing.provenance == Provenance::Mined
                        && clue.provenance == Provenance::Manual) => {}
                _ => {
                    self.uniques.insert(key, clue);
                }
            }
        }
        self
    }

    /// Keeps only the clues whose relations all satisfy `keep`.
    pub fn retain_relations(&self, keep: impl Fn(&str) -> bool) -> ClueSet {
        ClueSet {
            types: self
                .types
                .iter()
                .filter(|(_, c)| keep(&c.rel_a) && keep(&c.rel_b))
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
            uniques: self
                .uniques
                .iter()
                .filter(|(_, c)| keep(&c.rel))
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }
}

/// Relations ranked by how many candidate predictions carry them, most frequent
/// first; ties by relation identifier.
pub fn relation_frequency_ranking(candidates: &[PairCandidates]) -> Vec<(String, usize)> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for pair in candidates {
        for rel in pair.candidates.keys() {
            *freq.entry(rel.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> =
        freq.into_iter().map(|(r, n)| (r.to_owned(), n)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Restricts clues to the `max_relations` relations most frequent among the
/// candidates. Zero, or a limit covering every candidate relation, is the identity.
pub fn prune_clues(
    clues: &ClueSet,
    candidates: &[PairCandidates],
    max_relations: usize,
) -> ClueSet {
    let ranked = relation_frequency_ranking(candidates);
    if max_relations == 0 || max_relations >= ranked.len() {
        return clues.clone();
    }
    let kept: BTreeSet<&str> = ranked[..max_relations]
        .iter()
        .map(|(r, _)| r.as_str())
        .collect();
    clues.retain_relations(|r| kept.contains(r))
}
