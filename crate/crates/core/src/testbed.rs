//! Seeded synthetic worlds: a typed KB, gold test triples and noisy
//! sentence-level predictions.
//!
//! Entities belong to one of four latent types and each relation has a latent
//! subject and object type plus cardinality flags. Within a type, every
//! relation draws its arguments from a prefix of one shared random permutation
//! of that type's entities, so argument sets of same-typed slots always overlap
//! heavily while differently typed slots never overlap.
//!
//! In conflict mode a mention is peaked on a gold relation of its pair with
//! probability `1 - noise`, otherwise on a relation whose argument types do not
//! fit the pair. In Riedel mode every test pair has the argument types of one
//! dominant relation and the extractor predicts that relation for every mention,
//! true fact or not.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::{write_predictions, MentionPrediction, NA};
use crate::error::{Error, Result};
use crate::kb_store::{write_triples, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityType {
    Country,
    City,
    Person,
    Organization,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Country,
        EntityType::City,
        EntityType::Person,
        EntityType::Organization,
    ];

    fn prefix(self) -> &'static str {
        match self {
            EntityType::Country => "country",
            EntityType::City => "city",
            EntityType::Person => "person",
            EntityType::Organization => "org",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSchema {
    pub name: String,
    pub subject_type: EntityType,
    pub object_type: EntityType,
    /// Every subject has exactly one object.
    pub functional: bool,
    /// Every object has exactly one subject.
    pub inverse_functional: bool,
}

impl RelationSchema {
    pub fn new(
        name: &str,
        s: EntityType,
        o: EntityType,
        functional: bool,
        inverse_functional: bool,
    ) -> Self {
        RelationSchema {
            name: name.to_owned(),
            subject_type: s,
            object_type: o,
            functional,
            inverse_functional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SynthMode {
    Conflict,
    /// All test pairs are typed like the dominant relation and predicted as it.
    Riedel {
        dominant: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub entity_counts: BTreeMap<EntityType, usize>,
    pub relations: Vec<RelationSchema>,
    /// Fraction of a type's entities a relation may use as arguments.
    pub coverage: f64,
    pub pairs: usize,
    pub noise: f64,
    /// Inclusive range.
    pub mentions_per_pair: (usize, usize),
    pub mode: SynthMode,
}

/// Seven relations over four types: two country-to-city relations, two
/// person relations, one organisation-to-city, and two many-to-many ones.
pub fn default_schema() -> Vec<RelationSchema> {
    use EntityType::*;
    vec![
        RelationSchema::new("capital", Country, City, true, true),
        RelationSchema::new("contains", Country, City, false, true),
        RelationSchema::new("nationality", Person, Country, true, false),
        RelationSchema::new("birthPlace", Person, City, true, false),
        RelationSchema::new("locationCity", Organization, City, true, false),
        RelationSchema::new("founder", Organization, Person, false, false),
        RelationSchema::new("worksFor", Person, Organization, false, false),
    ]
}

impl SynthConfig {
    /// Conflict-injecting world: noise 0.4, 2000 test pairs, 1-3 mentions per pair.
    pub fn standard(seed: u64) -> Self {
        SynthConfig {
            seed,
            entity_counts: [
                (EntityType::Country, 50),
                (EntityType::City, 500),
                (EntityType::Person, 1500),
                (EntityType::Organization, 300),
            ]
            .into_iter()
            .collect(),
            relations: default_schema(),
            coverage: 0.7,
            pairs: 2000,
            noise: 0.4,
            mentions_per_pair: (1, 3),
            mode: SynthMode::Conflict,
        }
    }

    pub fn noiseless(seed: u64) -> Self {
        SynthConfig {
            noise: 0.0,
            ..Self::standard(seed)
        }
    }

    pub fn riedel(seed: u64) -> Self {
        SynthConfig {
            mode: SynthMode::Riedel {
                dominant: "worksFor".into(),
            },
            ..Self::standard(seed)
        }
    }

    /// The standard world scaled down to `pairs` test pairs.
    pub fn small(seed: u64, pairs: usize) -> Self {
        SynthConfig {
            entity_counts: [
                (EntityType::Country, 8),
                (EntityType::City, 40),
                (EntityType::Person, 60),
                (EntityType::Organization, 20),
            ]
            .into_iter()
            .collect(),
            pairs,
            ..Self::standard(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.noise) {
            problems.push(format!("noise {} outside [0, 1]", self.noise));
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            problems.push(format!("coverage {} outside (0, 1]", self.coverage));
        }
        let (lo, hi) = self.mentions_per_pair;
        if lo == 0 || lo > hi {
            problems.push(format!("bad mentions-per-pair range {lo}..={hi}"));
        }
        if self.pairs == 0 {
            problems.push("at least one test pair is required".into());
        }
        let mut names = BTreeSet::new();
        for r in &self.relations {
            if r.name.trim().is_empty() || r.name == NA || r.name.contains(char::is_whitespace) {
                problems.push(format!("invalid relation name {:?}", r.name));
            }
            if !names.insert(r.name.as_str()) {
                problems.push(format!("duplicate relation {}", r.name));
            }
            for t in [r.subject_type, r.object_type] {
                if self.entity_counts.get(&t).copied().unwrap_or(0) < 2 {
                    problems.push(format!(
                        "relation {} needs at least 2 entities of type {t:?}",
                        r.name
                    ));
                }
            }
        }
        let shares_slot = self.relations.iter().enumerate().any(|(i, a)| {
            self.relations[i + 1..].iter().any(|b| {
                a.subject_type == b.subject_type
                    || a.object_type == b.object_type
                    || a.object_type == b.subject_type
                    || b.object_type == a.subject_type
            })
        });
        if self.relations.len() < 2 || !shares_slot {
            problems.push("need at least two relations sharing an argument type".into());
        }
        if let SynthMode::Riedel { dominant } = &self.mode {
            if !names.contains(dominant.as_str()) {
                problems.push(format!("dominant relation {dominant} is not in the schema"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    /// Full KB, sorted.
    pub kb: Vec<Triple>,
    /// Gold triples of the test pairs, sorted.
    pub gold: Vec<Triple>,
    pub predictions: Vec<MentionPrediction>,
}

impl SynthWorld {
    /// Writes `triples.tsv`, `gold.tsv` and `predictions.jsonl` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, f: &dyn Fn(&mut BufWriter<fs::File>) -> std::io::Result<()>| {
            let path = dir.join(name);
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(|e| Error::io(&path, e))
        };
        write("triples.tsv", &|w| write_triples(w, &self.kb))?;
        write("gold.tsv", &|w| write_triples(w, &self.gold))?;
        write("predictions.jsonl", &|w| {
            write_predictions(w, &self.predictions)
        })?;
        Ok(())
    }
}

fn entity_names(t: EntityType, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n)
        .map(|i| format!("{}_{:0width$}", t.prefix(), i))
        .collect()
}

fn pool_size(n: usize, frac: f64) -> usize {
    ((n as f64 * frac).ceil() as usize).clamp(1, n)
}

struct World {
    by_type: BTreeMap<EntityType, Vec<String>>,
    facts: BTreeSet<Triple>,
}

fn build_world(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> World {
    let mut by_type = BTreeMap::new();
    for t in EntityType::ALL {
        let mut names = entity_names(t, cfg.entity_counts.get(&t).copied().unwrap_or(0));
        names.shuffle(rng);
        by_type.insert(t, names);
    }
    let prefix = |t: EntityType, len: usize| -> &[String] {
        let all = &by_type[&t];
        &all[..len.clamp(1, all.len())]
    };

    let mut facts = BTreeSet::new();
    for r in &cfg.relations {
        let n_s = by_type[&r.subject_type].len();
        let n_o = by_type[&r.object_type].len();
        let mut add = |s: &String, o: &String| {
            facts.insert(Triple {
                subject: s.clone(),
                relation: r.name.clone(),
                object: o.clone(),
            });
        };
        match (r.functional, r.inverse_functional) {
            (true, true) => {
                let subjects = prefix(r.subject_type, pool_size(n_s, cfg.coverage));
                let objects = prefix(r.object_type, pool_size(n_o, cfg.coverage));
                let mut objs: Vec<&String> = objects.iter().collect();
                objs.shuffle(rng);
                for (s, o) in subjects.iter().zip(objs) {
                    add(s, o);
                }
            }
            (true, false) => {
                let subjects = prefix(r.subject_type, pool_size(n_s, cfg.coverage));
                let objects = prefix(
                    r.object_type,
                    pool_size(n_o, cfg.coverage)
                        .min(subjects.len().div_ceil(3))
                        .max(2),
                );
                for s in subjects {
                    add(s, objects.choose(rng).expect("object pool"));
                }
            }
            (false, true) => {
                let objects = prefix(r.object_type, pool_size(n_o, cfg.coverage));
                let subjects = prefix(
                    r.subject_type,
                    pool_size(n_s, cfg.coverage)
                        .min(objects.len().div_ceil(3))
                        .max(2),
                );
                for o in objects {
                    add(subjects.choose(rng).expect("subject pool"), o);
                }
            }
            (false, false) => {
                let subjects = prefix(r.subject_type, pool_size(n_s, cfg.coverage));
                let objects = prefix(
                    r.object_type,
                    pool_size(n_o, cfg.coverage)
                        .min((subjects.len() * 5).div_ceil(6))
                        .max(3),
                );
                for s in subjects {
                    let k = rng.gen_range(2..=3).min(objects.len());
                    for o in objects.choose_multiple(rng, k) {
                        add(s, o);
                    }
                }
            }
        }
    }
    World { by_type, facts }
}

/// Scores for one mention peaked on `peak`; `gold` (if different) may trail it.
fn mention_scores(
    rng: &mut ChaCha8Rng,
    relations: &[String],
    peak: &str,
    gold: Option<&str>,
) -> BTreeMap<String, f64> {
    let mut scores = BTreeMap::new();
    let top: f64 = rng.gen_range(0.45..0.7);
    scores.insert(peak.to_owned(), top);
    if let Some(g) = gold.filter(|g| *g != peak) {
        let s = if rng.gen_bool(0.7) {
            rng.gen_range(0.12..(top - 0.05).min(0.85 - top))
        } else {
            rng.gen_range(0.0..0.08)
        };
        scores.insert(g.to_owned(), s);
    }
    let others: Vec<&String> = relations
        .iter()
        .filter(|r| !scores.contains_key(r.as_str()))
        .collect();
    if let Some(d) = others.choose(rng) {
        scores.insert((*d).clone(), rng.gen_range(0.0..0.12));
    }
    let used: f64 = scores.values().sum();
    scores.insert(NA.to_owned(), ((1.0 - used) * 0.5).max(0.0));
    scores
}

/// Generates the world for `cfg`. Identical configs give identical worlds.
pub fn generate(cfg: &SynthConfig) -> Result<SynthWorld> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let world = build_world(cfg, &mut rng);
    let schema: BTreeMap<&str, &RelationSchema> =
        cfg.relations.iter().map(|r| (r.name.as_str(), r)).collect();
    let rel_names: Vec<String> = cfg.relations.iter().map(|r| r.name.clone()).collect();

    // gold relations per (subject, object)
    let mut facts_by_pair: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for t in &world.facts {
        facts_by_pair
            .entry((t.subject.as_str(), t.object.as_str()))
            .or_default()
            .push(t.relation.as_str());
    }

    let test_pairs: Vec<((String, String), Vec<String>)> = match &cfg.mode {
        SynthMode::Conflict => {
            let keys: Vec<&(&str, &str)> = facts_by_pair.keys().collect();
            let k = cfg.pairs.min(keys.len());
            let mut chosen: Vec<&(&str, &str)> =
                keys.choose_multiple(&mut rng, k).copied().collect();
            chosen.sort();
            chosen
                .into_iter()
                .map(|&(s, o)| {
                    let rels = facts_by_pair[&(s, o)]
                        .iter()
                        .map(|r| r.to_string())
                        .collect();
                    ((s.to_owned(), o.to_owned()), rels)
                })
                .collect()
        }
        SynthMode::Riedel { dominant } => {
            let r = schema[dominant.as_str()];
            let true_pairs: Vec<(&str, &str)> = world
                .facts
                .iter()
                .filter(|t| &t.relation == dominant)
                .map(|t| (t.subject.as_str(), t.object.as_str()))
                .collect();
            let subjects = &world.by_type[&r.subject_type];
            let objects = &world.by_type[&r.object_type];
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            let mut attempts = 0;
            while out.len() < cfg.pairs && attempts < cfg.pairs * 50 {
                attempts += 1;
                let (s, o) = if rng.gen_bool(1.0 - cfg.noise) {
                    *true_pairs.choose(&mut rng).expect("dominant facts")
                } else {
                    (
                        subjects.choose(&mut rng).expect("subjects").as_str(),
                        objects.choose(&mut rng).expect("objects").as_str(),
                    )
                };
                if !seen.insert((s, o)) {
                    continue;
                }
                let rels = facts_by_pair
                    .get(&(s, o))
                    .map(|v| v.iter().map(|r| r.to_string()).collect())
                    .unwrap_or_default();
                out.push(((s.to_owned(), o.to_owned()), rels));
            }
            out
        }
    };

    let type_of = |e: &str| -> EntityType {
        EntityType::ALL
            .into_iter()
            .find(|t| {
                e.starts_with(t.prefix()) && e.as_bytes().get(t.prefix().len()) == Some(&b'_')
            })
            .expect("generated entity names carry their type")
    };

    let width = test_pairs.len().saturating_sub(1).to_string().len().max(4);
    let mut gold = BTreeSet::new();
    let mut predictions = Vec::new();
    let (lo, hi) = cfg.mentions_per_pair;
    for (idx, ((s, o), rels)) in test_pairs.iter().enumerate() {
        let pair_id = format!("p{:0width$}", idx);
        for r in rels {
            gold.insert(Triple {
                subject: s.clone(),
                relation: r.clone(),
                object: o.clone(),
            });
        }
        let (ts, to) = (type_of(s), type_of(o));
        let misfits: Vec<&String> = rel_names
            .iter()
            .filter(|r| {
                let sc = schema[r.as_str()];
                sc.subject_type != ts || sc.object_type != to
            })
            .collect();
        let n_mentions = rng.gen_range(lo..=hi).max(rels.len());
        for m in 0..n_mentions {
            let scores = match &cfg.mode {
                SynthMode::Riedel { dominant } => {
                    mention_scores(&mut rng, &rel_names, dominant, Some(dominant))
                }
                SynthMode::Conflict => {
                    let g = &rels[m % rels.len()];
                    if rng.gen_bool(cfg.noise) && !misfits.is_empty() {
                        let c = misfits.choose(&mut rng).expect("misfit");
                        mention_scores(&mut rng, &rel_names, c, Some(g))
                    } else {
                        mention_scores(&mut rng, &rel_names, g, None)
                    }
                }
            };
            predictions.push(MentionPrediction {
                pair_id: pair_id.clone(),
                subject: s.clone(),
                object: o.clone(),
                mention_id: format!("m{m:02}"),
                scores,
            });
        }
    }

    Ok(SynthWorld {
        kb: world.facts.into_iter().collect(),
        gold: gold.into_iter().collect(),
        predictions,
    })
}
