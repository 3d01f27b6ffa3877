#![allow(dead_code)]

use std::collections::BTreeMap;

use kbjoint::candidates::{Candidate, PairCandidates};
use kbjoint::clues::{ClueKind, ClueSet, Provenance, TypeClue, UniquenessClue};
use kbjoint::ilp::IlpModel;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Coefficient drawing policy for random models.
#[derive(Debug, Clone, Copy)]
pub enum Coeffs {
    /// Uniform in (0, 2].
    Continuous,
    /// Multiples of 1/4 in (0, 2]; many exact ties.
    Quarters,
    /// Multiples of 1/1024 in (0, 2]; sums are exact.
    Dyadic,
}

fn draw(rng: &mut ChaCha8Rng, c: Coeffs) -> f64 {
    match c {
        Coeffs::Continuous => 2.0 - rng.gen::<f64>() * 2.0,
        Coeffs::Quarters => rng.gen_range(1..=8) as f64 / 4.0,
        Coeffs::Dyadic => rng.gen_range(1..=2048) as f64 / 1024.0,
    }
}

/// Abstract random program: coefficients, pairwise conflicts, groups and
/// links `(penalty, a, b)` over primary variables `0..coeffs.len()`.
#[derive(Debug, Clone)]
pub struct Spec {
    pub coeffs: Vec<f64>,
    pub pairwise: Vec<[usize; 2]>,
    pub groups: Vec<Vec<usize>>,
    pub links: Vec<(f64, usize, usize)>,
}

impl Spec {
    pub fn num_vars(&self) -> usize {
        self.coeffs.len() + self.links.len()
    }
}

/// Random program with at most `max_vars` variables in total.
pub fn random_spec(rng: &mut ChaCha8Rng, max_vars: usize, coeffs: Coeffs) -> Spec {
    let n = rng.gen_range(1..=max_vars.min(16));
    let coeffs_v: Vec<f64> = (0..n).map(|_| draw(rng, coeffs)).collect();
    let density = rng.gen_range(0.05..0.35);
    let mut pairwise = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                pairwise.push([a, b]);
            }
        }
    }
    let mut groups = Vec::new();
    if n >= 3 {
        for _ in 0..rng.gen_range(0..=3) {
            let size = rng.gen_range(3..=n.min(5));
            let mut ids: Vec<usize> = (0..n).collect();
            ids.shuffle(rng);
            ids.truncate(size);
            ids.sort_unstable();
            groups.push(ids);
        }
    }
    let mut links = Vec::new();
    if n >= 2 {
        let room = max_vars - n;
        for _ in 0..rng.gen_range(0..=room.min(6)) {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            let w = draw(rng, coeffs);
            let penalty = if rng.gen_bool(0.85) { -w } else { w / 2.0 };
            links.push((penalty, a.min(b), a.max(b)));
        }
    }
    Spec {
        coeffs: coeffs_v,
        pairwise,
        groups,
        links,
    }
}

/// Materialises `spec`: primary variables first, then one auxiliary
/// variable per link.
pub fn build(spec: &Spec) -> IlpModel {
    let mut m = IlpModel::new();
    for (i, &c) in spec.coeffs.iter().enumerate() {
        m.add_var(format!("x{i}"), c);
    }
    for (j, &(p, _, _)) in spec.links.iter().enumerate() {
        m.add_var(format!("aux{j}"), p);
    }
    add_rows(&mut m, spec, &(0..spec.num_vars()).collect::<Vec<_>>());
    m
}

/// Adds the rows of `spec` with primary variable `i` at `ids[i]` and link `j`
/// at `ids[n + j]`.
pub fn add_rows(m: &mut IlpModel, spec: &Spec, ids: &[usize]) {
    for &[a, b] in &spec.pairwise {
        m.add_pairwise(ids[a], ids[b]).unwrap();
    }
    for g in &spec.groups {
        m.add_group(g.iter().map(|&v| ids[v]).collect()).unwrap();
    }
    let n = spec.coeffs.len();
    for (j, &(_, a, b)) in spec.links.iter().enumerate() {
        m.add_link(ids[n + j], ids[a], ids[b]).unwrap();
    }
}

/// Several independent specs laid out over one shuffled id space.
pub fn combined(rng: &mut ChaCha8Rng, specs: &[Spec]) -> IlpModel {
    let total: usize = specs.iter().map(Spec::num_vars).sum();
    let mut ids: Vec<usize> = (0..total).collect();
    ids.shuffle(rng);
    let mut coeff = vec![0.0; total];
    let mut offset = 0;
    let mut maps = Vec::new();
    for s in specs {
        let map: Vec<usize> = ids[offset..offset + s.num_vars()].to_vec();
        for (i, &c) in s.coeffs.iter().enumerate() {
            coeff[map[i]] = c;
        }
        for (j, &(p, _, _)) in s.links.iter().enumerate() {
            coeff[map[s.coeffs.len() + j]] = p;
        }
        offset += s.num_vars();
        maps.push(map);
    }
    let mut m = IlpModel::new();
    for (i, &c) in coeff.iter().enumerate() {
        m.add_var(format!("v{i}"), c);
    }
    for (s, map) in specs.iter().zip(&maps) {
        add_rows(&mut m, s, map);
    }
    m
}

/// Random candidates over a small entity pool so that pairs share arguments,
/// and random clues with finite scores over relations `r0..r4`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<PairCandidates>, ClueSet) {
    let rels: Vec<String> = (0..5).map(|i| format!("r{i}")).collect();
    let entities: Vec<String> = (0..6).map(|i| format!("e{i}")).collect();
    let n_pairs = rng.gen_range(4..=14);
    let mut pairs = Vec::new();
    for p in 0..n_pairs {
        let s = entities.choose(rng).unwrap();
        let o = entities.choose(rng).unwrap();
        let mut pc = PairCandidates::empty(&format!("p{p:02}"), s, o);
        let k = rng.gen_range(1..=3);
        for r in rels.choose_multiple(rng, k) {
            let conf = rng.gen_range(0.1..2.0);
            pc.candidates.insert(
                r.clone(),
                Candidate {
                    conf,
                    max_mention: rng.gen_range(0.1..1.0f64).min(conf),
                    supporting_mentions: vec!["m0".into()],
                },
            );
        }
        pairs.push(pc);
    }
    let mut clues = ClueSet::new();
    for kind in [ClueKind::Sr, ClueKind::Ro, ClueKind::Rer] {
        for a in &rels {
            for b in &rels {
                if (kind.is_symmetric() && a >= b) || !rng.gen_bool(0.2) {
                    continue;
                }
                let k = -rng.gen_range(3.2..9.0);
                clues.insert_type(TypeClue::new(kind, a, b, k, Provenance::Mined));
            }
        }
    }
    for kind in [ClueKind::Ou, ClueKind::Su] {
        for r in &rels {
            if rng.gen_bool(0.2) {
                clues.insert_unique(UniquenessClue::new(kind, r, 0.9, Provenance::Mined));
            }
        }
    }
    (pairs, clues)
}

pub fn selected_set(assignment: &[bool], limit: usize) -> Vec<usize> {
    assignment[..limit]
        .iter()
        .enumerate()
        .filter(|(_, &x)| x)
        .map(|(i, _)| i)
        .collect()
}

pub fn counts(map: &BTreeMap<String, usize>) -> usize {
    map.values().sum()
}
