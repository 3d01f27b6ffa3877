mod common;

use std::collections::{BTreeMap, BTreeSet};

use kbjoint::candidates::{aggregate, build_candidates, CandidateParams, MentionPrediction, NA};
use kbjoint::clues::{kulczynski, ClueKind, ClueSet};
use kbjoint::config::Mode;
use kbjoint::constraints::{generate_hard, HardConstraint};
use kbjoint::ilp::{brute_force, lp_names, solve, write_lp, SolveOptions};
use kbjoint::kb_store::{parse_triples, write_triples, KbIndex, Triple};
use kbjoint::pipeline::{build_program, PipelineParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{build, random_instance, random_spec, selected_set, Coeffs};

fn triple_strategy() -> impl Strategy<Value = Triple> {
    (0..6u8, 0..4u8, 0..6u8).prop_map(|(s, r, o)| Triple {
        subject: format!("e{s}"),
        relation: format!("r{r}"),
        object: format!("e{o}"),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kb_index_ignores_order_and_duplicates(triples in prop::collection::vec(triple_strategy(), 0..40), seed in any::<u64>()) {
        let mut shuffled = triples.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        shuffled.extend(triples.iter().take(3).cloned());
        let a = KbIndex::from_triples(triples.clone());
        let b = KbIndex::from_triples(shuffled);
        prop_assert_eq!(&a, &b);

        let distinct: BTreeSet<&Triple> = triples.iter().collect();
        prop_assert_eq!(a.len(), distinct.len());
        for r in a.relations() {
            let st = a.stats(r).unwrap();
            let rows: Vec<&&Triple> = distinct.iter().filter(|t| t.relation == r).collect();
            prop_assert_eq!(st.triple_count, rows.len());
            prop_assert_eq!(st.subj_fanout.values().sum::<usize>(), rows.len());
            prop_assert_eq!(st.obj_fanin.values().sum::<usize>(), rows.len());
            prop_assert_eq!(st.subjects.len(), st.subj_fanout.len());
        }
    }

    #[test]
    fn triples_round_trip_through_tsv(triples in prop::collection::vec(triple_strategy(), 0..30)) {
        let kb = KbIndex::from_triples(triples);
        let mut buf = Vec::new();
        write_triples(&mut buf, kb.triples()).unwrap();
        let parsed = parse_triples(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(KbIndex::from_triples(parsed), kb);
    }

    #[test]
    fn kulczynski_is_symmetric_and_bounded(a in prop::collection::btree_set(0..30u32, 1..20), b in prop::collection::btree_set(0..30u32, 1..20)) {
        let k = kulczynski(&a, &b).unwrap();
        prop_assert_eq!(k.to_bits(), kulczynski(&b, &a).unwrap().to_bits());
        prop_assert!(k <= 0.0);
        prop_assert_eq!(kulczynski(&a, &a).unwrap(), 0.0);
        if a.is_disjoint(&b) {
            prop_assert_eq!(k, f64::NEG_INFINITY);
        } else {
            let floor = (0.5 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).ln();
            prop_assert!(k >= floor - 1e-12);
        }
    }

    #[test]
    fn aggregation_ignores_mention_order(
        scores in prop::collection::vec(prop::collection::vec(0.0..0.4f64, 4), 1..6),
        seed in any::<u64>(),
    ) {
        let mentions: Vec<MentionPrediction> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| MentionPrediction {
                pair_id: "p".into(),
                subject: "a".into(),
                object: "b".into(),
                mention_id: format!("m{i}"),
                scores: [("r0", s[0]), ("r1", s[1]), ("r2", s[2]), (NA, s[3])]
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect(),
            })
            .collect();
        let mut shuffled = mentions.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let params = CandidateParams::default();
        let a = aggregate(&mentions, params).unwrap();
        let b = aggregate(&shuffled, params).unwrap();
        prop_assert_eq!(&a, &b);
        for (r, c) in &a.candidates {
            prop_assert!(r != NA);
            let expected: f64 = c
                .supporting_mentions
                .iter()
                .map(|m| mentions.iter().find(|x| &x.mention_id == m).unwrap().scores[r])
                .sum();
            prop_assert!((c.conf - expected).abs() <= 1e-12, "{} vs {}", c.conf, expected);
            prop_assert!(c.max_mention <= c.conf);
        }
    }

    #[test]
    fn solver_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = build(&random_spec(&mut rng, 18, Coeffs::Quarters));
        let s = solve(&model, &SolveOptions::default());
        let b = brute_force(&model).unwrap();
        prop_assert!(s.optimal);
        prop_assert_eq!(s.assignment, b.assignment);
    }
}

/// Constraint identity independent of variable numbering.
fn described(
    vars: &[kbjoint::constraints::DecisionVar],
    cs: &[HardConstraint],
) -> BTreeSet<(ClueKind, Vec<(String, String)>)> {
    cs.iter()
        .map(|c| {
            let mut members: Vec<(String, String)> = c
                .vars
                .iter()
                .map(|&v| (vars[v].pair_id.clone(), vars[v].relation.clone()))
                .collect();
            if c.family != ClueKind::Rer {
                members.sort();
            }
            (c.family, members)
        })
        .collect()
}

/// Direct re-derivation of the pairwise constraints from the entity joins.
fn pairwise_oracle(
    vars: &[kbjoint::constraints::DecisionVar],
    clues: &ClueSet,
) -> BTreeSet<(ClueKind, Vec<(String, String)>)> {
    let mut out = BTreeSet::new();
    let key = |v: &kbjoint::constraints::DecisionVar| (v.pair_id.clone(), v.relation.clone());
    for a in vars {
        for b in vars {
            if a.id < b.id
                && a.subject == b.subject
                && clues
                    .type_clue(ClueKind::Sr, &a.relation, &b.relation)
                    .is_some()
            {
                out.insert((ClueKind::Sr, vec![key(a), key(b)]));
            }
            if a.id < b.id
                && a.object == b.object
                && clues
                    .type_clue(ClueKind::Ro, &a.relation, &b.relation)
                    .is_some()
            {
                out.insert((ClueKind::Ro, vec![key(a), key(b)]));
            }
            if a.pair_id != b.pair_id
                && a.object == b.subject
                && clues
                    .type_clue(ClueKind::Rer, &a.relation, &b.relation)
                    .is_some()
            {
                out.insert((ClueKind::Rer, vec![key(a), key(b)]));
            }
        }
    }
    out
}

#[test]
fn constraints_are_order_invariant_and_match_the_joins() {
    for seed in 0..60 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pairs, clues) = random_instance(&mut rng);
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rng);
        let a = generate_hard(&pairs, &clues).unwrap();
        let b = generate_hard(&shuffled, &clues).unwrap();
        assert_eq!(a, b, "seed {seed}");

        let pairwise: Vec<HardConstraint> = a
            .constraints
            .iter()
            .filter(|c| c.family.is_type_clue())
            .cloned()
            .collect();
        assert_eq!(
            described(&a.vars, &pairwise),
            pairwise_oracle(&a.vars, &clues),
            "seed {seed}"
        );

        for c in a.constraints.iter().filter(|c| !c.family.is_type_clue()) {
            assert!(c.vars.len() >= 2);
            let rel = &a.vars[c.vars[0]].relation;
            for &v in &c.vars {
                assert_eq!(&a.vars[v].relation, rel);
                match c.family {
                    ClueKind::Ou => assert_eq!(a.vars[v].subject, a.vars[c.vars[0]].subject),
                    _ => assert_eq!(a.vars[v].object, a.vars[c.vars[0]].object),
                }
            }
        }
    }
}

/// Weighted count of violated soft constraints in a solution.
fn violation(program: &kbjoint::pipeline::Program, assignment: &[bool]) -> f64 {
    program
        .soft
        .as_ref()
        .map(|s| {
            s.aux
                .iter()
                .filter(|a| assignment[a.id])
                .map(|a| a.penalty)
                .sum::<f64>()
        })
        .unwrap_or(0.0)
}

#[test]
fn soft_violations_shrink_as_alpha_grows() {
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let (pairs, clues) = random_instance(&mut rng);
        let mut last = f64::INFINITY;
        for alpha in [0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 5.0] {
            let params = PipelineParams {
                mode: Mode::Soft,
                alpha,
                ..Default::default()
            };
            let program = build_program(&pairs, &clues, &params).unwrap();
            let s = solve(&program.model, &SolveOptions::default());
            assert!(program.model.check(&s.assignment).is_ok());
            // Compare unscaled violation mass so different alphas are comparable.
            let mass = if alpha > 0.0 {
                violation(&program, &s.assignment) / alpha
            } else {
                f64::INFINITY
            };
            assert!(
                mass <= last + 1e-9,
                "seed {seed} alpha {alpha}: {mass} > {last}"
            );
            last = mass;
        }
    }
}

#[test]
fn zero_alpha_keeps_every_candidate_without_hard_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (pairs, clues) = random_instance(&mut rng);
    let params = PipelineParams {
        mode: Mode::Soft,
        alpha: 0.0,
        ..Default::default()
    };
    let program = build_program(&pairs, &clues, &params).unwrap();
    let s = solve(&program.model, &SolveOptions::default());
    let n = program.generated.vars.len();
    let constrained: BTreeSet<usize> = program
        .hard
        .iter()
        .flat_map(|c| c.vars.iter().copied())
        .collect();
    for v in 0..n {
        if !constrained.contains(&v) {
            assert!(s.assignment[v], "free variable {v} dropped");
        }
    }
    assert!(selected_set(&s.assignment, n).len() >= n - constrained.len());
}

#[test]
fn lp_export_names_are_unique_and_rows_counted() {
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let model = build(&random_spec(&mut rng, 20, Coeffs::Continuous));
        let names = lp_names(&model);
        let distinct: BTreeSet<&String> = names.iter().collect();
        assert_eq!(distinct.len(), names.len());
        let text = write_lp(&model);
        let rows = text
            .lines()
            .filter(|l| l.trim_start().starts_with('c') && l.contains(':'))
            .count();
        assert_eq!(rows, model.num_rows(), "seed {seed}\n{text}");
        assert!(text.ends_with("End\n"));
    }
}

#[test]
fn candidates_group_by_pair() {
    let mk = |pair: &str, m: &str, r: &str, s: f64| MentionPrediction {
        pair_id: pair.into(),
        subject: format!("{pair}s"),
        object: format!("{pair}o"),
        mention_id: m.into(),
        scores: BTreeMap::from([(r.to_string(), s), (NA.to_string(), 1.0 - s)]),
    };
    let mentions = vec![
        mk("b", "m0", "r1", 0.6),
        mk("a", "m0", "r0", 0.7),
        mk("b", "m1", "r1", 0.5),
    ];
    let pairs = build_candidates(&mentions, CandidateParams::default()).unwrap();
    let ids: Vec<&str> = pairs.iter().map(|p| p.pair_id.as_str()).collect();
    assert_eq!(ids, ["a", "b"]);
    assert_eq!(pairs[1].candidates["r1"].conf, 0.6 + 0.5);
    assert_eq!(pairs[1].candidates["r1"].max_mention, 0.6);
}
