//! Property tests against brute-force references, plus pinned numbering for a
//! drug-like product.

mod common;

use std::collections::BTreeSet;
use std::fs;

use atomsite_core::chem::{
    annotate_sequential_maps, canonical_smiles, canonicalize, find_embedding, parse_smiles,
    AtomMapSet, Molecule,
};
use atomsite_core::metrics::{
    aggregate_position, aggregate_transition, atom_share, jaccard, score_position,
    score_transition, MatchOptions, PositionRow, TransitionRow, TEMPLATE_SHARE_THRESHOLD,
};
use atomsite_core::output::{
    parse_position_output, parse_transition_output, DisconnectionCandidate,
};
use atomsite_core::prompt::{position_tokens, product_text};
use atomsite_core::reaction::{
    build_ontology, subsample_eval_set, Ontology, OntologyEntry, ReactionRecord, Split,
};
use common::gen::*;
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn canon(m: &Molecule) -> String {
    canonical_smiles(m, true)
}

fn set(maps: &BTreeSet<u32>) -> AtomMapSet {
    let mut s = AtomMapSet::new();
    for &m in maps {
        s.insert(m);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_form_is_idempotent(seed in any::<u64>(), n in 2usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_molecule(&mut rng, n, GenOptions::rich());
        let once = canon(&m);
        let again = canon(&parse_smiles(&once).unwrap());
        prop_assert_eq!(once, again);
    }

    #[test]
    fn written_smiles_round_trip_to_an_isomorphic_graph(seed in any::<u64>(), n in 2usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_molecule(&mut rng, n, GenOptions::rich());
        let back = parse_smiles(m.source_text()).unwrap();
        prop_assert!(isomorphic(&m, &back), "{}", m.source_text());
    }

    #[test]
    fn jaccard_matches_set_reference(
        a in proptest::collection::btree_set(1u32..20, 0..8),
        b in proptest::collection::btree_set(1u32..20, 0..8),
    ) {
        let j = jaccard(&set(&a), &set(&b));
        prop_assert_eq!(j, jaccard_reference(&a, &b));
        prop_assert_eq!(j, jaccard(&set(&b), &set(&a)));
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(j == 1.0, a == b);
    }

    #[test]
    fn subsample_respects_cap_and_seed(
        names in proptest::collection::vec(0usize..6, 0..60),
        cap in 1usize..6,
        seed in any::<u64>(),
    ) {
        let records: Vec<ReactionRecord> =
            names.iter().enumerate().map(|(i, &n)| record(&i.to_string(), &name_of(n), Split::Test)).collect();
        let a = subsample_eval_set(&records, cap, "OtherReaction", seed);
        let ids_of = |v: &[ReactionRecord]| v.iter().map(|r| r.record_id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids_of(&a), ids_of(&subsample_eval_set(&records, cap, "OtherReaction", seed)));
        for n in 1..6 {
            let kept = a.iter().filter(|r| r.reaction_name == name_of(n)).count();
            let avail = records.iter().filter(|r| r.reaction_name == name_of(n)).count();
            prop_assert_eq!(kept, avail.min(cap));
        }
        // input order is kept
        let ids: Vec<usize> = a.iter().map(|r| r.record_id.parse().unwrap()).collect();
        prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ontology_rebuild_is_stable(names in proptest::collection::vec((0usize..6, 0usize..3), 1..40)) {
        let records: Vec<ReactionRecord> = names
            .iter()
            .enumerate()
            .map(|(i, &(n, c))| {
                let mut r = record(&i.to_string(), &name_of(n), Split::Train);
                r.reaction_class = format!("class {c}");
                r
            })
            .collect();
        let o = build_ontology(&records, Split::Train).unwrap();
        prop_assert_eq!(&o, &build_ontology(&records, Split::Train).unwrap());
        let reread = Ontology::new(serde_json::from_str::<Vec<OntologyEntry>>(&o.to_json()).unwrap()).unwrap();
        prop_assert_eq!(o.entries(), reread.entries());
        let ids: Vec<&str> = o.entries().iter().map(|e| e.id.as_str()).collect();
        prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn aggregates_do_not_change_when_rows_are_duplicated(
        rows in proptest::collection::vec((0u8..4, proptest::collection::btree_set(1u32..8, 0..4)), 1..20),
        k in 2usize..5,
    ) {
        let gt: BTreeSet<u32> = [2, 3].into();
        let base: Vec<PositionRow> = rows
            .iter()
            .enumerate()
            .map(|(i, (name, s))| {
                let cands = if s.is_empty() { vec![] } else { vec![candidate(s, &name_of(*name as usize))] };
                PositionRow {
                    id: i.to_string(),
                    score: score_position(&cands, &set(&gt), "R1"),
                    failure: cands.is_empty().then(|| "no_json".to_string()),
                    gt_name: "R1".into(),
                    gt_class: "class".into(),
                    pred_name: cands.first().map(|c| c.reaction_name.clone()),
                    pred_class: cands.first().map(|_| "class".to_string()),
                    pred_in_ontology: cands.first().map(|_| true),
                }
            })
            .collect();
        let repeated: Vec<PositionRow> = base.iter().cycle().take(base.len() * k).cloned().collect();
        let a = aggregate_position(&base, "OtherReaction");
        let b = aggregate_position(&repeated, "OtherReaction");
        prop_assert_eq!(a.partial_match, b.partial_match);
        prop_assert_eq!(a.exact_match, b.exact_match);
        prop_assert_eq!(a.reaction_accuracy, b.reaction_accuracy);
        prop_assert_eq!(a.reaction_accuracy_conditional, b.reaction_accuracy_conditional);
        prop_assert_eq!(a.mean_best_jaccard, b.mean_best_jaccard);
        prop_assert_eq!(a.avg_number_of_predictions, b.avg_number_of_predictions);
        prop_assert_eq!(a.total_predictions * k, b.total_predictions);
        prop_assert_eq!(a.failed_predictions * k, b.failed_predictions);
        prop_assert_eq!(a.confusion_name.total() * k as u64, b.confusion_name.total());
    }
}

fn name_of(n: usize) -> String {
    if n == 0 {
        "OtherReaction".into()
    } else {
        format!("R{n}")
    }
}

fn record(id: &str, name: &str, split: Split) -> ReactionRecord {
    let p = atomsite_core::reaction::parse_reaction_smiles("[CH3:1][OH:2]>>[CH3:1][Cl:2]").unwrap();
    ReactionRecord {
        record_id: id.into(),
        reactants: p.reactants,
        reagents: p.reagents,
        product: p.product,
        reaction_name: name.into(),
        reaction_class: "class".into(),
        split,
        reaction_smiles: String::new(),
    }
}

fn candidate(s: &BTreeSet<u32>, name: &str) -> DisconnectionCandidate {
    DisconnectionCandidate {
        s: set(s),
        disconnection: String::new(),
        reaction_name: name.into(),
        reaction_class: "class".into(),
        in_ontology: true,
        model_in_ontology: None,
        importance: 3,
        priority: 1,
        rationale: String::new(),
    }
}

#[test]
fn symmetric_molecules_are_permutation_invariant() {
    let cases = [
        "C12C3C4C1C5C2C3C45",
        "C1C2CC3CC1CC(C2)C3",
        "c1ccc2ccccc2c1",
        "C1CC2CCC1CC2",
        "c1ccccc1.c1ccccc1",
        "C1CCCCC1C1CCCCC1",
        "[CH3:1][CH2:2][CH2:3][CH3:4]",
        "OC(=O)C(O)C(O)C(O)=O",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for smi in cases {
        let m = parse_smiles(smi).unwrap();
        let want = canon(&m);
        for _ in 0..60 {
            let p = m.permuted(&random_permutation(&mut rng, m.len()));
            assert_eq!(canon(&p), want, "{smi}");
        }
    }
}

#[test]
fn canonical_graph_is_isomorphic_to_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let m = random_molecule(&mut rng, 12, GenOptions::rich());
        assert!(isomorphic(&m, &canonicalize(&m)), "{}", m.source_text());
    }
}

#[test]
fn template_certificates_reverify() {
    let work = tempfile::tempdir().unwrap();
    let run = golden_run(work.path(), &golden("replay"));
    let rows: Vec<TransitionRow> = fs::read_to_string(run.join("transition_rows.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let ds = atomsite_core::reaction::ingest_dataset(
        &golden("dataset.jsonl"),
        atomsite_core::reaction::DatasetFormat::Jsonl,
    )
    .unwrap()
    .records;
    let mut checked = 0;
    for row in rows.iter().filter(|r| r.score.template_acc) {
        let cert = row
            .score
            .certificate
            .as_ref()
            .expect("hit carries a certificate");
        let gt: Vec<Molecule> = ds
            .iter()
            .find(|r| r.record_id == row.id)
            .unwrap()
            .reactants
            .iter()
            .flat_map(|m| m.fragments())
            .collect();
        let mut used = BTreeSet::new();
        for pair in &cert.pairs {
            let t = &cert.templates[pair.template_index];
            let g = &gt[pair.gt_index];
            assert!(
                used.insert(pair.template_index),
                "template reused in {}",
                row.id
            );
            assert_eq!(pair.share, atom_share(t, g));
            assert!(pair.share >= TEMPLATE_SHARE_THRESHOLD);
            assert_eq!(pair.embedding.len(), t.len());
            // every mapped edge lands on an edge of the same kind
            for b in t.bonds() {
                let hit = g.bond_between(pair.embedding[b.begin], pair.embedding[b.end]);
                assert!(hit.is_some(), "{}: bond not embedded", row.id);
            }
            assert!(find_embedding(t, g).is_some());
        }
        assert_eq!(cert.pairs.len(), gt.len());
        checked += 1;
    }
    assert_eq!(checked, 3);
    let report = aggregate_transition(&rows);
    assert_eq!(report.template_accuracy, 30.0);
}

#[test]
fn transition_scoring_is_order_independent() {
    let product = parse_smiles("[CH3:1][C:2](=[O:3])[O:4][CH2:5][CH3:6]").unwrap();
    let perm = |sets: &[&[&str]]| {
        let perms: Vec<serde_json::Value> = sets
            .iter()
            .map(|r| serde_json::json!({"reactants": r, "is_valid": true, "is_template": false, "reasoning": ""}))
            .collect();
        serde_json::json!({"reaction_analysis": [{"forward_reaction_name": "Esterification", "reactant_permutations": perms}]})
            .to_string()
    };
    let a = perm(&[&["CC(=O)Cl", "OCC"], &["CC(=O)O", "OCC"]]);
    let b = perm(&[&["CCO", "CC(O)=O"]]);
    let gt = vec![
        parse_smiles("CC(=O)O").unwrap(),
        parse_smiles("CCO").unwrap(),
    ];
    let pa = parse_transition_output(&a, &product);
    let pb = parse_transition_output(&b, &product);
    let sa = score_transition(&pa.ok, &gt, MatchOptions::default());
    let sb = score_transition(&pb.ok, &gt, MatchOptions::default());
    assert!(sa.reactant_acc && sb.reactant_acc);
}

/// A piperazine amide in the style of the serine-hydrolase inhibitors:
/// difluoro ketone, aryl sulfoxide, two aryl chlorides.
const DRUG_LIKE: &str = "[CH3:1][C:2]([C:3](=[O:4])[CH2:5][S:6](=[O:7])[c:8]1[cH:9][cH:10][c:11]([C:12](=[O:13])\
[N:14]2[CH2:15][CH2:16][N:17]([c:18]3[cH:19][c:20]([Cl:21])[cH:22][cH:23][cH:24]3)[CH2:25][C@@H:26]2[CH3:27])\
[cH:28][c:29]1[Cl:30])([F:31])[F:32]";

#[test]
fn drug_like_product_tokens() {
    let m = parse_smiles(DRUG_LIKE).unwrap();
    assert_eq!(m.heavy_atom_count(), 32);
    let pos = |maps: &[u32]| position_tokens(&m, &set(&maps.iter().copied().collect())).unwrap();
    assert_eq!(pos(&[12, 14]), "C:12 N:14");
    assert_eq!(pos(&[17, 18]), "N:17 c:18");
    assert_eq!(pos(&[20, 21]), "c:20 Cl:21");
    assert_eq!(pos(&[2, 31, 32]), "C:2 F:31 F:32");
    assert_eq!(pos(&[5, 6]), "C:5 S:6");

    let text = product_text(&m).unwrap();
    assert_eq!(parse_smiles(&text).unwrap().atom_maps(), m.atom_maps());

    let ontology = Ontology::new(vec![OntologyEntry {
        id: "Carboxylic acid to amide conversion".into(),
        class: "Acylation".into(),
    }])
    .unwrap();
    let reply = r#"{"disconnections":[{"disconnection":"C:12 N:14","reactions":[
        {"forwardReaction":"Carboxylic acid to amide conversion","forwardReactionClass":"Acylation",
         "isInOntology":true,"Retrosynthesis Importance":4,"Priority":1,"rationale":"amide"}]}]}"#;
    let parsed = parse_position_output(reply, &m, &ontology);
    assert!(parsed.failure_class.is_none());
    assert_eq!(parsed.ok.len(), 1);
    assert_eq!(parsed.ok[0].s.to_vec(), vec![12, 14]);
    assert!(parsed.ok[0].in_ontology);
}

#[test]
fn drug_like_sequential_numbering_is_pinned() {
    let m = parse_smiles(DRUG_LIKE).unwrap();
    let numbered = annotate_sequential_maps(&m.without_maps());
    assert_eq!(
        numbered.atom_maps().to_vec(),
        (1..=32).collect::<Vec<u32>>()
    );
    let text = numbered.source_text().to_string();
    // numbering does not depend on how the input was written
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = m
            .without_maps()
            .permuted(&random_permutation(&mut rng, m.len()));
        assert_eq!(annotate_sequential_maps(&p).source_text(), text);
    }

    let path = fixture("drug_like_sequential.smi");
    if blessing() {
        fs::write(&path, format!("{text}\n")).unwrap();
    }
    let pinned = fs::read_to_string(&path).unwrap();
    assert_eq!(
        pinned.trim_end(),
        text,
        "sequential numbering changed; rerun with ATOMSITE_BLESS=1"
    );

    // the amide carbon is the one carbon bonded to both N and O
    let sym = |i: usize| numbered.atom(i).symbol();
    let amide_c = (0..numbered.len())
        .find(|&i| {
            let ns: Vec<String> = numbered.neighbors(i).iter().map(|&(n, _)| sym(n)).collect();
            sym(i) == "C" && ns.iter().any(|s| s == "N") && ns.iter().any(|s| s == "O")
        })
        .expect("amide carbon");
    let amide_n = numbered
        .neighbors(amide_c)
        .iter()
        .map(|&(n, _)| n)
        .find(|&n| sym(n) == "N")
        .unwrap();
    let maps: BTreeSet<u32> = [
        numbered.atom(amide_c).atom_map.unwrap(),
        numbered.atom(amide_n).atom_map.unwrap(),
    ]
    .into();
    let tokens = position_tokens(&numbered, &set(&maps)).unwrap();
    let c = numbered.atom(amide_c).atom_map.unwrap();
    let n = numbered.atom(amide_n).atom_map.unwrap();
    let want = if c < n {
        format!("C:{c} N:{n}")
    } else {
        format!("N:{n} C:{c}")
    };
    assert_eq!(tokens, want);
}
