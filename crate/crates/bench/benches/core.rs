use atomsite_bench::{POSITION_REPLY, PRODUCTS, REACTION};
use atomsite_core::chem::{canonical_smiles, parse_smiles, substructure_match};
use atomsite_core::output::parse_position_output;
use atomsite_core::reaction::{
    extract_structural_label, parse_reaction_smiles, Ontology, OntologyEntry, ReactionRecord, Split,
};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn canonicalization(c: &mut Criterion) {
    let mols: Vec<_> = PRODUCTS.iter().map(|s| parse_smiles(s).unwrap()).collect();
    c.bench_function("parse", |b| {
        b.iter(|| {
            PRODUCTS
                .iter()
                .map(|s| parse_smiles(black_box(s)).unwrap().len())
                .sum::<usize>()
        })
    });
    c.bench_function("canonical_smiles", |b| {
        b.iter(|| {
            mols.iter()
                .map(|m| canonical_smiles(black_box(m), true).len())
                .sum::<usize>()
        })
    });
}

fn substructure(c: &mut Criterion) {
    let target = parse_smiles(PRODUCTS[2]).unwrap();
    let hit = parse_smiles("O=C(N)c1ccccc1").unwrap();
    let miss = parse_smiles("C#N").unwrap();
    c.bench_function("substructure_hit", |b| {
        b.iter(|| substructure_match(black_box(&hit), &target))
    });
    c.bench_function("substructure_miss", |b| {
        b.iter(|| substructure_match(black_box(&miss), &target))
    });
}

fn labels(c: &mut Criterion) {
    let p = parse_reaction_smiles(REACTION).unwrap();
    let record = ReactionRecord {
        record_id: "b".into(),
        reactants: p.reactants,
        reagents: p.reagents,
        product: p.product,
        reaction_name: "Amide Schotten-Baumann".into(),
        reaction_class: "Acylation".into(),
        split: Split::Test,
        reaction_smiles: REACTION.into(),
    };
    c.bench_function("structural_label", |b| {
        b.iter(|| extract_structural_label(black_box(&record)))
    });
}

fn parsing(c: &mut Criterion) {
    let product = parse_smiles("[CH3:1][C:2](=[O:3])[NH:4][CH3:6]").unwrap();
    let ontology = Ontology::new(vec![OntologyEntry {
        id: "Amide Schotten-Baumann".into(),
        class: "Acylation".into(),
    }])
    .unwrap();
    c.bench_function("position_output", |b| {
        b.iter(|| parse_position_output(black_box(POSITION_REPLY), &product, &ontology))
    });
}

criterion_group!(benches, canonicalization, substructure, labels, parsing);
criterion_main!(benches);
