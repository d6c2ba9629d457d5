//! Random molecules and reactions, plus brute-force reference implementations
//! used to check the library against.

use std::collections::{BTreeMap, BTreeSet};

use atomsite_core::chem::{
    default_implicit_h, write_smiles, Atom, AtomKind, AtomMapSet, Bond, BondKind, Chirality,
    Element, ListEntry, Molecule,
};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub maps: bool,
    pub charges: bool,
    pub wildcards: bool,
    pub aromatic_rings: bool,
    pub chirality: bool,
    pub extra_rings: usize,
}

impl GenOptions {
    pub fn rich() -> GenOptions {
        GenOptions {
            maps: true,
            charges: true,
            wildcards: true,
            aromatic_rings: true,
            chirality: true,
            extra_rings: 2,
        }
    }

    pub fn plain() -> GenOptions {
        GenOptions {
            maps: false,
            charges: false,
            wildcards: false,
            aromatic_rings: true,
            chirality: false,
            extra_rings: 1,
        }
    }
}

fn pick_element<R: Rng>(rng: &mut R) -> Element {
    let roll = rng.gen_range(0..100);
    match roll {
        0..=54 => Element::C,
        55..=69 => Element::N,
        70..=84 => Element::O,
        85..=89 => Element::S,
        90..=93 => Element::F,
        94..=97 => Element::CL,
        _ => Element::BR,
    }
}

fn pick_bond<R: Rng>(rng: &mut R) -> BondKind {
    match rng.gen_range(0..100) {
        0..=79 => BondKind::Single,
        80..=94 => BondKind::Double,
        _ => BondKind::Triple,
    }
}

/// Fills hydrogen counts from default valences so that most atoms can be
/// written without brackets.
pub fn with_default_h(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Molecule {
    let draft = Molecule::new(atoms, bonds, "").expect("generated graph is simple");
    let mut atoms = draft.atoms().to_vec();
    for (i, a) in atoms.iter_mut().enumerate() {
        a.implicit_h = match a.kind {
            AtomKind::Element(e) if a.charge == 0 => {
                default_implicit_h(e, a.aromatic, draft.half_bond_order_sum(i))
            }
            _ => 0,
        };
    }
    let m = Molecule::new(atoms, draft.bonds().to_vec(), "").unwrap();
    let text = write_smiles(&m, true);
    m.with_source_text(text)
}

/// Connected random molecule with `n` heavy atoms (at least 2).
pub fn random_molecule<R: Rng>(rng: &mut R, n: usize, opts: GenOptions) -> Molecule {
    let n = n.max(2);
    let mut atoms: Vec<Atom> = Vec::with_capacity(n);
    let mut bonds: Vec<Bond> = Vec::new();
    let mut bonded: BTreeSet<(usize, usize)> = BTreeSet::new();
    fn add_bond(
        bonds: &mut Vec<Bond>,
        bonded: &mut BTreeSet<(usize, usize)>,
        a: usize,
        b: usize,
        kind: BondKind,
    ) {
        bonded.insert((a.min(b), a.max(b)));
        bonds.push(Bond {
            begin: a,
            end: b,
            kind,
            stereo: None,
        });
    }

    if opts.aromatic_rings && n >= 6 && rng.gen_bool(0.4) {
        for i in 0..6 {
            let mut a = Atom::new(if i == 0 && rng.gen_bool(0.3) {
                Element::N
            } else {
                Element::C
            });
            a.aromatic = true;
            atoms.push(a);
            if i > 0 {
                add_bond(&mut bonds, &mut bonded, i - 1, i, BondKind::Aromatic);
            }
        }
        add_bond(&mut bonds, &mut bonded, 5, 0, BondKind::Aromatic);
    }
    while atoms.len() < n {
        let i = atoms.len();
        let mut a = if opts.wildcards && rng.gen_bool(0.05) {
            Atom {
                kind: AtomKind::Wildcard,
                ..Atom::new(Element::C)
            }
        } else {
            Atom::new(pick_element(rng))
        };
        if opts.charges && a.element().is_some() && rng.gen_bool(0.06) {
            a.charge = if rng.gen_bool(0.5) { 1 } else { -1 };
        }
        if opts.chirality && a.element() == Some(Element::C) && rng.gen_bool(0.05) {
            a.chirality = Some(if rng.gen_bool(0.5) {
                Chirality::Clockwise
            } else {
                Chirality::CounterClockwise
            });
        }
        atoms.push(a);
        if i > 0 {
            let j = rng.gen_range(0..i);
            let kind = if atoms[j].aromatic {
                BondKind::Single
            } else {
                pick_bond(rng)
            };
            add_bond(&mut bonds, &mut bonded, j, i, kind);
        }
    }
    for _ in 0..opts.extra_rings {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !bonded.contains(&(a.min(b), a.max(b))) {
            add_bond(&mut bonds, &mut bonded, a, b, BondKind::Single);
        }
    }
    if opts.maps {
        let mut maps: Vec<u32> = (1..=n as u32).collect();
        maps.shuffle(rng);
        for (a, m) in atoms.iter_mut().zip(maps) {
            if a.element().is_some() {
                a.atom_map = Some(m);
            }
        }
    }
    with_default_h(atoms, bonds)
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn atoms_equal(a: &Atom, b: &Atom) -> bool {
    a == b
}

/// Exact attributed-graph isomorphism by plain backtracking.
pub fn isomorphic(g: &Molecule, h: &Molecule) -> bool {
    if g.len() != h.len() || g.bonds().len() != h.bonds().len() {
        return false;
    }
    let n = g.len();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(g: &Molecule, h: &Molecule, i: usize, map: &mut [usize], used: &mut [bool]) -> bool {
        if i == g.len() {
            return true;
        }
        for t in 0..h.len() {
            if used[t] || g.degree(i) != h.degree(t) || !atoms_equal(g.atom(i), h.atom(t)) {
                continue;
            }
            let consistent = (0..i).all(|j| {
                let gb = g.bond_between(i, j);
                let hb = h.bond_between(t, map[j]);
                match (gb, hb) {
                    (None, None) => true,
                    (Some(x), Some(y)) => x.kind == y.kind && x.stereo_from(i) == y.stereo_from(t),
                    _ => false,
                }
            });
            if consistent {
                map[i] = t;
                used[t] = true;
                if extend(g, h, i + 1, map, used) {
                    return true;
                }
                used[t] = false;
            }
        }
        false
    }
    extend(g, h, 0, &mut map, &mut used)
}

/// Pattern-atom semantics, restated: wildcard matches all; an element list
/// matches a listed (element, aromatic) pair; a plain atom needs the same
/// element and aromaticity, and the same charge if it carries one.
pub fn reference_atom_match(p: &Atom, t: &Atom) -> bool {
    match (&p.kind, &t.kind) {
        (AtomKind::Wildcard, _) => true,
        (AtomKind::ElementList(list), AtomKind::Element(e)) => list
            .iter()
            .any(|x| x.element == *e && x.aromatic == t.aromatic),
        (AtomKind::ElementList(a), AtomKind::ElementList(b)) => a == b,
        (AtomKind::Element(pe), AtomKind::Element(te)) => {
            pe == te && p.aromatic == t.aromatic && (p.charge == 0 || p.charge == t.charge)
        }
        _ => false,
    }
}

/// Every injective map pattern -> target, checked one by one.
pub fn exhaustive_embeds(p: &Molecule, t: &Molecule) -> bool {
    fn go(p: &Molecule, t: &Molecule, assign: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let i = assign.len();
        if i == p.len() {
            return p.bonds().iter().all(|b| {
                t.bond_between(assign[b.begin], assign[b.end])
                    .is_some_and(|tb| tb.kind == b.kind)
            }) && (0..p.len()).all(|k| reference_atom_match(p.atom(k), t.atom(assign[k])));
        }
        for x in 0..t.len() {
            if !used[x] {
                used[x] = true;
                assign.push(x);
                let hit = go(p, t, assign, used);
                assign.pop();
                used[x] = false;
                if hit {
                    return true;
                }
            }
        }
        false
    }
    if p.len() > t.len() {
        return false;
    }
    go(p, t, &mut Vec::new(), &mut vec![false; t.len()])
}

/// Small pattern/target graph over a narrow alphabet so that matches are common.
pub fn small_graph<R: Rng>(rng: &mut R, n: usize, pattern: bool) -> Molecule {
    let mut atoms = Vec::with_capacity(n);
    let mut bonds: Vec<Bond> = Vec::new();
    for i in 0..n {
        let roll = rng.gen_range(0..100);
        let mut a = match roll {
            0..=59 => Atom::new(Element::C),
            60..=79 => Atom::new(Element::N),
            _ => Atom::new(Element::O),
        };
        if pattern && rng.gen_bool(0.12) {
            a.kind = AtomKind::Wildcard;
        } else if pattern && rng.gen_bool(0.08) {
            a.kind = AtomKind::ElementList(vec![
                ListEntry {
                    element: Element::N,
                    aromatic: false,
                },
                ListEntry {
                    element: Element::O,
                    aromatic: false,
                },
            ]);
        } else if rng.gen_bool(0.08) {
            a.charge = 1;
        }
        atoms.push(a);
        if i > 0 && rng.gen_bool(0.9) {
            let j = rng.gen_range(0..i);
            let kind = if rng.gen_bool(0.8) {
                BondKind::Single
            } else {
                BondKind::Double
            };
            bonds.push(Bond {
                begin: j,
                end: i,
                kind,
                stereo: None,
            });
        }
    }
    if n >= 3 && rng.gen_bool(0.3) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b
            && !bonds
                .iter()
                .any(|x| (x.begin, x.end) == (a, b) || (x.begin, x.end) == (b, a))
        {
            bonds.push(Bond {
                begin: a,
                end: b,
                kind: BondKind::Single,
                stereo: None,
            });
        }
    }
    Molecule::new(atoms, bonds, "").unwrap()
}

/// Knows the edits that produced it, for reporting.
#[derive(Debug, Clone)]
pub struct SyntheticReaction {
    pub smiles: String,
    pub edits: Vec<&'static str>,
}

/// A product plus reactants derived from it by undoing random edits: bonds the
/// reaction formed are removed, bonds it broke are added, orders it changed
/// are altered, and leaving groups are attached.
pub fn synthetic_reaction<R: Rng>(rng: &mut R) -> SyntheticReaction {
    let n = rng.gen_range(4..14);
    let opts = GenOptions {
        maps: true,
        charges: false,
        wildcards: false,
        aromatic_rings: true,
        chirality: false,
        extra_rings: 1,
    };
    let product = random_molecule(rng, n, opts);
    let mut atoms: Vec<Atom> = product.atoms().to_vec();
    let mut bonds: Vec<Bond> = product.bonds().to_vec();
    let mut edits = Vec::new();
    let n_edits = if rng.gen_bool(0.1) {
        0
    } else {
        rng.gen_range(1..=3)
    };
    for _ in 0..n_edits {
        match rng.gen_range(0..4) {
            0 if !bonds.is_empty() => {
                let i = rng.gen_range(0..bonds.len());
                bonds.remove(i);
                edits.push("form");
            }
            1 => {
                let a = rng.gen_range(0..atoms.len());
                let b = rng.gen_range(0..atoms.len());
                let exists = bonds
                    .iter()
                    .any(|x| (x.begin.min(x.end), x.begin.max(x.end)) == (a.min(b), a.max(b)));
                if a != b && !exists {
                    bonds.push(Bond {
                        begin: a,
                        end: b,
                        kind: BondKind::Single,
                        stereo: None,
                    });
                    edits.push("break");
                }
            }
            2 if !bonds.is_empty() => {
                let i = rng.gen_range(0..bonds.len());
                let b = &mut bonds[i];
                b.kind = match b.kind {
                    BondKind::Single => BondKind::Double,
                    BondKind::Double => BondKind::Single,
                    BondKind::Triple => BondKind::Double,
                    BondKind::Aromatic => BondKind::Single,
                };
                edits.push("order");
            }
            _ => {
                let anchor = rng.gen_range(0..atoms.len());
                let size = rng.gen_range(1..=3);
                let first = atoms.len();
                for k in 0..size {
                    let mut a = Atom::new(if k == 0 { Element::O } else { Element::C });
                    if rng.gen_bool(0.5) {
                        a.atom_map = Some(100 + first as u32 + k as u32);
                    }
                    atoms.push(a);
                    let prev = if k == 0 { anchor } else { first + k - 1 };
                    bonds.push(Bond {
                        begin: prev,
                        end: first + k,
                        kind: BondKind::Single,
                        stereo: None,
                    });
                }
                edits.push("leaving_group");
            }
        }
    }
    let reactants = with_default_h(atoms, bonds);
    let sides: Vec<String> = reactants
        .fragments()
        .iter()
        .map(|f| write_smiles(f, true))
        .collect();
    SyntheticReaction {
        smiles: format!("{}>>{}", sides.join("."), write_smiles(&product, true)),
        edits,
    }
}

type Pair = (u32, u32);

fn pair(a: u32, b: u32) -> Pair {
    (a.min(b), a.max(b))
}

/// Reference label: enumerate every atom pair on both sides and diff.
/// Returns (formed, broken, changed) as sets of product maps.
pub fn brute_force_label(
    reactants: &[Molecule],
    product: &Molecule,
) -> (AtomMapSet, AtomMapSet, AtomMapSet) {
    let product_maps: BTreeSet<u32> = product.atoms().iter().filter_map(|a| a.atom_map).collect();
    let mut p_bonds: BTreeMap<Pair, BondKind> = BTreeMap::new();
    for i in 0..product.len() {
        for j in i + 1..product.len() {
            if let (Some(b), Some(mi), Some(mj)) = (
                product.bond_between(i, j),
                product.atom(i).atom_map,
                product.atom(j).atom_map,
            ) {
                p_bonds.insert(pair(mi, mj), b.kind);
            }
        }
    }
    let mut r_bonds: BTreeMap<Pair, BondKind> = BTreeMap::new();
    let mut formed = AtomMapSet::new();
    let mut broken = AtomMapSet::new();
    let mut changed = AtomMapSet::new();
    for mol in reactants {
        for i in 0..mol.len() {
            for j in i + 1..mol.len() {
                let Some(b) = mol.bond_between(i, j) else {
                    continue;
                };
                let mi = mol.atom(i).atom_map.filter(|m| product_maps.contains(m));
                let mj = mol.atom(j).atom_map.filter(|m| product_maps.contains(m));
                match (mi, mj) {
                    (Some(x), Some(y)) => {
                        r_bonds.insert(pair(x, y), b.kind);
                        if !p_bonds.contains_key(&pair(x, y)) {
                            broken.insert(x);
                            broken.insert(y);
                        }
                    }
                    (Some(x), None) | (None, Some(x)) => {
                        broken.insert(x);
                    }
                    (None, None) => {}
                }
            }
        }
    }
    for (&(x, y), kind) in &p_bonds {
        match r_bonds.get(&(x, y)) {
            None => {
                formed.insert(x);
                formed.insert(y);
            }
            Some(k) if k != kind => {
                changed.insert(x);
                changed.insert(y);
            }
            _ => {}
        }
    }
    (formed, broken, changed)
}

pub fn jaccard_reference(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> f64 {
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
