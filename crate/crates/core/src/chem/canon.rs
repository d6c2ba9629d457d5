//! Canonical atom ordering by iterative invariant refinement.
//!
//! Atoms start from a local invariant (degree, element, aromaticity, charge,
//! isotope, hydrogen count, then atom map and chirality so that labelled atoms
//! are never interchangeable), are refined by the sorted multiset of neighbor
//! classes until the partition is stable, and residual ties are broken by
//! promoting the lowest-index atom of the lowest tied class and refining again.

use std::collections::BTreeSet;

use super::element::Element;
use super::molecule::{AtomKind, Bond, BondKind, BondStereo, Chirality, Molecule};
use super::writer::{output_order, write_smiles};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct LocalInvariant {
    degree: usize,
    kind: AtomKind,
    aromatic: bool,
    charge: i8,
    isotope: Option<u16>,
    implicit_h: u8,
    atom_map: Option<u32>,
    chirality: Option<Chirality>,
}

fn bond_code(b: &Bond, from: usize) -> (BondKind, Option<BondStereo>) {
    (b.kind, b.stereo_from(from))
}

/// Replaces dense ranks by the rank of each atom's key.
fn rerank<K: Ord + Clone>(keys: &[K]) -> (Vec<usize>, usize) {
    let distinct: Vec<K> = keys
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let ranks = keys
        .iter()
        .map(|k| distinct.binary_search(k).expect("key present"))
        .collect();
    (ranks, distinct.len())
}

/// Neighbour rank with the bond between.
type NeighborKey = (usize, BondKind, Option<BondStereo>);

fn refine(m: &Molecule, mut ranks: Vec<usize>, mut classes: usize) -> (Vec<usize>, usize) {
    loop {
        let keys: Vec<(usize, Vec<NeighborKey>)> = (0..m.len())
            .map(|a| {
                let mut nbrs: Vec<_> = m
                    .neighbors(a)
                    .iter()
                    .map(|&(n, bi)| {
                        let (k, s) = bond_code(&m.bonds()[bi], a);
                        (ranks[n], k, s)
                    })
                    .collect();
                nbrs.sort_unstable();
                (ranks[a], nbrs)
            })
            .collect();
        let (next, count) = rerank(&keys);
        ranks = next;
        if count == classes {
            return (ranks, count);
        }
        classes = count;
    }
}

/// Canonical rank of every atom (0-based, all distinct).
pub fn canonical_ranks(m: &Molecule) -> Vec<usize> {
    let n = m.len();
    let initial: Vec<LocalInvariant> = (0..n)
        .map(|i| {
            let a = m.atom(i);
            LocalInvariant {
                degree: m.degree(i),
                kind: a.kind.clone(),
                aromatic: a.aromatic,
                charge: a.charge,
                isotope: a.isotope,
                implicit_h: a.implicit_h,
                atom_map: a.atom_map,
                chirality: a.chirality,
            }
        })
        .collect();
    let (ranks, classes) = rerank(&initial);
    let (mut ranks, mut classes) = refine(m, ranks, classes);
    while classes < n {
        let mut counts = vec![0usize; classes];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = counts
            .iter()
            .position(|&c| c > 1)
            .expect("a tied class exists");
        let chosen = (0..n)
            .find(|&a| ranks[a] == tied)
            .expect("class is non-empty");
        let keys: Vec<(usize, bool)> = (0..n)
            .map(|a| (ranks[a], ranks[a] == tied && a != chosen))
            .collect();
        let (r, c) = rerank(&keys);
        (ranks, classes) = refine(m, r, c);
    }
    ranks
}

/// Rewrites every 6-ring of C/N atoms whose ring bonds strictly alternate
/// single/double into aromatic form. Hydrogen counts are left untouched.
pub fn normalize_benzene_rings(m: &Molecule) -> Molecule {
    let rings = alternating_six_rings(m);
    if rings.is_empty() {
        return m.clone();
    }
    let mut out = m.clone();
    for ring in &rings {
        for &bi in &ring.bonds {
            let b = &mut out.bonds_mut()[bi];
            b.kind = BondKind::Aromatic;
            b.stereo = None;
        }
        for &a in &ring.atoms {
            out.atoms_mut()[a].aromatic = true;
        }
    }
    Molecule::new(out.atoms().to_vec(), out.bonds().to_vec(), m.source_text())
        .expect("same topology")
}

struct Ring {
    atoms: Vec<usize>,
    bonds: Vec<usize>,
}

fn ring_atom_ok(m: &Molecule, a: usize) -> bool {
    matches!(m.atom(a).kind, AtomKind::Element(e) if e == Element::C || e == Element::N)
}

fn alternating_six_rings(m: &Molecule) -> Vec<Ring> {
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut rings = Vec::new();
    for start in 0..m.len() {
        if !ring_atom_ok(m, start) {
            continue;
        }
        let mut path = vec![start];
        let mut bonds = Vec::new();
        extend_cycle(
            m,
            start,
            &mut path,
            &mut bonds,
            &mut |atoms: &[usize], bonds: &[usize]| {
                let mut key = bonds.to_vec();
                key.sort_unstable();
                if found.insert(key) {
                    rings.push(Ring {
                        atoms: atoms.to_vec(),
                        bonds: bonds.to_vec(),
                    });
                }
            },
        );
    }
    rings
}

fn extend_cycle(
    m: &Molecule,
    start: usize,
    path: &mut Vec<usize>,
    bonds: &mut Vec<usize>,
    found: &mut dyn FnMut(&[usize], &[usize]),
) {
    let last = *path.last().unwrap();
    for &(n, bi) in m.neighbors(last) {
        let kind = m.bonds()[bi].kind;
        if !matches!(kind, BondKind::Single | BondKind::Double) {
            continue;
        }
        if let Some(&prev) = bonds.last() {
            if m.bonds()[prev].kind == kind {
                continue;
            }
        }
        if path.len() == 6 {
            if n == start && m.bonds()[bonds[0]].kind != kind {
                bonds.push(bi);
                found(path, bonds);
                bonds.pop();
            }
            continue;
        }
        // only walk atoms above the start so each ring is rooted at its lowest atom
        if n <= start || path.contains(&n) || !ring_atom_ok(m, n) {
            continue;
        }
        path.push(n);
        bonds.push(bi);
        extend_cycle(m, start, path, bonds, found);
        path.pop();
        bonds.pop();
    }
}

/// Canonical form: benzene normalization, canonical ranking, then atoms laid out
/// in the order the canonical SMILES writes them. Bonds are stored with
/// `begin < end` and sorted.
pub fn canonicalize(m: &Molecule) -> Molecule {
    let normalized = normalize_benzene_rings(m);
    let ranks = canonical_ranks(&normalized);
    let mut by_rank = vec![0usize; ranks.len()];
    for (atom, &r) in ranks.iter().enumerate() {
        by_rank[r] = atom;
    }
    let ranked = normalized.permuted(&by_rank);
    let order = output_order(&ranked);
    let laid_out = ranked.permuted(&order);

    let mut bonds: Vec<Bond> = laid_out
        .bonds()
        .iter()
        .map(|b| {
            if b.begin < b.end {
                *b
            } else {
                Bond {
                    begin: b.end,
                    end: b.begin,
                    kind: b.kind,
                    stereo: b.stereo.map(BondStereo::flipped),
                }
            }
        })
        .collect();
    bonds.sort_by_key(|b| (b.begin, b.end));
    let out =
        Molecule::new(laid_out.atoms().to_vec(), bonds, String::new()).expect("same topology");
    let text = write_smiles(&out, true);
    out.with_source_text(text)
}

/// Canonical SMILES text, optionally without atom maps.
pub fn canonical_smiles(m: &Molecule, include_maps: bool) -> String {
    if include_maps {
        canonicalize(m).source_text().to_string()
    } else {
        canonicalize(&m.without_maps()).source_text().to_string()
    }
}

/// Canonicalizes and numbers heavy atoms 1, 2, 3, ... in written order.
/// Existing maps are discarded first.
pub fn annotate_sequential_maps(m: &Molecule) -> Molecule {
    let canon = canonicalize(&m.without_maps());
    let mut atoms = canon.atoms().to_vec();
    let mut next = 1;
    for a in atoms.iter_mut() {
        if a.is_heavy() {
            a.atom_map = Some(next);
            next += 1;
        }
    }
    let out = Molecule::new(atoms, canon.bonds().to_vec(), String::new()).expect("same topology");
    let text = write_smiles(&out, true);
    out.with_source_text(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap(), true)
    }

    #[test]
    fn kekule_and_aromatic_benzene_agree() {
        assert_eq!(canon("C1=CC=CC=C1"), canon("c1ccccc1"));
        assert_eq!(canon("C1=CC=CC=C1"), "c1ccccc1");
        assert_eq!(canon("Cc1ccccc1"), canon("CC1=CC=CC=C1"));
        assert_eq!(canon("C1=CC=NC=C1"), canon("c1ccncc1"));
    }

    #[test]
    fn permuted_inputs_agree() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("OCC"), "CCO");
        assert_eq!(canon("C(C)(C)O"), canon("CC(O)C"));
    }

    #[test]
    fn non_alternating_rings_untouched() {
        assert_eq!(canon("C1=CCC=CC1"), canon("C1C=CCC=C1"));
        assert!(!canon("C1=CCC=CC1").contains('c'));
    }

    #[test]
    fn sequential_maps() {
        let m = annotate_sequential_maps(&parse_smiles("OCC").unwrap());
        assert_eq!(m.source_text(), "[CH3:1][CH2:2][OH:3]");
        let again = annotate_sequential_maps(&m);
        assert_eq!(again, m);
        assert_eq!(again.source_text(), m.source_text());
        assert!(m.duplicate_maps().is_empty());
    }

    #[test]
    fn canonical_is_idempotent() {
        for s in [
            "CC(=O)Nc1ccc(O)cc1",
            "C1CC2CCC1CC2",
            "[CH3:5][NH:2]C(=O)c1ccccc1Cl",
            "F/C=C/F",
        ] {
            let once = canonicalize(&parse_smiles(s).unwrap());
            let twice = canonicalize(&once);
            assert_eq!(once.source_text(), twice.source_text(), "{s}");
        }
    }
}
