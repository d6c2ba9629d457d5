use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ReactionRecord;
use crate::chem::{AtomMapSet, BondKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    /// Bonds formed or broken.
    Connectivity,
    /// Only bond orders changed.
    BondOrder,
    /// No detectable change on heavy atoms.
    Empty,
}

/// Product-side reaction center, as atom-map values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralLabel {
    pub atoms: AtomMapSet,
    pub kind: LabelKind,
}

impl StructuralLabel {
    pub fn is_empty(&self) -> bool {
        self.kind == LabelKind::Empty
    }
}

/// Diffs reactant and product bonds through atom maps.
///
/// Formed: product bond between two mapped atoms with no bond between their
/// reactant counterparts. Broken: reactant bond touching a product-mapped atom
/// that is absent in the product; a partner that left the product contributes
/// nothing. Changed: same mapped pair bonded on both sides with a different kind.
/// Formed/broken atoms win; changed atoms are used only when there are none.
/// Reagents never take part.
pub fn extract_structural_label(r: &ReactionRecord) -> StructuralLabel {
    let product = &r.product;
    let product_index = product.map_index();

    // map -> (reactant molecule, atom) for maps that also occur in the product
    let mut reactant_index: HashMap<u32, (usize, usize)> = HashMap::new();
    for (mi, mol) in r.reactants.iter().enumerate() {
        for (ai, atom) in mol.atoms().iter().enumerate() {
            if let Some(m) = atom.atom_map {
                if product_index.contains_key(&m) {
                    reactant_index.entry(m).or_insert((mi, ai));
                }
            }
        }
    }

    let mut connectivity = AtomMapSet::new();
    let mut changed = AtomMapSet::new();

    for b in product.bonds() {
        let (Some(ma), Some(mb)) = (product.atom(b.begin).atom_map, product.atom(b.end).atom_map)
        else {
            continue;
        };
        let before: Option<BondKind> = match (reactant_index.get(&ma), reactant_index.get(&mb)) {
            (Some(&(mol_a, ia)), Some(&(mol_b, ib))) if mol_a == mol_b => {
                r.reactants[mol_a].bond_between(ia, ib).map(|rb| rb.kind)
            }
            _ => None,
        };
        match before {
            None => {
                connectivity.insert(ma);
                connectivity.insert(mb);
            }
            Some(kind) if kind != b.kind => {
                changed.insert(ma);
                changed.insert(mb);
            }
            Some(_) => {}
        }
    }

    for mol in &r.reactants {
        let in_product = |ai: usize| {
            mol.atom(ai)
                .atom_map
                .filter(|m| product_index.contains_key(m))
        };
        for b in mol.bonds() {
            match (in_product(b.begin), in_product(b.end)) {
                (Some(ma), Some(mb)) => {
                    if product
                        .bond_between(product_index[&ma], product_index[&mb])
                        .is_none()
                    {
                        connectivity.insert(ma);
                        connectivity.insert(mb);
                    }
                }
                (Some(m), None) | (None, Some(m)) => {
                    connectivity.insert(m);
                }
                (None, None) => {}
            }
        }
    }

    if !connectivity.is_empty() {
        StructuralLabel {
            atoms: connectivity,
            kind: LabelKind::Connectivity,
        }
    } else if !changed.is_empty() {
        StructuralLabel {
            atoms: changed,
            kind: LabelKind::BondOrder,
        }
    } else {
        StructuralLabel {
            atoms: AtomMapSet::new(),
            kind: LabelKind::Empty,
        }
    }
}
