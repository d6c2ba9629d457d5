//! SMILES parsing, molecular graphs, canonical ordering and substructure search.

mod canon;
mod element;
mod molecule;
mod parser;
mod substructure;
mod writer;

pub use canon::{
    annotate_sequential_maps, canonical_ranks, canonical_smiles, canonicalize,
    normalize_benzene_rings,
};
pub use element::Element;
pub use molecule::{
    default_implicit_h, resolve_map_set, Atom, AtomKind, AtomMapSet, Bond, BondKind, BondStereo,
    Chirality, ListEntry, MapResolution, Molecule, ValidationError,
};
pub use parser::parse_smiles;
pub use substructure::{atom_matches, find_embedding, substructure_match};
pub use writer::{output_order, write_smiles};

/// SMILES syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("SMILES error at position {position}: {reason}")]
pub struct SmilesError {
    pub position: usize,
    pub reason: String,
}

impl SmilesError {
    pub fn new(position: usize, reason: impl Into<String>) -> Self {
        SmilesError {
            position,
            reason: reason.into(),
        }
    }
}
