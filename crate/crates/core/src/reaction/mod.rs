//! Reaction datasets: ingestion, structural labels, ontologies and sampling.

mod dataset;
mod label;
mod sampling;

pub use dataset::{
    ingest_dataset, read_rows, record_from_row, DatasetFormat, DatasetRow, Ingested, Reject,
};
pub use label::{extract_structural_label, LabelKind, StructuralLabel};
pub use sampling::{
    build_ontology, normalize_name, sample_examples, subsample_eval_set, ExampleLibrary, Ontology,
    OntologyEntry, MAX_EXAMPLES,
};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chem::{parse_smiles, Molecule, SmilesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// One atom-mapped reaction with its name and class labels.
#[derive(Debug, Clone)]
pub struct ReactionRecord {
    pub record_id: String,
    pub reactants: Vec<Molecule>,
    pub reagents: Vec<Molecule>,
    pub product: Molecule,
    pub reaction_name: String,
    pub reaction_class: String,
    pub split: Split,
    pub reaction_smiles: String,
}

impl ReactionRecord {
    /// `product>>reactants` with atom maps as written in the source.
    pub fn retro_smiles(&self) -> String {
        let reactants: Vec<&str> = self.reactants.iter().map(|m| m.source_text()).collect();
        format!("{}>>{}", self.product.source_text(), reactants.join("."))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReactionParseError {
    #[error("reaction SMILES must have the form reactants>reagents>product")]
    Shape,
    #[error("reaction has no reactants")]
    NoReactants,
    #[error("{side} '{text}': {source}")]
    Smiles {
        side: &'static str,
        text: String,
        #[source]
        source: SmilesError,
    },
    #[error("product atom map {0} appears on more than one reactant atom")]
    AmbiguousMap(u32),
    #[error("duplicate atom maps in product: {0:?}")]
    DuplicateProductMaps(Vec<u32>),
}

/// Parsed pieces of a reaction SMILES.
#[derive(Debug, Clone)]
pub struct ParsedReaction {
    pub reactants: Vec<Molecule>,
    pub reagents: Vec<Molecule>,
    pub product: Molecule,
}

fn parse_side(side: &'static str, text: &str) -> Result<Vec<Molecule>, ReactionParseError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split('.')
        .map(|part| {
            parse_smiles(part).map_err(|source| ReactionParseError::Smiles {
                side,
                text: part.to_string(),
                source,
            })
        })
        .collect()
}

/// Parses `reactants>reagents>product` (or `reactants>>product`) and checks that
/// every product atom map is carried by at most one reactant atom.
pub fn parse_reaction_smiles(text: &str) -> Result<ParsedReaction, ReactionParseError> {
    let parts: Vec<&str> = text.trim().split('>').collect();
    let [reactants, reagents, product] = parts.as_slice() else {
        return Err(ReactionParseError::Shape);
    };
    let reactants = parse_side("reactant", reactants)?;
    if reactants.is_empty() {
        return Err(ReactionParseError::NoReactants);
    }
    let reagents = parse_side("reagent", reagents)?;
    let product = parse_smiles(product).map_err(|source| ReactionParseError::Smiles {
        side: "product",
        text: product.to_string(),
        source,
    })?;
    let dups = product.duplicate_maps();
    if !dups.is_empty() {
        return Err(ReactionParseError::DuplicateProductMaps(dups));
    }
    let product_maps = product.atom_maps();
    let mut seen: HashMap<u32, usize> = HashMap::new();
    for m in reactants
        .iter()
        .flat_map(|r| r.atoms())
        .filter_map(|a| a.atom_map)
    {
        if product_maps.contains(m) {
            let n = seen.entry(m).or_default();
            *n += 1;
            if *n > 1 {
                return Err(ReactionParseError::AmbiguousMap(m));
            }
        }
    }
    Ok(ParsedReaction {
        reactants,
        reagents,
        product,
    })
}
