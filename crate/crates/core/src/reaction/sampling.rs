use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::{ReactionRecord, Split};
use crate::error::DataError;

/// Upper bound on few-shot examples per prompt.
pub const MAX_EXAMPLES: usize = 5;

/// Lowercase, trimmed, internal whitespace collapsed.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyEntry {
    pub id: String,
    pub class: String,
}

/// Named reactions with their classes. Serializes as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    entries: Vec<OntologyEntry>,
    pub source_split: Option<String>,
    lookup: HashMap<String, usize>,
}

impl Ontology {
    pub fn new(entries: Vec<OntologyEntry>) -> Result<Ontology, String> {
        let mut lookup = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if lookup.insert(normalize_name(&e.id), i).is_some() {
                return Err(format!("duplicate ontology id '{}'", e.id));
            }
        }
        Ok(Ontology {
            entries,
            source_split: None,
            lookup,
        })
    }

    pub fn entries(&self) -> &[OntologyEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Membership by normalized name.
    pub fn contains(&self, name: &str) -> bool {
        self.lookup.contains_key(&normalize_name(name))
    }

    pub fn class_of(&self, name: &str) -> Option<&str> {
        self.lookup
            .get(&normalize_name(name))
            .map(|&i| self.entries[i].class.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.entries).expect("ontology entries serialize")
    }
}

impl Serialize for Ontology {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ontology {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<OntologyEntry>::deserialize(d)?;
        Ontology::new(entries).map_err(serde::de::Error::custom)
    }
}

/// One entry per distinct non-empty reaction name in `split`, carrying the
/// most frequent class (lexicographically smallest on ties), sorted by id.
pub fn build_ontology(records: &[ReactionRecord], split: Split) -> Result<Ontology, DataError> {
    let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.split == split) {
        let name = r.reaction_name.trim();
        if name.is_empty() {
            continue;
        }
        *counts
            .entry(name)
            .or_default()
            .entry(r.reaction_class.trim())
            .or_default() += 1;
    }
    if counts.is_empty() {
        return Err(DataError::EmptySplit(split.to_string()));
    }
    let entries = counts
        .into_iter()
        .map(|(name, classes)| {
            // max count, then smallest class name
            let (class, _) = classes
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
                .expect("at least one class");
            OntologyEntry {
                id: name.to_string(),
                class: class.to_string(),
            }
        })
        .collect();
    let mut ontology = Ontology::new(entries).map_err(|message| DataError::Format {
        path: String::from("<ontology>"),
        message,
    })?;
    ontology.source_split = Some(split.to_string());
    Ok(ontology)
}

fn pick(rng: &mut ChaCha8Rng, pool: &[usize], n: usize) -> Vec<usize> {
    index::sample(rng, pool.len(), n.min(pool.len()))
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Caps every named reaction at `cap` records and keeps the unclassified share
/// of the input. Output keeps input order.
///
/// With U unclassified out of N and S named records kept, the number of
/// unclassified records kept is round(U * S / (N - U)), at most U.
pub fn subsample_eval_set(
    records: &[ReactionRecord],
    cap: usize,
    unclassified_label: &str,
    seed: u64,
) -> Vec<ReactionRecord> {
    let unclassified_key = normalize_name(unclassified_label);
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut unclassified = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if normalize_name(&r.reaction_name) == unclassified_key || r.reaction_name.trim().is_empty()
        {
            unclassified.push(i);
        } else {
            groups.entry(r.reaction_name.as_str()).or_default().push(i);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::new();
    for pool in groups.values() {
        chosen.extend(pick(&mut rng, pool, cap));
    }
    let named = chosen.len();
    let n = records.len();
    let u = unclassified.len();
    let keep_unclassified = if u == n {
        u
    } else {
        ((u as f64 * named as f64 / (n - u) as f64).round() as usize).min(u)
    };
    chosen.extend(pick(&mut rng, &unclassified, keep_unclassified));
    chosen.sort_unstable();
    chosen.into_iter().map(|i| records[i].clone()).collect()
}

/// Few-shot retrosynthesis examples for one reaction name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleLibrary {
    pub reaction_name: String,
    pub examples: Vec<String>,
    pub seed: u64,
}

impl ExampleLibrary {
    pub fn empty(reaction_name: &str, seed: u64) -> ExampleLibrary {
        ExampleLibrary {
            reaction_name: reaction_name.to_string(),
            examples: Vec::new(),
            seed,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

fn derived_seed(seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Draws up to `min(k, MAX_EXAMPLES)` train records named `reaction_name`,
/// never `exclude_id`. The draw depends only on the seed and the query id.
pub fn sample_examples(
    records: &[ReactionRecord],
    reaction_name: &str,
    exclude_id: &str,
    k: usize,
    seed: u64,
) -> ExampleLibrary {
    let key = normalize_name(reaction_name);
    let pool: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            r.split == Split::Train
                && r.record_id != exclude_id
                && normalize_name(&r.reaction_name) == key
        })
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, exclude_id));
    let mut chosen = pick(&mut rng, &pool, k.min(MAX_EXAMPLES));
    chosen.sort_unstable();
    ExampleLibrary {
        reaction_name: reaction_name.to_string(),
        examples: chosen
            .into_iter()
            .map(|i| records[i].retro_smiles())
            .collect(),
        seed,
    }
}
