//! Typed candidates from raw model text.

mod envelope;

pub use envelope::extract_json_object;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chem::{parse_smiles, resolve_map_set, AtomMapSet, Molecule};
use crate::reaction::{normalize_name, Ontology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    NoJson,
    SchemaViolation,
    AllItemsInvalid,
}

impl FailureClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureClass::NoJson => "no_json",
            FailureClass::SchemaViolation => "schema_violation",
            FailureClass::AllItemsInvalid => "all_items_invalid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    MalformedEntry,
    MalformedDisconnection,
    UnresolvableMap,
    EmptyReactions,
    MissingReactionName,
    ImportanceOutOfRange,
    PriorityOutOfRange,
    DuplicatePair,
    EmptyReactants,
    SyntacticallyInvalidSmiles,
    TemplateAtomsInNonTemplate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dropped {
    pub raw: String,
    pub reason: DropReason,
    pub detail: String,
}

impl Dropped {
    fn new(raw: &Value, reason: DropReason, detail: impl Into<String>) -> Dropped {
        Dropped {
            raw: raw.to_string(),
            reason,
            detail: detail.into(),
        }
    }
}

/// Parsed items plus everything that was thrown away. `failure_class` is set
/// exactly when `ok` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome<T> {
    pub ok: Vec<T>,
    pub dropped: Vec<Dropped>,
    pub failure_class: Option<FailureClass>,
}

impl<T> ParseOutcome<T> {
    fn failure(class: FailureClass) -> ParseOutcome<T> {
        ParseOutcome {
            ok: Vec::new(),
            dropped: Vec::new(),
            failure_class: Some(class),
        }
    }

    fn finish(ok: Vec<T>, dropped: Vec<Dropped>) -> ParseOutcome<T> {
        let failure_class = ok.is_empty().then_some(FailureClass::AllItemsInvalid);
        ParseOutcome {
            ok,
            dropped,
            failure_class,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failure_class.is_some()
    }
}

/// One flattened (disconnection, reaction) pair from the position model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisconnectionCandidate {
    pub s: AtomMapSet,
    pub disconnection: String,
    pub reaction_name: String,
    pub reaction_class: String,
    /// Recomputed against the ontology.
    pub in_ontology: bool,
    /// What the model claimed.
    pub model_in_ontology: Option<bool>,
    pub importance: u8,
    pub priority: u32,
    pub rationale: String,
}

/// One reactant permutation from the transition model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionPrediction {
    pub reactants: Vec<Molecule>,
    pub is_valid: bool,
    pub is_template: bool,
    pub reasoning: String,
    pub reaction_name: String,
}

/// `"C:12 N:14"` to `{12, 14}`. Every token needs a symbol and a positive map.
pub fn parse_disconnection(text: &str) -> Result<AtomMapSet, String> {
    let mut set = AtomMapSet::new();
    for token in text.split_whitespace() {
        let (symbol, map) = token
            .rsplit_once(':')
            .ok_or_else(|| format!("token '{token}' has no ':'"))?;
        if symbol.is_empty()
            || !symbol
                .chars()
                .all(|c| c.is_ascii_alphabetic() || "[]*,".contains(c))
        {
            return Err(format!("token '{token}' has no element symbol"));
        }
        let map: u32 = map
            .parse()
            .map_err(|_| format!("token '{token}' has a bad atom map"))?;
        if map == 0 {
            return Err(format!("token '{token}' has atom map 0"));
        }
        set.insert(map);
    }
    if set.is_empty() {
        return Err("empty disconnection".into());
    }
    Ok(set)
}

/// Integers, integral floats and digit strings.
fn as_int(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_text(v: Option<&Value>) -> String {
    match v {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => String::new(),
        Some(other) => other.to_string(),
    }
}

fn first_key<'a>(obj: &'a serde_json::Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| obj.get(*k))
}

pub fn parse_position_output(
    raw: &str,
    product: &Molecule,
    ontology: &Ontology,
) -> ParseOutcome<DisconnectionCandidate> {
    let Some(root) = extract_json_object(raw) else {
        return ParseOutcome::failure(FailureClass::NoJson);
    };
    let Some(Value::Array(entries)) = root.get("disconnections") else {
        return ParseOutcome::failure(FailureClass::SchemaViolation);
    };
    let mut ok: Vec<DisconnectionCandidate> = Vec::new();
    let mut dropped = Vec::new();
    let mut seen: HashSet<(Vec<u32>, String)> = HashSet::new();
    for entry in entries {
        let Some(obj) = entry.as_object() else {
            dropped.push(Dropped::new(
                entry,
                DropReason::MalformedEntry,
                "entry is not an object",
            ));
            continue;
        };
        let Some(text) = obj.get("disconnection").and_then(Value::as_str) else {
            dropped.push(Dropped::new(
                entry,
                DropReason::MalformedEntry,
                "missing \"disconnection\" string",
            ));
            continue;
        };
        let s = match parse_disconnection(text) {
            Ok(s) => s,
            Err(e) => {
                dropped.push(Dropped::new(entry, DropReason::MalformedDisconnection, e));
                continue;
            }
        };
        let resolution = resolve_map_set(product, &s);
        if !resolution.is_complete() {
            let detail = format!("maps {:?} not in product", resolution.missing.to_vec());
            dropped.push(Dropped::new(entry, DropReason::UnresolvableMap, detail));
            continue;
        }
        let reactions = match first_key(obj, &["reactions", "Reaction", "Reactions", "reaction"]) {
            Some(Value::Array(list)) if !list.is_empty() => list,
            _ => {
                dropped.push(Dropped::new(
                    entry,
                    DropReason::EmptyReactions,
                    "no reactions listed",
                ));
                continue;
            }
        };
        for reaction in reactions {
            let Some(r) = reaction.as_object() else {
                dropped.push(Dropped::new(
                    reaction,
                    DropReason::MalformedEntry,
                    "reaction is not an object",
                ));
                continue;
            };
            let name = as_text(r.get("forwardReaction"));
            if name.trim().is_empty() {
                dropped.push(Dropped::new(
                    reaction,
                    DropReason::MissingReactionName,
                    "missing forwardReaction",
                ));
                continue;
            }
            let importance = match first_key(
                r,
                &["Retrosynthesis Importance", "importance", "Importance"],
            )
            .and_then(as_int)
            {
                Some(i @ 1..=4) => i as u8,
                other => {
                    let detail = format!("importance {other:?} not in 1..=4");
                    dropped.push(Dropped::new(
                        reaction,
                        DropReason::ImportanceOutOfRange,
                        detail,
                    ));
                    continue;
                }
            };
            let priority = match first_key(r, &["Priority", "priority"]).and_then(as_int) {
                Some(p) if p >= 1 && p <= u32::MAX as i64 => p as u32,
                other => {
                    let detail = format!("priority {other:?} is not a positive integer");
                    dropped.push(Dropped::new(
                        reaction,
                        DropReason::PriorityOutOfRange,
                        detail,
                    ));
                    continue;
                }
            };
            if !seen.insert((s.to_vec(), normalize_name(&name))) {
                dropped.push(Dropped::new(
                    reaction,
                    DropReason::DuplicatePair,
                    "same disconnection and reaction seen earlier",
                ));
                continue;
            }
            ok.push(DisconnectionCandidate {
                s: s.clone(),
                disconnection: text.to_string(),
                in_ontology: ontology.contains(&name),
                model_in_ontology: r.get("isInOntology").and_then(Value::as_bool),
                reaction_class: as_text(r.get("forwardReactionClass")),
                reaction_name: name,
                importance,
                priority,
                rationale: as_text(r.get("rationale")),
            });
        }
    }
    ParseOutcome::finish(ok, dropped)
}

/// `product` is accepted for symmetry with the position parser; reactant maps
/// are not checked against it.
pub fn parse_transition_output(
    raw: &str,
    _product: &Molecule,
) -> ParseOutcome<TransitionPrediction> {
    let Some(root) = extract_json_object(raw) else {
        return ParseOutcome::failure(FailureClass::NoJson);
    };
    let Some(Value::Array(groups)) = root.get("reaction_analysis") else {
        return ParseOutcome::failure(FailureClass::SchemaViolation);
    };
    let mut ok = Vec::new();
    let mut dropped = Vec::new();
    for group in groups {
        let Some(g) = group.as_object() else {
            dropped.push(Dropped::new(
                group,
                DropReason::MalformedEntry,
                "reaction group is not an object",
            ));
            continue;
        };
        let name = as_text(g.get("forward_reaction_name"));
        let Some(Value::Array(perms)) = g.get("reactant_permutations") else {
            dropped.push(Dropped::new(
                group,
                DropReason::MalformedEntry,
                "missing reactant_permutations list",
            ));
            continue;
        };
        'perm: for perm in perms {
            let Some(p) = perm.as_object() else {
                dropped.push(Dropped::new(
                    perm,
                    DropReason::MalformedEntry,
                    "permutation is not an object",
                ));
                continue;
            };
            let Some(is_valid) = p.get("is_valid").and_then(Value::as_bool) else {
                dropped.push(Dropped::new(
                    perm,
                    DropReason::MalformedEntry,
                    "missing boolean is_valid",
                ));
                continue;
            };
            let is_template = p
                .get("is_template")
                .and_then(Value::as_bool)
                .unwrap_or(false);
            let texts: Vec<&str> = match p.get("reactants") {
                Some(Value::Array(items)) => {
                    match items.iter().map(Value::as_str).collect::<Option<Vec<_>>>() {
                        Some(t) => t,
                        None => {
                            dropped.push(Dropped::new(
                                perm,
                                DropReason::MalformedEntry,
                                "reactants must be strings",
                            ));
                            continue;
                        }
                    }
                }
                Some(Value::String(s)) => vec![s.as_str()],
                _ => {
                    dropped.push(Dropped::new(
                        perm,
                        DropReason::MalformedEntry,
                        "missing reactants list",
                    ));
                    continue;
                }
            };
            if texts.iter().all(|t| t.trim().is_empty()) {
                dropped.push(Dropped::new(
                    perm,
                    DropReason::EmptyReactants,
                    "no reactant SMILES",
                ));
                continue;
            }
            let mut reactants = Vec::with_capacity(texts.len());
            for t in texts.iter().map(|t| t.trim()).filter(|t| !t.is_empty()) {
                match parse_smiles(t) {
                    Ok(m) if !is_template && !m.is_concrete() => {
                        let detail = format!("'{t}' has template atoms but is_template is false");
                        dropped.push(Dropped::new(
                            perm,
                            DropReason::TemplateAtomsInNonTemplate,
                            detail,
                        ));
                        continue 'perm;
                    }
                    Ok(m) => reactants.push(m),
                    Err(e) => {
                        dropped.push(Dropped::new(
                            perm,
                            DropReason::SyntacticallyInvalidSmiles,
                            format!("'{t}': {e}"),
                        ));
                        continue 'perm;
                    }
                }
            }
            ok.push(TransitionPrediction {
                reactants,
                is_valid,
                is_template,
                reasoning: as_text(p.get("reasoning")),
                reaction_name: name.clone(),
            });
        }
    }
    ParseOutcome::finish(ok, dropped)
}
