//! Prompt templates and rendering.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chem::{canonical_smiles, resolve_map_set, AtomMapSet, Molecule};
use crate::reaction::{ExampleLibrary, Ontology};

const POSITION_BODY: &str = include_str!("templates/position.txt");
const TRANSITION_BODY: &str = include_str!("templates/transition.txt");
const TRANSITION_SHORT_BODY: &str = include_str!("templates/transition_short.txt");

pub const ONTOLOGY_SLOT: &str = "<reaction_ontology>";
pub const PRODUCT_SLOT: &str = "<canonicalized_product>";
pub const POSITION_SLOT: &str = "<REACTION_POSITION>";
pub const NAME_SLOT: &str = "<REACTION_NAME>";
pub const PRODUCT_SMILES_SLOT: &str = "<PRODUCT_SMILES>";
pub const EXAMPLES_SLOT: &str = "<TRAIN_REACTION_EXAMPLES>";

const POSITION_SLOTS: &[&str] = &[ONTOLOGY_SLOT, PRODUCT_SLOT];
const TRANSITION_SLOTS: &[&str] = &[POSITION_SLOT, NAME_SLOT, PRODUCT_SMILES_SLOT, EXAMPLES_SLOT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    Position,
    Transition,
    TransitionShort,
}

impl TemplateName {
    pub const ALL: [TemplateName; 3] = [
        TemplateName::Position,
        TemplateName::Transition,
        TemplateName::TransitionShort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Position => "position",
            TemplateName::Transition => "transition",
            TemplateName::TransitionShort => "transition_short",
        }
    }

    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateName::Position => POSITION_SLOTS,
            _ => TRANSITION_SLOTS,
        }
    }

    fn builtin_body(self) -> &'static str {
        match self {
            TemplateName::Position => POSITION_BODY,
            TemplateName::Transition => TRANSITION_BODY,
            TemplateName::TransitionShort => TRANSITION_SHORT_BODY,
        }
    }

    /// sha256 of the shipped body.
    pub fn pinned_digest(self) -> &'static str {
        match self {
            TemplateName::Position => {
                "5c893983d571e7129b30daa73788e60d32da8bb842b7912336597b9012bebfba"
            }
            TemplateName::Transition => {
                "cc99ea00a8cc1f7c0bda416d8ae8a5d5dfe08fe8e7344ed197cbc49126229bd8"
            }
            TemplateName::TransitionShort => {
                "4888cac87ca674c98bef6ae09963c16cbd7905b7ca330f7a1c109ae852f5aa51"
            }
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which transition template to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    #[default]
    Full,
    Short,
}

impl PromptVariant {
    pub fn template(self) -> TemplateName {
        match self {
            PromptVariant::Full => TemplateName::Transition,
            PromptVariant::Short => TemplateName::TransitionShort,
        }
    }
}

impl FromStr for PromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(PromptVariant::Full),
            "short" => Ok(PromptVariant::Short),
            other => Err(format!(
                "unknown prompt variant '{other}' (expected full or short)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("template {template}: placeholder {placeholder} not found in body")]
    MissingPlaceholder {
        template: TemplateName,
        placeholder: &'static str,
    },
    #[error("template {template}: cannot read override {path}: {message}")]
    Override {
        template: TemplateName,
        path: String,
        message: String,
    },
    #[error("product has atoms without an atom map")]
    UnmappedProduct,
    #[error("reaction position maps {0:?} do not resolve against the product")]
    UnresolvedMaps(Vec<u32>),
    #[error("reaction position is empty")]
    EmptyPosition,
    #[error("rendered prompt still contains {0}")]
    ResidualPlaceholder(&'static str),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: String,
    pub digest: String,
}

impl PromptTemplate {
    pub fn builtin(name: TemplateName) -> PromptTemplate {
        PromptTemplate::from_body(name, name.builtin_body().to_string())
            .expect("shipped template is complete")
    }

    pub fn from_body(name: TemplateName, body: String) -> Result<PromptTemplate, PromptError> {
        for &placeholder in name.placeholders() {
            if !body.contains(placeholder) {
                return Err(PromptError::MissingPlaceholder {
                    template: name,
                    placeholder,
                });
            }
        }
        let digest = sha256_hex(body.as_bytes());
        Ok(PromptTemplate { name, body, digest })
    }

    pub fn placeholders(&self) -> &'static [&'static str] {
        self.name.placeholders()
    }

    pub fn is_pinned(&self) -> bool {
        self.digest == self.name.pinned_digest()
    }

    /// Replaces every placeholder in one left-to-right pass; substituted text is
    /// never rescanned.
    fn fill(&self, values: &BTreeMap<&'static str, String>) -> Result<String, PromptError> {
        let slots = self.placeholders();
        let mut out = String::with_capacity(
            self.body.len() + values.values().map(String::len).sum::<usize>(),
        );
        let mut rest = self.body.as_str();
        loop {
            let next = slots
                .iter()
                .filter_map(|s| rest.find(s).map(|i| (i, *s)))
                .min_by_key(|(i, _)| *i);
            let Some((i, slot)) = next else {
                out.push_str(rest);
                break;
            };
            out.push_str(&rest[..i]);
            out.push_str(&values[slot]);
            rest = &rest[i + slot.len()..];
        }
        for &slot in slots {
            if out.contains(slot) {
                return Err(PromptError::ResidualPlaceholder(slot));
            }
        }
        Ok(out)
    }
}

/// The three templates in use, built in or loaded from an override directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub position: PromptTemplate,
    pub transition: PromptTemplate,
    pub transition_short: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet::builtin()
    }
}

impl PromptSet {
    pub fn builtin() -> PromptSet {
        PromptSet {
            position: PromptTemplate::builtin(TemplateName::Position),
            transition: PromptTemplate::builtin(TemplateName::Transition),
            transition_short: PromptTemplate::builtin(TemplateName::TransitionShort),
        }
    }

    /// `<dir>/<name>.txt` replaces the built-in body for that template when present.
    pub fn load(override_dir: Option<&Path>) -> Result<PromptSet, PromptError> {
        let mut set = PromptSet::builtin();
        let Some(dir) = override_dir else {
            return Ok(set);
        };
        for name in TemplateName::ALL {
            let path = dir.join(format!("{}.txt", name.as_str()));
            if !path.exists() {
                continue;
            }
            let body = std::fs::read_to_string(&path).map_err(|e| PromptError::Override {
                template: name,
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            *set.get_mut(name) = PromptTemplate::from_body(name, body)?;
        }
        Ok(set)
    }

    pub fn get(&self, name: TemplateName) -> &PromptTemplate {
        match name {
            TemplateName::Position => &self.position,
            TemplateName::Transition => &self.transition,
            TemplateName::TransitionShort => &self.transition_short,
        }
    }

    fn get_mut(&mut self, name: TemplateName) -> &mut PromptTemplate {
        match name {
            TemplateName::Position => &mut self.position,
            TemplateName::Transition => &mut self.transition,
            TemplateName::TransitionShort => &mut self.transition_short,
        }
    }

    pub fn digests(&self) -> BTreeMap<TemplateName, String> {
        TemplateName::ALL
            .iter()
            .map(|&n| (n, self.get(n).digest.clone()))
            .collect()
    }
}

/// Digest of one substituted value; `items` counts list entries where relevant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueDigest {
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub items: Option<usize>,
}

impl ValueDigest {
    fn of(value: &str, items: Option<usize>) -> ValueDigest {
        ValueDigest {
            sha256: sha256_hex(value.as_bytes()),
            items,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub template_name: TemplateName,
    pub template_digest: String,
    pub text: String,
    pub substitution_record: BTreeMap<String, ValueDigest>,
    pub example_count: usize,
}

/// Canonical atom-mapped product text shared by both prompts.
pub fn product_text(product: &Molecule) -> Result<String, PromptError> {
    if product
        .atoms()
        .iter()
        .any(|a| a.is_heavy() && a.atom_map.is_none())
    {
        return Err(PromptError::UnmappedProduct);
    }
    Ok(canonical_smiles(product, true))
}

/// `Elem:map` tokens in ascending map order, e.g. `C:12 N:14` or `N:17 c:18`.
pub fn position_tokens(product: &Molecule, s: &AtomMapSet) -> Result<String, PromptError> {
    if s.is_empty() {
        return Err(PromptError::EmptyPosition);
    }
    let resolved = resolve_map_set(product, s);
    if !resolved.is_complete() {
        return Err(PromptError::UnresolvedMaps(resolved.missing.to_vec()));
    }
    let index = product.map_index();
    let tokens: Vec<String> = s
        .iter()
        .map(|m| format!("{}:{}", product.atom(index[&m]).symbol(), m))
        .collect();
    Ok(tokens.join(" "))
}

pub fn render_position_prompt(
    prompts: &PromptSet,
    product: &Molecule,
    ontology: &Ontology,
) -> Result<RenderedPrompt, PromptError> {
    let template = &prompts.position;
    let product = product_text(product)?;
    let ontology_json = ontology.to_json();
    let mut record = BTreeMap::new();
    record.insert(
        ONTOLOGY_SLOT.to_string(),
        ValueDigest::of(&ontology_json, Some(ontology.len())),
    );
    record.insert(PRODUCT_SLOT.to_string(), ValueDigest::of(&product, None));
    let values = BTreeMap::from([(ONTOLOGY_SLOT, ontology_json), (PRODUCT_SLOT, product)]);
    Ok(RenderedPrompt {
        template_name: template.name,
        template_digest: template.digest.clone(),
        text: template.fill(&values)?,
        substitution_record: record,
        example_count: 0,
    })
}

/// Values in the input block are JSON literals; an absent name is `null` and an
/// empty library is `[]`.
pub fn render_transition_prompt(
    prompts: &PromptSet,
    product: &Molecule,
    s: &AtomMapSet,
    reaction_name: Option<&str>,
    library: &ExampleLibrary,
    variant: PromptVariant,
) -> Result<RenderedPrompt, PromptError> {
    let template = prompts.get(variant.template());
    let json = |v: &str| serde_json::Value::String(v.to_string()).to_string();
    let position = json(&position_tokens(product, s)?);
    let name = reaction_name
        .map(json)
        .unwrap_or_else(|| "null".to_string());
    let product = json(&product_text(product)?);
    let examples = serde_json::to_string(&library.examples).expect("strings serialize");
    let mut record = BTreeMap::new();
    record.insert(POSITION_SLOT.to_string(), ValueDigest::of(&position, None));
    record.insert(NAME_SLOT.to_string(), ValueDigest::of(&name, None));
    record.insert(
        PRODUCT_SMILES_SLOT.to_string(),
        ValueDigest::of(&product, None),
    );
    record.insert(
        EXAMPLES_SLOT.to_string(),
        ValueDigest::of(&examples, Some(library.examples.len())),
    );
    let values = BTreeMap::from([
        (POSITION_SLOT, position),
        (NAME_SLOT, name),
        (PRODUCT_SMILES_SLOT, product),
        (EXAMPLES_SLOT, examples),
    ]);
    Ok(RenderedPrompt {
        template_name: template.name,
        template_digest: template.digest.clone(),
        text: template.fill(&values)?,
        substitution_record: record,
        example_count: library.examples.len(),
    })
}
