use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::element::Element;
use super::SmilesError;

/// Tetrahedral tag, kept exactly as written (`@` or `@@`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chirality {
    /// `@`
    CounterClockwise,
    /// `@@`
    Clockwise,
}

impl Chirality {
    pub fn as_str(self) -> &'static str {
        match self {
            Chirality::CounterClockwise => "@",
            Chirality::Clockwise => "@@",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ListEntry {
    pub element: Element,
    pub aromatic: bool,
}

/// What an atom stands for: a concrete element or one of the template markers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKind {
    Element(Element),
    /// `*` / `[*]`, matches any atom.
    Wildcard,
    /// `[F,Cl,Br,I]`, matches any listed element.
    ElementList(Vec<ListEntry>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub kind: AtomKind,
    pub aromatic: bool,
    pub charge: i8,
    pub isotope: Option<u16>,
    /// Attached hydrogens: the bracket `H` count, or the default-valence count for
    /// organic-subset atoms written without brackets.
    pub implicit_h: u8,
    pub atom_map: Option<u32>,
    pub chirality: Option<Chirality>,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            kind: AtomKind::Element(element),
            aromatic: false,
            charge: 0,
            isotope: None,
            implicit_h: 0,
            atom_map: None,
            chirality: None,
        }
    }

    pub fn element(&self) -> Option<Element> {
        match self.kind {
            AtomKind::Element(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_wildcard(&self) -> bool {
        matches!(self.kind, AtomKind::Wildcard)
    }

    pub fn is_template_marker(&self) -> bool {
        !matches!(self.kind, AtomKind::Element(_))
    }

    /// Non-hydrogen atom (wildcards and element lists count as heavy).
    pub fn is_heavy(&self) -> bool {
        self.element() != Some(Element::H)
    }

    /// Symbol with aromatic case, `*` for wildcards and `[A,B]`-style text for lists.
    pub fn symbol(&self) -> String {
        match &self.kind {
            AtomKind::Element(e) => e.smiles_symbol(self.aromatic),
            AtomKind::Wildcard => "*".to_string(),
            AtomKind::ElementList(entries) => entries
                .iter()
                .map(|e| e.element.smiles_symbol(e.aromatic))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondKind {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondKind {
    /// Bond order in half units (aromatic = 3, i.e. 1.5).
    pub fn half_order(self) -> u32 {
        match self {
            BondKind::Single => 2,
            BondKind::Double => 4,
            BondKind::Triple => 6,
            BondKind::Aromatic => 3,
        }
    }
}

/// Directional bond mark, relative to the bond's `begin -> end` orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondStereo {
    /// `/`
    Up,
    /// `\`
    Down,
}

impl BondStereo {
    pub fn flipped(self) -> Self {
        match self {
            BondStereo::Up => BondStereo::Down,
            BondStereo::Down => BondStereo::Up,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            BondStereo::Up => '/',
            BondStereo::Down => '\\',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub kind: BondKind,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }

    /// Stereo mark as seen when walking the bond starting at `from`.
    pub fn stereo_from(&self, from: usize) -> Option<BondStereo> {
        self.stereo
            .map(|s| if from == self.begin { s } else { s.flipped() })
    }
}

/// Attributed molecular graph. Atoms keep the order in which they were written.
#[derive(Clone)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    source_text: String,
}

impl Molecule {
    /// Builds a molecule, checking bond endpoints and bond uniqueness.
    pub fn new(
        atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        source_text: impl Into<String>,
    ) -> Result<Self, SmilesError> {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        let mut seen = BTreeSet::new();
        for (i, b) in bonds.iter().enumerate() {
            if b.begin == b.end || b.begin >= atoms.len() || b.end >= atoms.len() {
                return Err(SmilesError::new(
                    0,
                    format!("bond {i} has invalid endpoints"),
                ));
            }
            let key = (b.begin.min(b.end), b.begin.max(b.end));
            if !seen.insert(key) {
                return Err(SmilesError::new(
                    0,
                    format!("duplicate bond between atoms {} and {}", key.0, key.1),
                ));
            }
            adjacency[b.begin].push((b.end, i));
            adjacency[b.end].push((b.begin, i));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Molecule {
            atoms,
            bonds,
            adjacency,
            source_text: source_text.into(),
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, idx: usize) -> &Atom {
        &self.atoms[idx]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// `(neighbor, bond index)` pairs sorted by neighbor index.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|(n, _)| *n == b)
            .map(|(_, bi)| &self.bonds[*bi])
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_heavy()).count()
    }

    /// Sum of incident bond orders in half units.
    pub fn half_bond_order_sum(&self, atom: usize) -> u32 {
        self.adjacency[atom]
            .iter()
            .map(|(_, bi)| self.bonds[*bi].kind.half_order())
            .sum()
    }

    /// Connected components, each sorted, ordered by their lowest atom index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(a) = stack.pop() {
                for &(n, _) in &self.adjacency[a] {
                    if !seen[n] {
                        seen[n] = true;
                        comp.push(n);
                        stack.push(n);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Induced subgraph on `atoms`, keeping their relative order.
    pub fn subgraph(&self, atoms: &[usize]) -> Molecule {
        let mut sorted = atoms.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let index: HashMap<usize, usize> =
            sorted.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        let new_atoms = sorted.iter().map(|&i| self.atoms[i].clone()).collect();
        let new_bonds = self
            .bonds
            .iter()
            .filter_map(|b| {
                Some(Bond {
                    begin: *index.get(&b.begin)?,
                    end: *index.get(&b.end)?,
                    ..*b
                })
            })
            .collect();
        let mut m =
            Molecule::new(new_atoms, new_bonds, String::new()).expect("induced subgraph is valid");
        m.source_text = super::write_smiles(&m, true);
        m
    }

    /// Splits a dotted molecule into its connected fragments.
    pub fn fragments(&self) -> Vec<Molecule> {
        let comps = self.components();
        if comps.len() == 1 {
            return vec![self.clone()];
        }
        comps.iter().map(|c| self.subgraph(c)).collect()
    }

    /// Atom order permuted so that new atom `i` is old atom `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Molecule {
        assert_eq!(order.len(), self.atoms.len(), "permutation length mismatch");
        let mut inverse = vec![usize::MAX; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let atoms = order.iter().map(|&o| self.atoms[o].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                begin: inverse[b.begin],
                end: inverse[b.end],
                ..*b
            })
            .collect();
        Molecule::new(atoms, bonds, self.source_text.clone())
            .expect("permutation preserves validity")
    }

    pub fn with_source_text(mut self, text: impl Into<String>) -> Molecule {
        self.source_text = text.into();
        self
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut [Atom] {
        &mut self.atoms
    }

    pub(crate) fn bonds_mut(&mut self) -> &mut [Bond] {
        &mut self.bonds
    }

    /// Copy with every atom map removed.
    pub fn without_maps(&self) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.atom_map = None;
        }
        m.source_text = super::write_smiles(&m, false);
        m
    }

    /// Copy with atom chirality and bond direction marks removed.
    pub fn without_stereo(&self) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.chirality = None;
        }
        for b in &mut m.bonds {
            b.stereo = None;
        }
        m.source_text = super::write_smiles(&m, true);
        m
    }

    /// Atom map value -> atom index. Later duplicates are ignored.
    pub fn map_index(&self) -> HashMap<u32, usize> {
        let mut out = HashMap::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if let Some(m) = a.atom_map {
                out.entry(m).or_insert(i);
            }
        }
        out
    }

    pub fn atom_maps(&self) -> AtomMapSet {
        self.atoms.iter().filter_map(|a| a.atom_map).collect()
    }

    /// Atom-map values used by more than one atom.
    pub fn duplicate_maps(&self) -> Vec<u32> {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for m in self.atoms.iter().filter_map(|a| a.atom_map) {
            *counts.entry(m).or_default() += 1;
        }
        counts
            .into_iter()
            .filter(|(_, c)| *c > 1)
            .map(|(m, _)| m)
            .collect()
    }

    /// No wildcard or element-list atoms.
    pub fn is_concrete(&self) -> bool {
        self.atoms.iter().all(|a| !a.is_template_marker())
    }

    /// Checks the data-molecule rules: unique atom maps and no template markers.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let dups = self.duplicate_maps();
        if !dups.is_empty() {
            return Err(ValidationError::DuplicateMaps(dups));
        }
        if !self.is_concrete() {
            return Err(ValidationError::TemplateAtoms);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("duplicate atom maps: {0:?}")]
    DuplicateMaps(Vec<u32>),
    #[error("wildcard or element-list atoms are only allowed in templates")]
    TemplateAtoms,
}

impl PartialEq for Molecule {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.bonds == other.bonds
    }
}

impl Eq for Molecule {}

impl fmt::Debug for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Molecule({:?})", self.source_text)
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text)
    }
}

impl Serialize for Molecule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source_text)
    }
}

impl<'de> Deserialize<'de> for Molecule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_smiles(&text).map_err(serde::de::Error::custom)
    }
}

/// A set of atom-map values, e.g. a disconnection site.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomMapSet(BTreeSet<u32>);

impl AtomMapSet {
    pub fn new() -> Self {
        AtomMapSet(BTreeSet::new())
    }

    pub fn insert(&mut self, map: u32) -> bool {
        self.0.insert(map)
    }

    pub fn contains(&self, map: u32) -> bool {
        self.0.contains(&map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn intersection_len(&self, other: &AtomMapSet) -> usize {
        self.0.intersection(&other.0).count()
    }

    pub fn union_len(&self, other: &AtomMapSet) -> usize {
        self.0.union(&other.0).count()
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<u32> for AtomMapSet {
    fn from_iter<T: IntoIterator<Item = u32>>(iter: T) -> Self {
        AtomMapSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[u32; N]> for AtomMapSet {
    fn from(v: [u32; N]) -> Self {
        v.into_iter().collect()
    }
}

/// Result of looking up an [`AtomMapSet`] on a molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapResolution {
    /// Graph indices of the atoms found, ascending.
    pub indices: Vec<usize>,
    /// Requested maps that no atom carries.
    pub missing: AtomMapSet,
}

impl MapResolution {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

pub fn resolve_map_set(m: &Molecule, s: &AtomMapSet) -> MapResolution {
    let index = m.map_index();
    let mut indices = Vec::new();
    let mut missing = AtomMapSet::new();
    for map in s.iter() {
        match index.get(&map) {
            Some(&i) => indices.push(i),
            None => {
                missing.insert(map);
            }
        }
    }
    indices.sort_unstable();
    MapResolution { indices, missing }
}

/// Implicit hydrogen count for an organic-subset atom written without brackets.
///
/// Aromatic bonds count 1.5; the total is floored. Aromatic atoms only use their
/// lowest default valence (so pyrrole-type `[nH]` must be bracketed).
pub fn default_implicit_h(element: Element, aromatic: bool, half_order_sum: u32) -> u8 {
    let valences = element.default_valences();
    let used = half_order_sum / 2;
    let candidates: &[u8] = if aromatic {
        &valences[..valences.len().min(1)]
    } else {
        valences
    };
    candidates
        .iter()
        .find(|&&v| u32::from(v) >= used)
        .map(|&v| (u32::from(v) - used) as u8)
        .unwrap_or(0)
}
