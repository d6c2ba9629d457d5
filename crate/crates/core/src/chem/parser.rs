use std::collections::{BTreeMap, HashSet};

use super::element::Element;
use super::molecule::{
    default_implicit_h, Atom, AtomKind, Bond, BondKind, BondStereo, Chirality, ListEntry, Molecule,
};
use super::SmilesError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct BondSpec {
    kind: Option<BondKind>,
    stereo: Option<BondStereo>,
}

impl BondSpec {
    fn is_empty(&self) -> bool {
        self.kind.is_none() && self.stereo.is_none()
    }
}

struct RingOpen {
    atom: usize,
    spec: BondSpec,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bracketed: Vec<bool>,
    bonds: Vec<Bond>,
    pairs: HashSet<(usize, usize)>,
    rings: BTreeMap<u32, RingOpen>,
}

/// Parses a SMILES string (USPTO dialect plus `*` wildcards and `[A,B]` element lists).
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    if text.is_empty() {
        return Err(SmilesError::new(0, "empty SMILES"));
    }
    if let Some(pos) = text
        .bytes()
        .position(|b| !b.is_ascii() || b.is_ascii_whitespace())
    {
        return Err(SmilesError::new(pos, "unexpected character"));
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bracketed: Vec::new(),
        bonds: Vec::new(),
        pairs: HashSet::new(),
        rings: BTreeMap::new(),
    };
    p.run()?;
    p.assign_implicit_h();
    Molecule::new(p.atoms, p.bonds, text)
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.text.get(self.pos + offset).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SmilesError> {
        Err(SmilesError::new(self.pos, msg))
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut pending = BondSpec::default();
        let mut pending_pos = 0;
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();

        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    if prev.is_none() {
                        return self.err("branch without a preceding atom");
                    }
                    if !pending.is_empty() {
                        return self.err("bond symbol before '('");
                    }
                    branches.push((prev, self.pos));
                    self.pos += 1;
                }
                b')' => {
                    if !pending.is_empty() {
                        return self.err("bond symbol before ')'");
                    }
                    match branches.pop() {
                        Some((p, _)) => prev = p,
                        None => return self.err("unbalanced ')'"),
                    }
                    self.pos += 1;
                }
                b'.' => {
                    if !pending.is_empty() {
                        return self.err("bond symbol before '.'");
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if !pending.is_empty() {
                        return self.err("two consecutive bond symbols");
                    }
                    if prev.is_none() {
                        return self.err("bond symbol without a preceding atom");
                    }
                    pending = match c {
                        b'-' => BondSpec {
                            kind: Some(BondKind::Single),
                            stereo: None,
                        },
                        b'=' => BondSpec {
                            kind: Some(BondKind::Double),
                            stereo: None,
                        },
                        b'#' => BondSpec {
                            kind: Some(BondKind::Triple),
                            stereo: None,
                        },
                        b':' => BondSpec {
                            kind: Some(BondKind::Aromatic),
                            stereo: None,
                        },
                        b'/' => BondSpec {
                            kind: Some(BondKind::Single),
                            stereo: Some(BondStereo::Up),
                        },
                        _ => BondSpec {
                            kind: Some(BondKind::Single),
                            stereo: Some(BondStereo::Down),
                        },
                    };
                    pending_pos = self.pos;
                    self.pos += 1;
                }
                b'$' => return self.err("quadruple bonds are not supported"),
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = prev else {
                        return self.err("ring closure without a preceding atom");
                    };
                    let start = self.pos;
                    let digit = self.ring_number()?;
                    self.ring_closure(atom, digit, std::mem::take(&mut pending), start)?;
                }
                _ => {
                    let start = self.pos;
                    let (atom, bracketed) = self.atom()?;
                    let idx = self.atoms.len();
                    self.atoms.push(atom);
                    self.bracketed.push(bracketed);
                    if let Some(p) = prev {
                        let spec = std::mem::take(&mut pending);
                        self.add_bond(p, idx, spec, start)?;
                    }
                    prev = Some(idx);
                }
            }
        }
        if !pending.is_empty() {
            return Err(SmilesError::new(pending_pos, "dangling bond symbol"));
        }
        if let Some((_, pos)) = branches.last() {
            return Err(SmilesError::new(*pos, "unbalanced '('"));
        }
        if let Some((digit, open)) = self.rings.iter().next() {
            return Err(SmilesError::new(
                self.text.len(),
                format!("unpaired ring closure {digit} on atom {}", open.atom),
            ));
        }
        if self.atoms.is_empty() {
            return self.err("no atoms");
        }
        Ok(())
    }

    fn ring_number(&mut self) -> Result<u32, SmilesError> {
        if self.peek() == Some(b'%') {
            self.pos += 1;
            match (self.peek(), self.peek_at(1)) {
                (Some(a @ b'0'..=b'9'), Some(b @ b'0'..=b'9')) => {
                    self.pos += 2;
                    Ok(u32::from(a - b'0') * 10 + u32::from(b - b'0'))
                }
                _ => self.err("'%' must be followed by two digits"),
            }
        } else {
            let d = self.peek().unwrap() - b'0';
            self.pos += 1;
            Ok(u32::from(d))
        }
    }

    fn ring_closure(
        &mut self,
        atom: usize,
        digit: u32,
        spec: BondSpec,
        pos: usize,
    ) -> Result<(), SmilesError> {
        match self.rings.remove(&digit) {
            None => {
                self.rings.insert(digit, RingOpen { atom, spec });
                Ok(())
            }
            Some(open) => {
                if open.atom == atom {
                    return Err(SmilesError::new(pos, "ring closure to the same atom"));
                }
                let kind = match (open.spec.kind, spec.kind) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(SmilesError::new(
                            pos,
                            "conflicting ring-closure bond symbols",
                        ))
                    }
                    (a, b) => a.or(b),
                };
                // a mark written at the closing digit reads closer -> opener
                let stereo = match (open.spec.stereo, spec.stereo.map(BondStereo::flipped)) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(SmilesError::new(
                            pos,
                            "conflicting ring-closure bond directions",
                        ))
                    }
                    (a, b) => a.or(b),
                };
                self.add_bond(open.atom, atom, BondSpec { kind, stereo }, pos)
            }
        }
    }

    fn add_bond(
        &mut self,
        a: usize,
        b: usize,
        spec: BondSpec,
        pos: usize,
    ) -> Result<(), SmilesError> {
        let key = (a.min(b), a.max(b));
        if !self.pairs.insert(key) {
            return Err(SmilesError::new(
                pos,
                format!("duplicate bond between atoms {a} and {b}"),
            ));
        }
        let kind = spec
            .kind
            .unwrap_or(if self.atoms[a].aromatic && self.atoms[b].aromatic {
                BondKind::Aromatic
            } else {
                BondKind::Single
            });
        self.bonds.push(Bond {
            begin: a,
            end: b,
            kind,
            stereo: spec.stereo,
        });
        Ok(())
    }

    fn atom(&mut self) -> Result<(Atom, bool), SmilesError> {
        match self.peek() {
            Some(b'[') => self.bracket_atom().map(|a| (a, true)),
            Some(b'*') => {
                self.pos += 1;
                let mut atom = Atom::new(Element::C);
                atom.kind = AtomKind::Wildcard;
                Ok((atom, false))
            }
            Some(_) => self.organic_atom().map(|a| (a, false)),
            None => self.err("expected atom"),
        }
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let two = (self.peek(), self.peek_at(1));
        let (element, aromatic, len) = match two {
            (Some(b'C'), Some(b'l')) => (Element::CL, false, 2),
            (Some(b'B'), Some(b'r')) => (Element::BR, false, 2),
            (Some(b'B'), _) => (Element::B, false, 1),
            (Some(b'C'), _) => (Element::C, false, 1),
            (Some(b'N'), _) => (Element::N, false, 1),
            (Some(b'O'), _) => (Element::O, false, 1),
            (Some(b'P'), _) => (Element::P, false, 1),
            (Some(b'S'), _) => (Element::S, false, 1),
            (Some(b'F'), _) => (Element::F, false, 1),
            (Some(b'I'), _) => (Element::I, false, 1),
            (Some(b'b'), _) => (Element::B, true, 1),
            (Some(b'c'), _) => (Element::C, true, 1),
            (Some(b'n'), _) => (Element::N, true, 1),
            (Some(b'o'), _) => (Element::O, true, 1),
            (Some(b'p'), _) => (Element::P, true, 1),
            (Some(b's'), _) => (Element::S, true, 1),
            (Some(c), _) if c.is_ascii_alphabetic() => {
                return self.err(format!("unknown element '{}' outside brackets", c as char))
            }
            _ => return self.err("unexpected character"),
        };
        self.pos += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }

    /// Element symbol inside brackets; returns (element, aromatic).
    fn bracket_symbol(&mut self) -> Result<(Element, bool), SmilesError> {
        let c0 = self.peek();
        let c1 = self.peek_at(1);
        match c0 {
            Some(c) if c.is_ascii_uppercase() => {
                if let Some(l) = c1.filter(u8::is_ascii_lowercase) {
                    let sym = [c, l];
                    if let Some(e) = Element::from_symbol(std::str::from_utf8(&sym).unwrap()) {
                        self.pos += 2;
                        return Ok((e, false));
                    }
                }
                match Element::from_symbol(std::str::from_utf8(&[c]).unwrap()) {
                    Some(e) => {
                        self.pos += 1;
                        Ok((e, false))
                    }
                    None => self.err(format!("unknown element '{}'", c as char)),
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                if let Some(l) = c1.filter(u8::is_ascii_lowercase) {
                    let sym = [c.to_ascii_uppercase(), l];
                    if let Some(e) = Element::from_symbol(std::str::from_utf8(&sym).unwrap()) {
                        if e.can_be_aromatic() {
                            self.pos += 2;
                            return Ok((e, true));
                        }
                    }
                }
                match Element::from_symbol(std::str::from_utf8(&[c.to_ascii_uppercase()]).unwrap())
                {
                    Some(e) if e.can_be_aromatic() => {
                        self.pos += 1;
                        Ok((e, true))
                    }
                    _ => self.err(format!("unknown aromatic element '{}'", c as char)),
                }
            }
            _ => self.err("expected element symbol"),
        }
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = match self.number() {
            Some(0) => return self.err("isotope must be positive"),
            Some(n) if n > u32::from(u16::MAX) => return self.err("isotope out of range"),
            Some(n) => Some(n as u16),
            None => None,
        };

        let mut atom = Atom::new(Element::C);
        atom.isotope = isotope;
        if self.peek() == Some(b'*') {
            self.pos += 1;
            atom.kind = AtomKind::Wildcard;
        } else {
            let (e, aromatic) = self.bracket_symbol()?;
            if self.peek() == Some(b',') {
                let mut entries = vec![ListEntry {
                    element: e,
                    aromatic,
                }];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    let (e, aromatic) = self.bracket_symbol()?;
                    entries.push(ListEntry {
                        element: e,
                        aromatic,
                    });
                }
                atom.aromatic = entries.iter().all(|e| e.aromatic);
                atom.kind = AtomKind::ElementList(entries);
            } else {
                atom.kind = AtomKind::Element(e);
                atom.aromatic = aromatic;
            }
        }

        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                atom.chirality = Some(Chirality::Clockwise);
            } else {
                atom.chirality = Some(Chirality::CounterClockwise);
            }
            if matches!(self.peek(), Some(b'@') | Some(b'A'..=b'Z')) && self.peek() != Some(b'H') {
                return self.err("unsupported chirality class");
            }
        }

        if self.peek() == Some(b'H') {
            self.pos += 1;
            let n = self.number().unwrap_or(1);
            if n > 9 {
                return self.err("hydrogen count out of range");
            }
            if atom.is_template_marker() {
                return self.err("hydrogen count on a wildcard or element list");
            }
            atom.implicit_h = n as u8;
        }

        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let unit: i32 = if sign == b'+' { 1 } else { -1 };
            let mut magnitude = 1;
            if let Some(n) = self.number() {
                magnitude = n as i32;
            } else {
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    magnitude += 1;
                }
            }
            if !(1..=15).contains(&magnitude) {
                return self.err("charge out of range");
            }
            atom.charge = (unit * magnitude) as i8;
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            match self.number() {
                // map 0 conventionally means "unmapped"
                Some(0) => atom.atom_map = None,
                Some(n) => atom.atom_map = Some(n),
                None => return self.err("atom map must be a number"),
            }
        }

        match self.peek() {
            Some(b']') => {
                self.pos += 1;
                Ok(atom)
            }
            Some(_) => self.err("malformed bracket atom"),
            None => Err(SmilesError::new(open, "unbalanced '['")),
        }
    }

    fn assign_implicit_h(&mut self) {
        let mut half = vec![0u32; self.atoms.len()];
        for b in &self.bonds {
            half[b.begin] += b.kind.half_order();
            half[b.end] += b.kind.half_order();
        }
        for (i, atom) in self.atoms.iter_mut().enumerate() {
            if self.bracketed[i] {
                continue;
            }
            if let AtomKind::Element(e) = atom.kind {
                atom.implicit_h = default_implicit_h(e, atom.aromatic, half[i]);
            }
        }
    }
}
