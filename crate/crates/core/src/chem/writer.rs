use std::fmt::Write as _;

use super::molecule::{default_implicit_h, Atom, AtomKind, BondKind, Molecule};

/// Writes `m` as SMILES, traversing each fragment depth-first from its
/// lowest-index atom and visiting neighbors in index order.
pub fn write_smiles(m: &Molecule, include_maps: bool) -> String {
    Writer::new(m, include_maps).write().0
}

/// Atom indices in the order they appear in [`write_smiles`] output.
pub fn output_order(m: &Molecule) -> Vec<usize> {
    Writer::new(m, true).write().1
}

struct Writer<'a> {
    m: &'a Molecule,
    include_maps: bool,
    visited: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    /// Ring bonds per atom: (partner, bond index, is_opening).
    ring_events: Vec<Vec<(usize, usize, bool)>>,
    ring_seen: Vec<bool>,
    digits: Vec<Option<usize>>,
    bond_digit: Vec<Option<usize>>,
    out: String,
    order: Vec<usize>,
}

impl<'a> Writer<'a> {
    fn new(m: &'a Molecule, include_maps: bool) -> Self {
        Writer {
            m,
            include_maps,
            visited: vec![false; m.len()],
            children: vec![Vec::new(); m.len()],
            ring_events: vec![Vec::new(); m.len()],
            ring_seen: vec![false; m.bonds().len()],
            digits: Vec::new(),
            bond_digit: vec![None; m.bonds().len()],
            out: String::new(),
            order: Vec::with_capacity(m.len()),
        }
    }

    fn write(mut self) -> (String, Vec<usize>) {
        let mut first = true;
        for start in 0..self.m.len() {
            if self.visited[start] {
                continue;
            }
            self.plan(start);
            if !first {
                self.out.push('.');
            }
            first = false;
            self.emit(start, None);
        }
        (self.out, self.order)
    }

    /// First pass: DFS tree plus ring-closure bonds for one fragment.
    fn plan(&mut self, start: usize) {
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(start, None, 0)];
        self.visited[start] = true;
        while let Some(&mut (atom, parent_bond, ref mut cursor)) = stack.last_mut() {
            let nbrs = self.m.neighbors(atom);
            if *cursor >= nbrs.len() {
                stack.pop();
                continue;
            }
            let (n, bi) = nbrs[*cursor];
            *cursor += 1;
            if Some(bi) == parent_bond {
                continue;
            }
            if !self.visited[n] {
                self.visited[n] = true;
                self.children[atom].push((n, bi));
                stack.push((n, Some(bi), 0));
            } else if !self.ring_seen[bi] {
                self.ring_seen[bi] = true;
                self.ring_events[n].push((atom, bi, true));
                self.ring_events[atom].push((n, bi, false));
            }
        }
    }

    fn emit(&mut self, atom: usize, incoming: Option<(usize, usize)>) {
        if let Some((from, bi)) = incoming {
            self.bond_symbol(from, bi);
        }
        self.order.push(atom);
        let text = atom_text(self.m, atom, self.include_maps);
        self.out.push_str(&text);

        let mut events = std::mem::take(&mut self.ring_events[atom]);
        // closings first so their digits can be reused by openings
        events.sort_by_key(|&(partner, _, opening)| (opening, partner));
        for (_, bi, opening) in events {
            if opening {
                let d = match self.digits.iter().position(Option::is_none) {
                    Some(d) => d,
                    None => {
                        self.digits.push(None);
                        self.digits.len() - 1
                    }
                };
                self.digits[d] = Some(bi);
                self.bond_digit[bi] = Some(d);
                self.bond_symbol(atom, bi);
                self.push_digit(d + 1);
            } else {
                let d = self.bond_digit[bi].expect("ring opened before closing");
                self.digits[d] = None;
                self.push_digit(d + 1);
            }
        }

        let kids = std::mem::take(&mut self.children[atom]);
        let last = kids.len().saturating_sub(1);
        for (i, (child, bi)) in kids.into_iter().enumerate() {
            if i < last {
                self.out.push('(');
                self.emit(child, Some((atom, bi)));
                self.out.push(')');
            } else {
                self.emit(child, Some((atom, bi)));
            }
        }
    }

    fn push_digit(&mut self, n: usize) {
        if n < 10 {
            let _ = write!(self.out, "{n}");
        } else {
            assert!(n < 100, "more than 99 simultaneously open rings");
            let _ = write!(self.out, "%{n:02}");
        }
    }

    fn bond_symbol(&mut self, from: usize, bi: usize) {
        let bond = &self.m.bonds()[bi];
        let to = bond.other(from);
        let both_aromatic = self.m.atom(from).aromatic && self.m.atom(to).aromatic;
        match bond.kind {
            BondKind::Single => {
                if let Some(s) = bond.stereo_from(from) {
                    self.out.push(s.as_char());
                } else if both_aromatic {
                    self.out.push('-');
                }
            }
            BondKind::Double => self.out.push('='),
            BondKind::Triple => self.out.push('#'),
            BondKind::Aromatic => {
                if !both_aromatic {
                    self.out.push(':');
                }
            }
        }
    }
}

fn atom_text(m: &Molecule, idx: usize, include_maps: bool) -> String {
    let atom = m.atom(idx);
    let map = if include_maps { atom.atom_map } else { None };
    if !needs_bracket(m, idx, atom, map) {
        return atom.symbol();
    }
    let mut s = String::from("[");
    if let Some(iso) = atom.isotope {
        let _ = write!(s, "{iso}");
    }
    s.push_str(&atom.symbol());
    if let Some(c) = atom.chirality {
        s.push_str(c.as_str());
    }
    match atom.implicit_h {
        0 => {}
        1 => s.push('H'),
        n => {
            let _ = write!(s, "H{n}");
        }
    }
    match atom.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => {
            let _ = write!(s, "+{c}");
        }
        c => {
            let _ = write!(s, "-{}", -c);
        }
    }
    if let Some(map) = map {
        let _ = write!(s, ":{map}");
    }
    s.push(']');
    s
}

fn needs_bracket(m: &Molecule, idx: usize, atom: &Atom, map: Option<u32>) -> bool {
    if atom.charge != 0 || atom.isotope.is_some() || map.is_some() || atom.chirality.is_some() {
        return true;
    }
    match &atom.kind {
        AtomKind::Wildcard => false,
        AtomKind::ElementList(_) => true,
        AtomKind::Element(e) => {
            let allowed = if atom.aromatic {
                e.is_aromatic_organic()
            } else {
                e.is_organic_subset()
            };
            !allowed
                || default_implicit_h(*e, atom.aromatic, m.half_bond_order_sum(idx))
                    != atom.implicit_h
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn rt(s: &str) -> String {
        write_smiles(&parse_smiles(s).unwrap(), true)
    }

    #[test]
    fn simple_outputs() {
        assert_eq!(rt("CC"), "CC");
        assert_eq!(rt("CC(=O)N"), "CC(=O)N");
        assert_eq!(rt("c1ccccc1"), "c1ccccc1");
        assert_eq!(rt("C1CC1C"), "C1CC1C");
        assert_eq!(rt("[NH4+]"), "[NH4+]");
        assert_eq!(rt("c1ccccc1-c1ccccc1"), "c1ccccc1-c1ccccc1");
        assert_eq!(rt("[CH3:1][OH:2]"), "[CH3:1][OH:2]");
        assert_eq!(rt("[F,Cl]C"), "[F,Cl]C");
        assert_eq!(rt("F/C=C/F"), "F/C=C/F");
    }

    #[test]
    fn map_stripping() {
        let m = parse_smiles("[NH2:4]C").unwrap();
        let s = write_smiles(&m, false);
        assert_eq!(s, "NC");
        assert!(parse_smiles(&s)
            .unwrap()
            .atoms()
            .iter()
            .all(|a| a.atom_map.is_none()));
    }

    #[test]
    fn pyrrole_keeps_bracket_h() {
        assert_eq!(rt("c1cc[nH]c1"), "c1cc[nH]c1");
    }

    #[test]
    fn ring_closure_direction_survives() {
        let m = parse_smiles("C/1=C/CCCC\\1").unwrap();
        let again = parse_smiles(&write_smiles(&m, true)).unwrap();
        assert_eq!(m.bonds(), again.bonds());
    }
}
