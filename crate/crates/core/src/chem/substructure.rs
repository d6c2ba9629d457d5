use super::molecule::{Atom, AtomKind, Molecule};

/// Pattern-atom semantics: wildcards match anything, element lists match any
/// listed element, plain atoms match element and aromaticity (and charge when
/// the pattern atom is charged).
pub fn atom_matches(pattern: &Atom, target: &Atom) -> bool {
    match (&pattern.kind, &target.kind) {
        (AtomKind::Wildcard, _) => true,
        (AtomKind::ElementList(entries), AtomKind::Element(e)) => entries
            .iter()
            .any(|x| x.element == *e && x.aromatic == target.aromatic),
        (AtomKind::ElementList(a), AtomKind::ElementList(b)) => a == b,
        (AtomKind::Element(p), AtomKind::Element(t)) => {
            p == t
                && pattern.aromatic == target.aromatic
                && (pattern.charge == 0 || pattern.charge == target.charge)
        }
        _ => false,
    }
}

/// True iff `pattern` embeds into `target` (bond kinds must agree; extra
/// target bonds are allowed).
pub fn substructure_match(pattern: &Molecule, target: &Molecule) -> bool {
    find_embedding(pattern, target).is_some()
}

/// One embedding as `pattern atom -> target atom`, if any.
pub fn find_embedding(pattern: &Molecule, target: &Molecule) -> Option<Vec<usize>> {
    if pattern.len() > target.len() {
        return None;
    }
    if pattern.is_empty() {
        return Some(Vec::new());
    }
    let order = match_order(pattern);
    let mut state = Search {
        pattern,
        target,
        order: &order,
        assign: vec![usize::MAX; pattern.len()],
        used: vec![false; target.len()],
    };
    state.extend(0).then_some(state.assign)
}

/// BFS order within each fragment so most atoms have a matched anchor neighbor.
fn match_order(pattern: &Molecule) -> Vec<(usize, Option<usize>)> {
    let mut seen = vec![false; pattern.len()];
    let mut order = Vec::with_capacity(pattern.len());
    for start in 0..pattern.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([(start, None)]);
        while let Some((a, anchor)) = queue.pop_front() {
            order.push((a, anchor));
            for &(n, _) in pattern.neighbors(a) {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back((n, Some(a)));
                }
            }
        }
    }
    order
}

struct Search<'a> {
    pattern: &'a Molecule,
    target: &'a Molecule,
    order: &'a [(usize, Option<usize>)],
    assign: Vec<usize>,
    used: Vec<bool>,
}

impl Search<'_> {
    fn extend(&mut self, depth: usize) -> bool {
        let Some(&(p, anchor)) = self.order.get(depth) else {
            return true;
        };
        let candidates: Vec<usize> = match anchor {
            Some(q) => self
                .target
                .neighbors(self.assign[q])
                .iter()
                .map(|&(t, _)| t)
                .collect(),
            None => (0..self.target.len()).collect(),
        };
        for t in candidates {
            if self.used[t] || !self.feasible(p, t) {
                continue;
            }
            self.assign[p] = t;
            self.used[t] = true;
            if self.extend(depth + 1) {
                return true;
            }
            self.used[t] = false;
            self.assign[p] = usize::MAX;
        }
        false
    }

    fn feasible(&self, p: usize, t: usize) -> bool {
        if self.pattern.degree(p) > self.target.degree(t) {
            return false;
        }
        if !atom_matches(self.pattern.atom(p), self.target.atom(t)) {
            return false;
        }
        self.pattern.neighbors(p).iter().all(|&(q, bi)| {
            let tq = self.assign[q];
            if tq == usize::MAX {
                return true;
            }
            match self.target.bond_between(t, tq) {
                Some(tb) => tb.kind == self.pattern.bonds()[bi].kind,
                None => false,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn sub(p: &str, t: &str) -> bool {
        substructure_match(&parse_smiles(p).unwrap(), &parse_smiles(t).unwrap())
    }

    #[test]
    fn basic_cases() {
        assert!(sub("CO", "CCO"));
        assert!(sub("[*]Br", "CCBr"));
        assert!(!sub("CN", "CCO"));
        assert!(sub("C=O", "CC(=O)O"));
        assert!(!sub("C=O", "CCO"));
        assert!(sub("[Cl,Br]c1ccccc1", "Brc1ccccc1C"));
        assert!(!sub("[Cl,Br]c1ccccc1", "Ic1ccccc1"));
        assert!(sub("[O-]", "CC(=O)[O-]"));
        assert!(!sub("[O-]", "CC(=O)O"));
        assert!(sub("O", "[O-]C"));
    }

    #[test]
    fn embedding_is_injective() {
        let e = find_embedding(&parse_smiles("CC").unwrap(), &parse_smiles("CC").unwrap()).unwrap();
        assert_ne!(e[0], e[1]);
        assert!(!sub("CCC", "CC"));
    }
}
