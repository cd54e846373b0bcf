//! SMILES scanner and graph builder.

use std::collections::HashMap;

use super::{Atom, Bond, BondOrder, Element, Molecule, ParseError, ParseErrorKind};

struct RingOpen {
    atom: usize,
    order: Option<BondOrder>,
    position: usize,
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_positions: Vec<usize>,
    bonds: Vec<Bond>,
    /// Atom awaiting the next connection, None right after a dot.
    prev: Option<usize>,
    pending_bond: Option<(BondOrder, usize)>,
    /// Saved `prev` and the position of each open '('.
    branch_stack: Vec<(Option<usize>, usize)>,
    rings: HashMap<u16, RingOpen>,
}

fn err(position: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { position, kind }
}

pub(super) fn parse_smiles(smiles: &str) -> Result<Molecule, ParseError> {
    let mut sc = Scanner {
        bytes: smiles.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        atom_positions: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending_bond: None,
        branch_stack: Vec::new(),
        rings: HashMap::new(),
    };
    sc.run()?;

    let mut mol = Molecule::assemble(sc.atoms, sc.bonds, smiles.to_string());
    mark_ring_atoms(&mut mol);
    check_valences(&mol, &sc.atom_positions)?;
    Ok(mol)
}

impl<'a> Scanner<'a> {
    fn run(&mut self) -> Result<(), ParseError> {
        while self.pos < self.bytes.len() {
            let at = self.pos;
            match self.bytes[at] {
                b'(' => {
                    if self.prev.is_none() || self.pending_bond.is_some() {
                        return Err(err(at, ParseErrorKind::UnmatchedParenthesis));
                    }
                    self.branch_stack.push((self.prev, at));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending_bond.is_some() {
                        return Err(err(at, ParseErrorKind::UnmatchedParenthesis));
                    }
                    match self.branch_stack.pop() {
                        Some((saved, _)) => self.prev = saved,
                        None => return Err(err(at, ParseErrorKind::UnmatchedParenthesis)),
                    }
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if self.prev.is_none() || self.pending_bond.is_some() {
                        return Err(err(at, ParseErrorKind::UnknownSymbol));
                    }
                    let order = match self.bytes[at] {
                        b'-' => BondOrder::Single,
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        _ => BondOrder::Aromatic,
                    };
                    self.pending_bond = Some((order, at));
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending_bond.is_some() {
                        return Err(err(at, ParseErrorKind::UnknownSymbol));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    let n = (self.bytes[at] - b'0') as u16;
                    self.pos += 1;
                    self.ring_closure(n, at)?;
                }
                b'%' => {
                    if at + 2 >= self.bytes.len()
                        || !self.bytes[at + 1].is_ascii_digit()
                        || !self.bytes[at + 2].is_ascii_digit()
                    {
                        return Err(err(at, ParseErrorKind::UnmatchedRingClosure));
                    }
                    let n =
                        (self.bytes[at + 1] - b'0') as u16 * 10 + (self.bytes[at + 2] - b'0') as u16;
                    self.pos += 3;
                    // two-digit closures live in a separate key space so that
                    // "%01" does not collide with plain "1"
                    self.ring_closure(n + 10, at)?;
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, at)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, at)?;
                }
            }
        }

        if let Some((_, at)) = self.pending_bond {
            return Err(err(at, ParseErrorKind::UnknownSymbol));
        }
        if let Some(&(_, at)) = self.branch_stack.first() {
            return Err(err(at, ParseErrorKind::UnmatchedParenthesis));
        }
        if !self.rings.is_empty() {
            let first = self.rings.values().map(|r| r.position).min().unwrap();
            return Err(err(first, ParseErrorKind::UnmatchedRingClosure));
        }
        if self.atoms.is_empty() {
            return Err(err(0, ParseErrorKind::EmptyInput));
        }
        Ok(())
    }

    /// Bare (non-bracket) atom: organic subset or aromatic lowercase.
    fn organic_atom(&mut self) -> Result<Atom, ParseError> {
        let at = self.pos;
        let b = self.bytes[at];
        let next = self.bytes.get(at + 1).copied();
        let (element, aromatic, width) = match (b, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ => return Err(err(at, ParseErrorKind::UnknownSymbol)),
        };
        self.pos += width;
        Ok(Atom {
            element,
            aromatic,
            formal_charge: 0,
            explicit_hydrogens: 0,
            in_ring: false,
        })
    }

    /// Bracket atom: `[isotope? symbol chirality? hcount? charge?]`.
    /// Isotope digits and @/@@ chirality are accepted and discarded.
    fn bracket_atom(&mut self) -> Result<Atom, ParseError> {
        debug_assert_eq!(self.bytes[self.pos], b'[');
        self.pos += 1;

        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1; // isotope, ignored
        }

        let at = self.pos;
        let b = self.peek().ok_or(err(at, ParseErrorKind::BadBracketAtom))?;
        let next = self.bytes.get(at + 1).copied();
        let (element, aromatic, width) = match (b, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'H', _) => (Element::H, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ => return Err(err(at, ParseErrorKind::BadBracketAtom)),
        };
        self.pos += width;

        // chirality, ignored
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            }
        }

        let mut explicit_hydrogens: u8 = 0;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            explicit_hydrogens = 1;
            if let Some(d) = self.peek().filter(|b| b.is_ascii_digit()) {
                explicit_hydrogens = d - b'0';
                self.pos += 1;
            }
        }

        let mut formal_charge: i32 = 0;
        match self.peek() {
            Some(sign @ (b'+' | b'-')) => {
                self.pos += 1;
                let unit: i32 = if sign == b'+' { 1 } else { -1 };
                if let Some(d) = self.peek().filter(|b| b.is_ascii_digit()) {
                    formal_charge = unit * (d - b'0') as i32;
                    self.pos += 1;
                    if let Some(d2) = self.peek().filter(|b| b.is_ascii_digit()) {
                        formal_charge = formal_charge * 10 + unit * (d2 - b'0') as i32;
                        self.pos += 1;
                    }
                } else {
                    formal_charge = unit;
                    while self.peek() == Some(sign) {
                        formal_charge += unit;
                        self.pos += 1;
                    }
                }
            }
            _ => {}
        }

        if self.peek() != Some(b']') {
            return Err(err(
                self.pos.min(self.bytes.len()),
                ParseErrorKind::BadBracketAtom,
            ));
        }
        self.pos += 1;

        if aromatic && !element.aromatic_allowed() {
            return Err(err(at, ParseErrorKind::BadBracketAtom));
        }
        Ok(Atom {
            element,
            aromatic,
            formal_charge: formal_charge.clamp(-99, 99) as i8,
            explicit_hydrogens,
            in_ring: false,
        })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn add_atom(&mut self, atom: Atom, position: usize) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        self.atom_positions.push(position);
        if let Some(prev) = self.prev {
            let order = match self.pending_bond.take() {
                Some((order, _)) => order,
                None => self.default_order(prev, idx),
            };
            self.bonds.push(Bond {
                a: prev,
                b: idx,
                order,
            });
        }
        self.prev = Some(idx);
        Ok(())
    }

    /// Unwritten bond order: aromatic iff both endpoints carry the flag.
    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_closure(&mut self, key: u16, at: usize) -> Result<(), ParseError> {
        let Some(current) = self.prev else {
            return Err(err(at, ParseErrorKind::UnmatchedRingClosure));
        };
        let pending = self.pending_bond.take().map(|(o, _)| o);
        match self.rings.remove(&key) {
            Some(open) => {
                if open.atom == current {
                    return Err(err(at, ParseErrorKind::UnmatchedRingClosure));
                }
                let order = match (open.order, pending) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(err(at, ParseErrorKind::UnmatchedRingClosure))
                    }
                    (Some(a), _) => a,
                    (None, Some(b)) => b,
                    (None, None) => self.default_order(open.atom, current),
                };
                let duplicate = self.bonds.iter().any(|bond| {
                    (bond.a == open.atom && bond.b == current)
                        || (bond.a == current && bond.b == open.atom)
                });
                if duplicate {
                    return Err(err(at, ParseErrorKind::UnmatchedRingClosure));
                }
                self.bonds.push(Bond {
                    a: open.atom,
                    b: current,
                    order,
                });
            }
            None => {
                self.rings.insert(
                    key,
                    RingOpen {
                        atom: current,
                        order: pending,
                        position: at,
                    },
                );
            }
        }
        Ok(())
    }
}

/// Mark atoms that lie on a cycle: every endpoint of a non-bridge bond.
/// Bridges are found with an iterative lowlink DFS.
fn mark_ring_atoms(mol: &mut Molecule) {
    let n = mol.atoms.len();
    if n == 0 {
        return;
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut is_bridge = vec![false; mol.bonds.len()];
    let mut timer = 0usize;

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // stack of (atom, incoming bond, next neighbor slot)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        loop {
            let Some(&(u, in_bond, slot)) = stack.last() else {
                break;
            };
            if slot < mol.adjacency[u].len() {
                stack.last_mut().unwrap().2 += 1;
                let (v, bi) = mol.adjacency[u][slot];
                if bi == in_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, bi, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[u]);
                    if low[u] > disc[parent] {
                        is_bridge[in_bond] = true;
                    }
                }
            }
        }
    }

    for (bi, bond) in mol.bonds.iter().enumerate() {
        if !is_bridge[bi] {
            mol.atoms[bond.a].in_ring = true;
            mol.atoms[bond.b].in_ring = true;
        }
    }
}

/// Standard-valence screen. Charge shifts the allowance for N and O only.
fn check_valences(mol: &Molecule, positions: &[usize]) -> Result<(), ParseError> {
    for (i, atom) in mol.atoms().iter().enumerate() {
        let bond_sum = mol.bond_half_units(i) / 2; // floor of the 1.5-per-aromatic sum
        let total = bond_sum + atom.explicit_hydrogens as i32;
        let mut allowed = atom.element.max_valence();
        if matches!(atom.element, Element::N | Element::O) {
            allowed = (allowed + atom.formal_charge as i32).max(0);
        }
        if total > allowed {
            return Err(err(positions[i], ParseErrorKind::ValenceViolation));
        }
    }
    Ok(())
}
