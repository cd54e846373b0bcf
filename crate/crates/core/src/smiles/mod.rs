//! SMILES parsing, validation, canonicalization, and rewriting.
//!
//! The supported grammar is the organic subset plus bracket atoms: elements
//! B, C, N, O, P, S, F, Cl, Br, I (and H inside brackets), aromatic lowercase
//! b/c/n/o/p/s, bonds `-` `=` `#` `:`, ring closures `1`-`9` and `%nn`,
//! branches, and the dot disconnect. Bracket atoms accept isotope digits and
//! `@`/`@@` chirality but discard both; charge and explicit hydrogen counts
//! are kept. Aromaticity is taken from the input flags as written — there is
//! no perception or kekulization.

mod canon;
mod io;
mod parse;
mod write;

pub use io::{read_smiles_file, read_smiles_lines, SmilesRecord};

use std::fmt;

/// Chemical elements supported by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    B,
    C,
    N,
    O,
    P,
    S,
    F,
    Cl,
    Br,
    I,
    H,
}

impl Element {
    pub fn symbol(self) -> &'static str {
        match self {
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::P => "P",
            Element::S => "S",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::H => "H",
        }
    }

    /// Maximum standard valence used by the validity screen.
    pub fn max_valence(self) -> i32 {
        match self {
            Element::B => 3,
            Element::C => 4,
            Element::N => 3,
            Element::O => 2,
            Element::P => 5,
            Element::S => 6,
            Element::F | Element::Cl | Element::Br | Element::I | Element::H => 1,
        }
    }

    /// Elements that may carry the aromatic flag (lowercase SMILES).
    pub fn aromatic_allowed(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }

    /// Stable one-byte code, used in hashing and ranking.
    pub(crate) fn code(self) -> u8 {
        match self {
            Element::B => 0,
            Element::C => 1,
            Element::N => 2,
            Element::O => 3,
            Element::P => 4,
            Element::S => 5,
            Element::F => 6,
            Element::Cl => 7,
            Element::Br => 8,
            Element::I => 9,
            Element::H => 10,
        }
    }
}

/// Bond order of an edge in the molecular graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Fixed code used in fingerprint hashing: single=1, double=2, triple=3,
    /// aromatic=4.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    /// Bond-order contribution in half-units (aromatic counts 1.5).
    fn half_units(self) -> i32 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }
}

/// One atom of a parsed molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    /// True when the atom was written lowercase (or lowercase in brackets).
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogen count from a bracket atom; bare atoms carry 0.
    pub explicit_hydrogens: u8,
    /// Derived: the atom lies on at least one cycle.
    pub in_ring: bool,
}

/// One bond of a parsed molecule. `a` and `b` are atom indices, `a < b` is
/// not guaranteed; at most one bond exists per unordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

/// A parsed molecular graph together with the SMILES text it came from.
#[derive(Debug, Clone)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source: String,
    /// adjacency[i] lists (neighbor atom index, bond index).
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    pub(crate) fn assemble(atoms: Vec<Atom>, bonds: Vec<Bond>, source: String) -> Molecule {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (bi, bond) in bonds.iter().enumerate() {
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }
        Molecule {
            atoms,
            bonds,
            source,
            adjacency,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// The SMILES text this molecule was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Neighbors of atom `i` as (atom index, bond index) pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Bond-order total of atom `i` in half-units (aromatic = 3).
    fn bond_half_units(&self, i: usize) -> i32 {
        self.adjacency[i]
            .iter()
            .map(|&(_, bi)| self.bonds[bi].order.half_units())
            .sum()
    }
}

/// Why a SMILES string failed to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownSymbol,
    UnmatchedRingClosure,
    UnmatchedParenthesis,
    BadBracketAtom,
    ValenceViolation,
    EmptyInput,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::UnknownSymbol => "unknown symbol",
            ParseErrorKind::UnmatchedRingClosure => "unmatched ring closure",
            ParseErrorKind::UnmatchedParenthesis => "unmatched parenthesis",
            ParseErrorKind::BadBracketAtom => "bad bracket atom",
            ParseErrorKind::ValenceViolation => "valence violation",
            ParseErrorKind::EmptyInput => "empty input",
        };
        f.write_str(s)
    }
}

/// Parse failure at a byte offset of the input. No partial molecule is ever
/// returned; `position <= source.len()` always holds.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

/// Parse a SMILES string into a molecular graph.
///
/// Accepts any byte string; returns the first offending position on failure.
/// The returned molecule has passed the standard-valence screen, so
/// [`validate`] is exactly `parse(s).is_ok()`.
pub fn parse(smiles: &str) -> Result<Molecule, ParseError> {
    parse::parse_smiles(smiles)
}

/// True iff the string parses and every atom passes the valence screen
/// (bond-order sum with aromatic bonds as 1.5, rounded down, plus explicit
/// hydrogens, at most the element's maximum standard valence; +1/-1 charges
/// shift the allowance for N and O).
pub fn validate(smiles: &str) -> bool {
    parse(smiles).is_ok()
}

/// Canonical SMILES of a molecule: a deterministic spelling that depends
/// only on the graph. Atom order comes from iterated extended-connectivity
/// refinement with deterministic tie-breaking, then a rank-guided DFS.
pub fn canonicalize(mol: &Molecule) -> String {
    canon::canonicalize(mol)
}

/// A valid SMILES respelling of the same graph: DFS from a seeded-random
/// start atom with seeded-random neighbor order. Deterministic per seed.
pub fn random_rewrite(mol: &Molecule, seed: u64) -> String {
    write::random_rewrite(mol, seed)
}

/// Conciseness score in [0, 1]: 0 for invalid input, otherwise
/// `max(0, 1 - (len(s) - len(canonical)) / len(s))`, clamped so that inputs
/// no longer than their canonical form score exactly 1.
pub fn conciseness(smiles: &str) -> f64 {
    let Ok(mol) = parse(smiles) else {
        return 0.0;
    };
    let canonical = canonicalize(&mol);
    let len = smiles.len();
    let gap = len.saturating_sub(canonical.len());
    (1.0 - gap as f64 / len as f64).max(0.0)
}

/// Stable per-atom signature of the refined graph, usable as a
/// graph-isomorphism oracle: two molecules are reported isomorphic iff their
/// sorted signatures agree.
pub fn graph_signature(mol: &Molecule) -> Vec<u64> {
    canon::refinement_signature(mol)
}
