//! SMILES emission: a DFS writer shared by canonicalization and random
//! rewriting. The traversal policy (start atoms, neighbor order) is supplied
//! by the caller; everything downstream — branch parentheses, ring-closure
//! digits, bond symbols, bracket atoms — is common.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Atom, BondOrder, Element, Molecule};

pub(super) struct Traversal {
    /// Atoms in emission (preorder) order.
    preorder: Vec<usize>,
    /// Tree children per atom, in emission order, as (child, bond index).
    children: Vec<Vec<(usize, usize)>>,
    /// Ring-closure bond ids opened (ancestor side) per atom.
    opens: Vec<Vec<usize>>,
    /// Ring-closure bond ids closed (descendant side) per atom.
    closes: Vec<Vec<usize>>,
    /// Ring-closure id -> bond index.
    ring_bonds: Vec<usize>,
    /// Component start atoms in emission order.
    starts: Vec<usize>,
}

/// DFS over all components. `starts` must contain one atom per component (a
/// superset is fine; already-visited entries are skipped). `order_neighbors`
/// may reorder each atom's neighbor list as it is first visited.
pub(super) fn traverse(
    mol: &Molecule,
    starts: &[usize],
    mut order_neighbors: impl FnMut(usize, &mut Vec<(usize, usize)>),
) -> Traversal {
    let n = mol.atoms().len();
    let mut visited = vec![false; n];
    let mut bond_used = vec![false; mol.bonds().len()];
    let mut tr = Traversal {
        preorder: Vec::with_capacity(n),
        children: vec![Vec::new(); n],
        opens: vec![Vec::new(); n],
        closes: vec![Vec::new(); n],
        ring_bonds: Vec::new(),
        starts: Vec::new(),
    };

    for &start in starts {
        if visited[start] {
            continue;
        }
        tr.starts.push(start);
        visited[start] = true;
        tr.preorder.push(start);
        let mut nb = mol.neighbors(start).to_vec();
        order_neighbors(start, &mut nb);
        let mut stack: Vec<(usize, Vec<(usize, usize)>, usize)> = vec![(start, nb, 0)];
        loop {
            let step = {
                let Some(top) = stack.last_mut() else { break };
                if top.2 < top.1.len() {
                    top.2 += 1;
                    Some((top.0, top.1[top.2 - 1]))
                } else {
                    None
                }
            };
            match step {
                Some((u, (v, bi))) => {
                    if bond_used[bi] {
                        continue;
                    }
                    bond_used[bi] = true;
                    if !visited[v] {
                        visited[v] = true;
                        tr.preorder.push(v);
                        tr.children[u].push((v, bi));
                        let mut nb = mol.neighbors(v).to_vec();
                        order_neighbors(v, &mut nb);
                        stack.push((v, nb, 0));
                    } else {
                        // back edge: v was emitted earlier, so it opens
                        let id = tr.ring_bonds.len();
                        tr.ring_bonds.push(bi);
                        tr.opens[v].push(id);
                        tr.closes[u].push(id);
                    }
                }
                None => {
                    stack.pop();
                }
            }
        }
    }
    tr
}

/// Bond symbol required between two atoms, if any. Unwritten bonds default
/// to aromatic when both atoms carry the aromatic flag, single otherwise, so
/// the writer must spell out anything that deviates from that rule.
fn bond_symbol(order: BondOrder, a: &Atom, b: &Atom) -> Option<char> {
    let both_aromatic = a.aromatic && b.aromatic;
    match order {
        BondOrder::Single => both_aromatic.then_some('-'),
        BondOrder::Aromatic => (!both_aromatic).then_some(':'),
        BondOrder::Double => Some('='),
        BondOrder::Triple => Some('#'),
    }
}

fn atom_token(atom: &Atom, out: &mut String) {
    let bracket = atom.formal_charge != 0
        || atom.explicit_hydrogens > 0
        || atom.element == Element::H;
    let symbol = atom.element.symbol();
    if !bracket {
        if atom.aromatic {
            out.extend(symbol.chars().map(|c| c.to_ascii_lowercase()));
        } else {
            out.push_str(symbol);
        }
        return;
    }
    out.push('[');
    if atom.aromatic {
        out.extend(symbol.chars().map(|c| c.to_ascii_lowercase()));
    } else {
        out.push_str(symbol);
    }
    match atom.explicit_hydrogens {
        0 => {}
        1 => out.push('H'),
        h => {
            out.push('H');
            out.push((b'0' + h) as char);
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("{c}")),
    }
    out.push(']');
}

fn push_ring_digit(out: &mut String, digit: u16) {
    if digit <= 9 {
        out.push((b'0' + digit as u8) as char);
    } else {
        out.push('%');
        out.push((b'0' + (digit / 10) as u8) as char);
        out.push((b'0' + (digit % 10) as u8) as char);
    }
}

/// Render a traversal as SMILES text. Components are joined with dots.
pub(super) fn emit(mol: &Molecule, tr: &Traversal) -> String {
    // Assign ring-closure digits in emission order. A digit freed by a
    // closure becomes reusable only after the same atom's openings are
    // served, so an atom never opens the digit it just closed.
    let mut digits: Vec<u16> = vec![0; tr.ring_bonds.len()];
    let mut pool: BinaryHeap<Reverse<u16>> = (1..=99).map(Reverse).collect();
    for &atom in &tr.preorder {
        let released: Vec<u16> = tr.closes[atom].iter().map(|&id| digits[id]).collect();
        for &id in &tr.opens[atom] {
            let Reverse(d) = pool
                .pop()
                .expect("more than 99 simultaneously open ring closures");
            digits[id] = d;
        }
        for d in released {
            pool.push(Reverse(d));
        }
    }

    enum Task {
        Atom {
            atom: usize,
            parent_bond: Option<usize>,
            parenthesized: bool,
        },
        CloseParen,
        Dot,
    }

    let mut out = String::new();
    let mut stack: Vec<Task> = Vec::new();
    for (ci, &start) in tr.starts.iter().enumerate() {
        if ci > 0 {
            stack.push(Task::Dot);
        }
        stack.push(Task::Atom {
            atom: start,
            parent_bond: None,
            parenthesized: false,
        });
    }
    stack.reverse();

    while let Some(task) = stack.pop() {
        match task {
            Task::Dot => out.push('.'),
            Task::CloseParen => out.push(')'),
            Task::Atom {
                atom,
                parent_bond,
                parenthesized,
            } => {
                if parenthesized {
                    out.push('(');
                }
                if let Some(bi) = parent_bond {
                    let bond = &mol.bonds()[bi];
                    if let Some(sym) =
                        bond_symbol(bond.order, &mol.atoms()[bond.a], &mol.atoms()[bond.b])
                    {
                        out.push(sym);
                    }
                }
                atom_token(&mol.atoms()[atom], &mut out);
                for &id in &tr.closes[atom] {
                    push_ring_digit(&mut out, digits[id]);
                }
                for &id in &tr.opens[atom] {
                    let bond = &mol.bonds()[tr.ring_bonds[id]];
                    if let Some(sym) =
                        bond_symbol(bond.order, &mol.atoms()[bond.a], &mol.atoms()[bond.b])
                    {
                        out.push(sym);
                    }
                    push_ring_digit(&mut out, digits[id]);
                }
                let kids = &tr.children[atom];
                for (k, &(child, bi)) in kids.iter().enumerate().rev() {
                    let wrapped = k + 1 < kids.len();
                    if wrapped {
                        stack.push(Task::CloseParen);
                    }
                    stack.push(Task::Atom {
                        atom: child,
                        parent_bond: Some(bi),
                        parenthesized: wrapped,
                    });
                }
            }
        }
    }
    out
}

/// Connected components in order of their smallest atom index.
pub(super) fn components(mol: &Molecule) -> Vec<Vec<usize>> {
    let n = mol.atoms().len();
    let mut seen = vec![false; n];
    let mut result = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        let mut comp = vec![root];
        seen[root] = true;
        let mut head = 0;
        while head < comp.len() {
            let u = comp[head];
            head += 1;
            for &(v, _) in mol.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                }
            }
        }
        result.push(comp);
    }
    result
}

/// Respell a molecule with a seeded-random DFS: random start atom per
/// component, random neighbor order at every expansion.
pub(super) fn random_rewrite(mol: &Molecule, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<usize> = components(mol)
        .iter()
        .map(|comp| comp[rng.random_range(0..comp.len())])
        .collect();
    let tr = traverse(mol, &starts, |_, nb| nb.shuffle(&mut rng));
    emit(mol, &tr)
}
