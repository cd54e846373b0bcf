//! Canonical atom ranking by iterated extended-connectivity refinement.
//!
//! Atoms start from (element, charge, degree, aromatic, explicit-H) classes
//! and are repeatedly re-ranked by their sorted (bond order, neighbor rank)
//! multisets until the partition stabilizes. Remaining ties are broken by
//! promoting the lowest-index tied atom to its own class and re-refining;
//! tied classes at that point are refinement-indistinguishable, so for
//! molecular graphs the choice does not affect the emitted string.

use super::{write, Molecule};

/// Dense ranks (0..k-1) of a key vector: equal keys share a rank, ranks are
/// ordered by key.
fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0usize; keys.len()];
    let mut rank = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            rank += 1;
        }
        ranks[idx[w]] = rank;
    }
    ranks
}

fn initial_ranks(mol: &Molecule) -> Vec<usize> {
    let keys: Vec<(u8, i8, usize, bool, u8)> = mol
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.element.code(),
                a.formal_charge,
                mol.degree(i),
                a.aromatic,
                a.explicit_hydrogens,
            )
        })
        .collect();
    dense_ranks(&keys)
}

/// Refine ranks to a fixed point of neighborhood re-ranking.
fn refine(mol: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let keys: Vec<(usize, Vec<(u8, usize)>)> = mol
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let mut nbrs: Vec<(u8, usize)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(v, bi)| (mol.bonds()[bi].order.code(), ranks[v]))
                    .collect();
                nbrs.sort_unstable();
                (ranks[i], nbrs)
            })
            .collect();
        let next = dense_ranks(&keys);
        if next == ranks {
            return ranks;
        }
        ranks = next;
    }
}

/// Discrete canonical ranks: refinement plus lowest-index tie promotion.
pub(super) fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    let n = mol.atoms().len();
    let mut ranks = refine(mol, initial_ranks(mol));
    loop {
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let Some(tied_rank) = (0..n).find(|&r| counts[r] > 1) else {
            return ranks;
        };
        let chosen = ranks.iter().position(|&r| r == tied_rank).unwrap();
        let keys: Vec<usize> = ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| r * 2 + usize::from(i == chosen))
            .collect();
        ranks = refine(mol, dense_ranks(&keys));
    }
}

/// Canonical SMILES: rank-guided DFS from the lowest-ranked atom of each
/// component, components ordered by their lowest rank.
pub(super) fn canonicalize(mol: &Molecule) -> String {
    let ranks = canonical_ranks(mol);
    let mut comps = write::components(mol);
    comps.sort_by_key(|comp| comp.iter().map(|&i| ranks[i]).min().unwrap());
    let starts: Vec<usize> = comps
        .iter()
        .map(|comp| *comp.iter().min_by_key(|&&i| ranks[i]).unwrap())
        .collect();
    let tr = write::traverse(mol, &starts, |_, nb| {
        nb.sort_by_key(|&(v, _)| ranks[v]);
    });
    write::emit(mol, &tr)
}

/// Per-atom labels after hash-based refinement to a stable partition,
/// sorted. Equal signatures identify isomorphic graphs (up to the usual
/// refinement blind spots on highly regular graphs, which do not occur in
/// chemical data).
pub(super) fn refinement_signature(mol: &Molecule) -> Vec<u64> {
    const SEED: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    fn mix(mut h: u64, bytes: &[u8]) -> u64 {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
        h
    }

    let mut labels: Vec<u64> = mol
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut h = mix(SEED, &[a.element.code()]);
            h = mix(h, &[a.formal_charge as u8]);
            h = mix(h, &(mol.degree(i) as u32).to_le_bytes());
            h = mix(h, &[u8::from(a.aromatic), a.explicit_hydrogens]);
            h
        })
        .collect();

    let mut partition = dense_ranks(&labels);
    loop {
        let next_labels: Vec<u64> = (0..labels.len())
            .map(|i| {
                let mut nbrs: Vec<(u8, u64)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(v, bi)| (mol.bonds()[bi].order.code(), labels[v]))
                    .collect();
                nbrs.sort_unstable();
                let mut h = mix(SEED, &labels[i].to_le_bytes());
                for (code, l) in nbrs {
                    h = mix(h, &[code]);
                    h = mix(h, &l.to_le_bytes());
                }
                h
            })
            .collect();
        let next_partition = dense_ranks(&next_labels);
        labels = next_labels;
        if next_partition == partition {
            break;
        }
        partition = next_partition;
    }
    labels.sort_unstable();
    labels
}

#[cfg(test)]
mod tests {
    use super::super::{canonicalize, graph_signature, parse};

    #[test]
    fn spelling_invariance() {
        let a = canonicalize(&parse("OCC").unwrap());
        let b = canonicalize(&parse("CCO").unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn ring_spelling_invariance() {
        let a = canonicalize(&parse("c1ccccc1").unwrap());
        let b = canonicalize(&parse("c1ccc(cc1)").unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn idempotent() {
        for src in ["CC(C)CO", "c1ccc2ccccc2c1", "CC(=O)[O-].[NH4+]", "CCOC(=O)c1ccncc1"] {
            let once = canonicalize(&parse(src).unwrap());
            let twice = canonicalize(&parse(&once).unwrap());
            assert_eq!(once, twice, "not idempotent for {src}");
        }
    }

    #[test]
    fn canonical_output_reparses_isomorphic() {
        for src in ["CC(C)CO", "c1ccncc1", "C1CC2CCCC2C1", "N#Cc1ccccc1Cl"] {
            let mol = parse(src).unwrap();
            let canon = canonicalize(&mol);
            let re = parse(&canon).unwrap_or_else(|e| panic!("{src} -> {canon}: {e}"));
            assert_eq!(graph_signature(&mol), graph_signature(&re));
        }
    }

    #[test]
    fn signatures_distinguish_non_isomorphic() {
        let a = graph_signature(&parse("CCO").unwrap());
        let b = graph_signature(&parse("CCN").unwrap());
        assert_ne!(a, b);
        let a = graph_signature(&parse("CC=O").unwrap());
        let b = graph_signature(&parse("CCO").unwrap());
        assert_ne!(a, b);
    }
}
