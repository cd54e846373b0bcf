//! Morgan circular fingerprints and Tanimoto similarity/distance.
//!
//! A fingerprint is the set of 64-bit hashes of every atom's circular
//! environment at radii 0..=r. Hashing is a fixed FNV-1a accumulation over a
//! canonical byte encoding, so feature values are bit-exact across platforms
//! and runs. The default similarity compares exact feature sets; an optional
//! folded fixed-width bitset mode is available for callers that want classic
//! bit-vector behavior.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::smiles::Molecule;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

/// FNV-1a over a byte stream. Field order and widths are fixed; changing
/// them changes every fingerprint, so treat this as a file format.
#[derive(Clone, Copy)]
struct StableHash(u64);

impl StableHash {
    fn new() -> Self {
        StableHash(FNV_OFFSET)
    }
    fn u8(mut self, v: u8) -> Self {
        self.0 ^= v as u64;
        self.0 = self.0.wrapping_mul(FNV_PRIME);
        self
    }
    fn u32(mut self, v: u32) -> Self {
        for b in v.to_le_bytes() {
            self = self.u8(b);
        }
        self
    }
    fn u64(mut self, v: u64) -> Self {
        for b in v.to_le_bytes() {
            self = self.u8(b);
        }
        self
    }
    fn finish(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FingerprintError {
    #[error("invalid fingerprint config: {0}")]
    InvalidConfig(String),
    #[error("fingerprints were produced with different configs and are not comparable")]
    ConfigMismatch,
}

/// Radius and folding parameters. Fingerprints are only comparable when
/// produced with identical configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FingerprintConfig {
    pub radius: u32,
    pub nbits: u32,
    pub use_folded: bool,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        FingerprintConfig {
            radius: 2,
            nbits: 2048,
            use_folded: false,
        }
    }
}

impl FingerprintConfig {
    pub fn validate(&self) -> Result<(), FingerprintError> {
        if !self.nbits.is_power_of_two() || !(64..=65536).contains(&self.nbits) {
            return Err(FingerprintError::InvalidConfig(format!(
                "nbits must be a power of two in [64, 65536], got {}",
                self.nbits
            )));
        }
        Ok(())
    }
}

/// A molecule's set of hashed circular-substructure features, plus the
/// folded bitset when the config asks for one.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    features: Vec<u64>,
    folded: Option<Vec<u64>>,
    config: FingerprintConfig,
}

impl Fingerprint {
    /// Sorted, deduplicated feature hashes.
    pub fn features(&self) -> &[u64] {
        &self.features
    }

    pub fn config(&self) -> &FingerprintConfig {
        &self.config
    }

    /// Folded bitset blocks (nbits/64 words), present iff `use_folded`.
    pub fn folded_bits(&self) -> Option<&[u64]> {
        self.folded.as_deref()
    }

    /// Build a fingerprint from raw feature hashes. Used by the cache reader
    /// and by tests that construct synthetic fingerprints.
    pub fn from_features(
        mut features: Vec<u64>,
        config: FingerprintConfig,
    ) -> Result<Fingerprint, FingerprintError> {
        config.validate()?;
        features.sort_unstable();
        features.dedup();
        let folded = config.use_folded.then(|| fold(&features, config.nbits));
        Ok(Fingerprint {
            features,
            folded,
            config,
        })
    }
}

fn fold(features: &[u64], nbits: u32) -> Vec<u64> {
    let mut blocks = vec![0u64; (nbits / 64) as usize];
    let mask = (nbits - 1) as u64;
    for &h in features {
        let bit = h & mask;
        blocks[(bit / 64) as usize] |= 1u64 << (bit % 64);
    }
    blocks
}

/// Initial atom invariant: element, degree, charge, explicit hydrogens,
/// aromatic flag, ring membership.
fn atom_invariant(mol: &Molecule, i: usize) -> u64 {
    let a = &mol.atoms()[i];
    StableHash::new()
        .u8(0x00)
        .u8(a.element.code())
        .u8(mol.degree(i) as u8)
        .u8(a.formal_charge as u8)
        .u8(a.explicit_hydrogens)
        .u8(u8::from(a.aromatic))
        .u8(u8::from(a.in_ring))
        .finish()
}

/// Morgan fingerprint of a molecule.
///
/// Per radius step every atom's invariant becomes a hash of (r, its own
/// invariant, the sorted list of (bond-order code, neighbor invariant)); the
/// feature set is the union over atoms and radii. Atoms with no neighbors
/// contribute only their radius-0 invariant — further iterations would
/// re-describe the same one-atom environment.
pub fn morgan_fingerprint(mol: &Molecule, cfg: &FingerprintConfig) -> Fingerprint {
    debug_assert!(cfg.validate().is_ok());
    let n = mol.atoms().len();
    let mut current: Vec<u64> = (0..n).map(|i| atom_invariant(mol, i)).collect();
    let mut features: Vec<u64> = current.clone();

    for r in 1..=cfg.radius {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut nbrs: Vec<(u8, u64)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(v, bi)| (mol.bonds()[bi].order.code(), current[v]))
                    .collect();
                nbrs.sort_unstable();
                let mut h = StableHash::new().u8(0x01).u32(r).u64(current[i]);
                for (code, inv) in nbrs {
                    h = h.u8(code).u64(inv);
                }
                h.finish()
            })
            .collect();
        for i in 0..n {
            if mol.degree(i) > 0 {
                features.push(next[i]);
            }
        }
        current = next;
    }

    features.sort_unstable();
    features.dedup();
    let folded = cfg.use_folded.then(|| fold(&features, cfg.nbits));
    Fingerprint {
        features,
        folded,
        config: *cfg,
    }
}

/// Intersection size of two sorted, deduplicated slices.
fn sorted_intersection(a: &[u64], b: &[u64]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

/// Tanimoto similarity over exact feature sets: |a ∩ b| / |a ∪ b|.
/// Identical sets (including two empty sets) score 1.
pub(crate) fn similarity_features(a: &[u64], b: &[u64]) -> f64 {
    let common = sorted_intersection(a, b);
    let union = a.len() + b.len() - common;
    if union == 0 {
        return 1.0;
    }
    common as f64 / union as f64
}

pub(crate) fn similarity_folded(a: &[u64], b: &[u64]) -> f64 {
    let mut common = 0u32;
    let mut union = 0u32;
    for (x, y) in a.iter().zip(b) {
        common += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        return 1.0;
    }
    common as f64 / union as f64
}

/// Dispatch on the (already verified) shared config.
pub(crate) fn similarity_unchecked(a: &Fingerprint, b: &Fingerprint) -> f64 {
    match (&a.folded, &b.folded) {
        (Some(x), Some(y)) if a.config.use_folded => similarity_folded(x, y),
        _ => similarity_features(&a.features, &b.features),
    }
}

/// Tanimoto similarity in [0, 1]. Errors when the two fingerprints were not
/// produced with the same config.
pub fn tanimoto_similarity(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.config != b.config {
        return Err(FingerprintError::ConfigMismatch);
    }
    Ok(similarity_unchecked(a, b))
}

/// Tanimoto distance: 1 − similarity.
pub fn tanimoto_distance(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    Ok(1.0 - tanimoto_similarity(a, b)?)
}

// ---------------------------------------------------------------------------
// Cache file: binary, little-endian.
// Header: magic "CDFP", version u16, radius u16, nbits u32, count u64.
// Records: { feature_count u32, features u64[] } in input order.
// ---------------------------------------------------------------------------

const CACHE_MAGIC: &[u8; 4] = b"CDFP";
const CACHE_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad cache file: {0}")]
    Format(String),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
}

pub fn write_fingerprint_cache<W: Write>(
    mut w: W,
    fingerprints: &[Fingerprint],
) -> Result<(), CacheError> {
    let Some(first) = fingerprints.first() else {
        return Err(CacheError::Format("no fingerprints to write".into()));
    };
    if fingerprints.iter().any(|f| f.config != first.config) {
        return Err(CacheError::Fingerprint(FingerprintError::ConfigMismatch));
    }
    let radius = u16::try_from(first.config.radius)
        .map_err(|_| CacheError::Format("radius too large for cache header".into()))?;
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&radius.to_le_bytes())?;
    w.write_all(&first.config.nbits.to_le_bytes())?;
    w.write_all(&(fingerprints.len() as u64).to_le_bytes())?;
    for fp in fingerprints {
        w.write_all(&(fp.features.len() as u32).to_le_bytes())?;
        for &f in &fp.features {
            w.write_all(&f.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_fingerprint_cache_file<P: AsRef<Path>>(
    path: P,
    fingerprints: &[Fingerprint],
) -> Result<(), CacheError> {
    write_fingerprint_cache(BufWriter::new(File::create(path)?), fingerprints)
}

pub fn read_fingerprint_cache<R: Read>(
    mut r: R,
    use_folded: bool,
) -> Result<Vec<Fingerprint>, CacheError> {
    fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], CacheError> {
        let mut buf = [0u8; N];
        r.read_exact(&mut buf)?;
        Ok(buf)
    }
    let magic: [u8; 4] = read_exact(&mut r)?;
    if &magic != CACHE_MAGIC {
        return Err(CacheError::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(read_exact(&mut r)?);
    if version != CACHE_VERSION {
        return Err(CacheError::Format(format!("unsupported version {version}")));
    }
    let radius = u16::from_le_bytes(read_exact(&mut r)?) as u32;
    let nbits = u32::from_le_bytes(read_exact(&mut r)?);
    let count = u64::from_le_bytes(read_exact(&mut r)?);
    let config = FingerprintConfig {
        radius,
        nbits,
        use_folded,
    };
    config.validate()?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut features = Vec::with_capacity(len);
        for _ in 0..len {
            features.push(u64::from_le_bytes(read_exact(&mut r)?));
        }
        out.push(Fingerprint::from_features(features, config)?);
    }
    Ok(out)
}

pub fn read_fingerprint_cache_file<P: AsRef<Path>>(
    path: P,
    use_folded: bool,
) -> Result<Vec<Fingerprint>, CacheError> {
    read_fingerprint_cache(BufReader::new(File::open(path)?), use_folded)
}
