//! Versioned binary checkpoints of the policy and discriminator.
//!
//! Layout (little-endian): magic `CDCK`, version u16, alphabet (count u16,
//! chars u32), T u32, order u16, policy entry count u64 then per entry
//! { context length u16, context bytes, logits f64 * alphabet }, a presence
//! byte for the discriminator, and when present { n u16, bias f64, entry
//! count u64, per entry { length u16, bytes, weight f64 } }. Maps are
//! written in sorted key order, so identical models produce identical bytes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::discriminator::Discriminator;
use super::policy::{Alphabet, Policy};
use super::SeqGenError;

const MAGIC: &[u8; 4] = b"CDCK";
const VERSION: u16 = 1;

pub fn write_checkpoint<W: Write>(
    mut w: W,
    policy: &Policy,
    discriminator: Option<&Discriminator>,
) -> Result<(), SeqGenError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;

    let alphabet = policy.alphabet();
    w.write_all(&(alphabet.len() as u16).to_le_bytes())?;
    for &c in alphabet.symbols() {
        w.write_all(&(c as u32).to_le_bytes())?;
    }
    w.write_all(&(policy.seq_len() as u32).to_le_bytes())?;
    w.write_all(&(policy.order() as u16).to_le_bytes())?;

    let mut contexts: Vec<&Vec<u8>> = policy.logits().keys().collect();
    contexts.sort();
    w.write_all(&(contexts.len() as u64).to_le_bytes())?;
    for ctx in contexts {
        w.write_all(&(ctx.len() as u16).to_le_bytes())?;
        w.write_all(ctx)?;
        for &l in &policy.logits()[ctx] {
            w.write_all(&l.to_le_bytes())?;
        }
    }

    match discriminator {
        None => w.write_all(&[0u8])?,
        Some(disc) => {
            w.write_all(&[1u8])?;
            w.write_all(&(disc.n() as u16).to_le_bytes())?;
            w.write_all(&disc.bias().to_le_bytes())?;
            let mut grams: Vec<&Vec<u8>> = disc.weights().keys().collect();
            grams.sort();
            w.write_all(&(grams.len() as u64).to_le_bytes())?;
            for gram in grams {
                w.write_all(&(gram.len() as u16).to_le_bytes())?;
                w.write_all(gram)?;
                w.write_all(&disc.weights()[gram].to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn write_checkpoint_file<P: AsRef<Path>>(
    path: P,
    policy: &Policy,
    discriminator: Option<&Discriminator>,
) -> Result<(), SeqGenError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, policy, discriminator)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(Policy, Option<Discriminator>), SeqGenError> {
    fn bytes<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], SeqGenError> {
        let mut buf = [0u8; N];
        r.read_exact(&mut buf)?;
        Ok(buf)
    }
    fn bad(msg: &str) -> SeqGenError {
        SeqGenError::BadCheckpoint(msg.to_string())
    }

    let magic: [u8; 4] = bytes(&mut r)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u16::from_le_bytes(bytes(&mut r)?);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }

    let alpha_len = u16::from_le_bytes(bytes(&mut r)?) as usize;
    let mut symbols = Vec::with_capacity(alpha_len);
    for _ in 0..alpha_len {
        let code = u32::from_le_bytes(bytes(&mut r)?);
        symbols.push(char::from_u32(code).ok_or_else(|| bad("bad alphabet char"))?);
    }
    let alphabet = Alphabet::new(symbols)
        .map_err(|e| bad(&format!("bad alphabet: {e}")))?;
    let seq_len = u32::from_le_bytes(bytes(&mut r)?) as usize;
    let order = u16::from_le_bytes(bytes(&mut r)?) as usize;

    let n_contexts = u64::from_le_bytes(bytes(&mut r)?);
    let mut logits: HashMap<Vec<u8>, Vec<f64>> = HashMap::with_capacity(n_contexts as usize);
    for _ in 0..n_contexts {
        let len = u16::from_le_bytes(bytes(&mut r)?) as usize;
        let mut ctx = vec![0u8; len];
        r.read_exact(&mut ctx)?;
        let mut row = Vec::with_capacity(alpha_len);
        for _ in 0..alpha_len {
            row.push(f64::from_le_bytes(bytes(&mut r)?));
        }
        logits.insert(ctx, row);
    }
    let pad = alphabet.pad_index();
    let policy = Policy::from_parts(alphabet, order, seq_len, logits);

    let present: [u8; 1] = bytes(&mut r)?;
    let discriminator = match present[0] {
        0 => None,
        1 => {
            let n = u16::from_le_bytes(bytes(&mut r)?) as usize;
            let bias = f64::from_le_bytes(bytes(&mut r)?);
            let n_grams = u64::from_le_bytes(bytes(&mut r)?);
            let mut weights: HashMap<Vec<u8>, f64> = HashMap::with_capacity(n_grams as usize);
            for _ in 0..n_grams {
                let len = u16::from_le_bytes(bytes(&mut r)?) as usize;
                let mut gram = vec![0u8; len];
                r.read_exact(&mut gram)?;
                weights.insert(gram, f64::from_le_bytes(bytes(&mut r)?));
            }
            Some(Discriminator::from_parts(n, pad, weights, bias))
        }
        other => return Err(bad(&format!("bad discriminator flag {other}"))),
    };
    Ok((policy, discriminator))
}

pub fn read_checkpoint_file<P: AsRef<Path>>(
    path: P,
) -> Result<(Policy, Option<Discriminator>), SeqGenError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::super::policy::PAD;
    use super::*;

    #[test]
    fn round_trip_policy_and_discriminator() {
        let alphabet = Alphabet::new(vec!['A', 'B', PAD]).unwrap();
        let mut policy = Policy::new(alphabet.clone(), 2, 6);
        policy
            .logits_mut()
            .insert(vec![0, 1], vec![0.5, -1.25, 0.0]);
        policy.logits_mut().insert(vec![], vec![2.0, 0.0, -3.5]);
        let mut disc = Discriminator::from_parts(
            2,
            alphabet.pad_index(),
            HashMap::from([(vec![0u8, 0], 0.75), (vec![1u8, 0], -0.5)]),
            0.125,
        );
        discriminator_smoke(&mut disc);

        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &policy, Some(&disc)).unwrap();
        let (p2, d2) = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(policy, p2);
        assert_eq!(Some(disc), d2);

        let mut buf2 = Vec::new();
        write_checkpoint(&mut buf2, &policy, None).unwrap();
        let (_, d_none) = read_checkpoint(&buf2[..]).unwrap();
        assert!(d_none.is_none());
    }

    fn discriminator_smoke(disc: &mut Discriminator) {
        // touch the scoring path so the fixture holds nontrivial state
        let _ = disc.score(&[0, 0, 1]);
    }

    #[test]
    fn checkpoint_bytes_are_deterministic() {
        let alphabet = Alphabet::new(vec!['A', 'B', PAD]).unwrap();
        let mut policy = Policy::new(alphabet, 2, 4);
        for ctx in [vec![0u8], vec![1u8], vec![0u8, 0], vec![]] {
            policy.logits_mut().insert(ctx, vec![1.0, 2.0, 3.0]);
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_checkpoint(&mut a, &policy, None).unwrap();
        write_checkpoint(&mut b, &policy, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_corrupt_data() {
        assert!(read_checkpoint(&b"JUNKJUNK"[..]).is_err());
        let alphabet = Alphabet::new(vec!['A', PAD]).unwrap();
        let policy = Policy::new(alphabet, 1, 2);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &policy, None).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(read_checkpoint(&buf[..]).is_err());
    }
}
