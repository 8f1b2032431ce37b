//! The von Neumann key extractor and the extract-and-encrypt pair.
//!
//! Rows `1..n/2` feed the extractor, rows `n/2+1..n−1` are held out and
//! row `n` is the message. Odd `n` is rejected.

use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::{Error, Result};

/// An `width`-bit string; the first bit is the most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Key {
    #[serde(with = "crate::serde_hex")]
    pub value: u128,
    pub width: u32,
}

fn check_split(x: &Dataset, m: u32) -> Result<()> {
    if x.len() % 2 == 1 {
        return Err(Error::input(format!("extraction needs an even n, got {}", x.len())));
    }
    if m == 0 || m > 128 {
        return Err(Error::parameter(format!("key width m={m} outside 1..=128")));
    }
    Ok(())
}

/// Scans pairs `(x_1, x_2), (x_3, x_4), …` of the first `n/2` rows and emits
/// 0 for lsb pattern `(0, 1)` and 1 for `(1, 0)`. Returns the first `m`
/// emitted bits, or `None` (⊥) when fewer than `m` were emitted.
pub fn von_neumann_extract(x: &Dataset, m: u32) -> Result<Option<Key>> {
    check_split(x, m)?;
    let source = &x.rows()[..x.len() / 2];
    let mut value = 0u128;
    let mut got = 0;
    for pair in source.chunks_exact(2) {
        let (a, b) = (pair[0] & 1, pair[1] & 1);
        if a != b {
            value = (value << 1) | a;
            got += 1;
            if got == m {
                return Ok(Some(Key { value, width: m }));
            }
        }
    }
    Ok(None)
}

/// `(s, s ⊕ x_n)` with `x_n` truncated to its low `m` bits; `(⊥, ⊥)` when
/// extraction fails.
pub fn ext_enc_mech(x: &Dataset, m: u32) -> Result<(Option<Key>, Option<Key>)> {
    check_split(x, m)?;
    if x.width() < m {
        return Err(Error::input(format!(
            "{}-bit rows cannot carry an {m}-bit message",
            x.width()
        )));
    }
    let Some(s) = von_neumann_extract(x, m)? else {
        return Ok((None, None));
    };
    let mask = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
    let message = x.rows()[x.len() - 1] & mask;
    Ok((
        Some(s),
        Some(Key {
            value: s.value ^ message,
            width: m,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_dataset, Distribution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// lsb stream 0,1,1,0,1,1,0,0 in the extraction half of a 16-row dataset.
    fn fixture() -> Dataset {
        let mut rows = vec![0, 1, 1, 0, 1, 1, 0, 0];
        rows.extend([0u128; 8]);
        Dataset::new(4, rows).unwrap()
    }

    #[test]
    fn extractor_examples() {
        let x = fixture();
        assert_eq!(von_neumann_extract(&x, 2).unwrap(), Some(Key { value: 0b01, width: 2 }));
        assert_eq!(von_neumann_extract(&x, 3).unwrap(), None);
        let zeros = Dataset::new(4, vec![0; 16]).unwrap();
        assert_eq!(von_neumann_extract(&zeros, 1).unwrap(), None);
        assert!(von_neumann_extract(&Dataset::new(4, vec![0; 5]).unwrap(), 1).is_err());
    }

    #[test]
    fn encryption_xors_low_bits() {
        // key 1010 from lsb pairs (1,0),(0,1),(1,0),(0,1); x_n low bits 0110
        let mut rows = vec![1, 0, 0, 1, 1, 0, 0, 1];
        rows.extend([0u128; 7]);
        rows.push(0xF6);
        let x = Dataset::new(8, rows).unwrap();
        let (s, c) = ext_enc_mech(&x, 4).unwrap();
        assert_eq!(s.unwrap().value, 0b1010);
        assert_eq!(c.unwrap().value, 0b1100);
        assert_eq!(ext_enc_mech(&fixture(), 3).unwrap(), (None, None));
        assert!(ext_enc_mech(&fixture(), 8).is_err());
    }

    #[test]
    fn extraction_rarely_fails() {
        let dist = Distribution::uniform(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let x = sample_dataset(&dist, 1024, &mut rng).unwrap();
            assert!(von_neumann_extract(&x, 64).unwrap().is_some());
        }
    }
}
