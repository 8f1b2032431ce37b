//! The affine hash family `h_{a,b}(x)` = top `m` bits of `a·x + b` in GF(2^D).
//!
//! Rows narrower than the field are MSB-aligned before multiplication, so bit
//! `i` of a row (1 = most significant) is bit `i` of the field element. With
//! `a ≠ 0` the affine map is a bijection on the field, which makes hashed
//! uniform rows exactly uniform on `m` bits whenever the row width equals `D`.
//! Excluding `a = 0` leaves an almost-universal family: distinct inputs collide
//! with probability `(2^(D−m) − 1)/(2^D − 1) ≤ 2^−m`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Row;
use crate::gf2::{gf_mul, FieldWidth};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "HashParamsRepr", into = "HashParamsRepr")]
pub struct HashParams {
    a: u128,
    b: u128,
    m: u32,
    field: FieldWidth,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HashParamsRepr {
    #[serde(with = "crate::serde_hex")]
    a: u128,
    #[serde(with = "crate::serde_hex")]
    b: u128,
    m: u32,
    d: FieldWidth,
}

impl TryFrom<HashParamsRepr> for HashParams {
    type Error = Error;
    fn try_from(r: HashParamsRepr) -> Result<Self> {
        HashParams::new(r.a, r.b, r.m, r.d)
    }
}

impl From<HashParams> for HashParamsRepr {
    fn from(h: HashParams) -> Self {
        HashParamsRepr {
            a: h.a,
            b: h.b,
            m: h.m,
            d: h.field,
        }
    }
}

impl HashParams {
    pub fn new(a: u128, b: u128, m: u32, field: FieldWidth) -> Result<Self> {
        if m == 0 || m > field.bits() {
            return Err(Error::config(format!(
                "hash output width m={m} must satisfy 1 <= m <= {}",
                field.bits()
            )));
        }
        if a == 0 {
            return Err(Error::config("hash multiplier a must be nonzero"));
        }
        if a & !field.mask() != 0 || b & !field.mask() != 0 {
            return Err(Error::config(format!(
                "hash coefficients exceed {} bits",
                field.bits()
            )));
        }
        Ok(HashParams { a, b, m, field })
    }

    /// `a = 1, b = 0`: the top `m` bits of the (MSB-aligned) input.
    pub fn identity(m: u32, field: FieldWidth) -> Result<Self> {
        Self::new(1, 0, m, field)
    }

    pub fn a(&self) -> u128 {
        self.a
    }

    pub fn b(&self) -> u128 {
        self.b
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn field(&self) -> FieldWidth {
        self.field
    }

    /// Whether rows of `width` bits can be hashed.
    pub fn accepts(&self, width: u32) -> bool {
        width >= 1 && width <= self.field.bits()
    }

    /// Hash of a raw value of `width` bits; no width check.
    #[inline]
    pub fn eval(&self, x: u128, width: u32) -> u128 {
        let d = self.field.bits();
        let aligned = x << (d - width);
        let y = gf_mul(self.a, aligned, self.field) ^ self.b;
        y >> (d - self.m)
    }

    /// Image of a row-space bit (shift `s` from the LSB) under the linear
    /// part of the hash, i.e. without `b`.
    pub(crate) fn linear_image(&self, s: u32, width: u32) -> u128 {
        let d = self.field.bits();
        gf_mul(self.a, 1u128 << (s + d - width), self.field) >> (d - self.m)
    }
}

/// Top `m` bits of `a·x + b` for a row.
pub fn hash_eval(params: &HashParams, x: &Row) -> Result<u128> {
    if !params.accepts(x.width()) {
        return Err(Error::input(format!(
            "row width {} exceeds hash field width {}",
            x.width(),
            params.field.bits()
        )));
    }
    Ok(params.eval(x.value(), x.width()))
}

/// Draws `a` uniform on nonzero field elements and `b` uniform on all of them.
pub fn sample_hash<R: Rng + ?Sized>(rng: &mut R, field: FieldWidth, m: u32) -> Result<HashParams> {
    if m == 0 || m > field.bits() {
        return Err(Error::config(format!(
            "hash output width m={m} must satisfy 1 <= m <= {}",
            field.bits()
        )));
    }
    let mask = field.mask();
    let a = loop {
        let a = rng.gen::<u128>() & mask;
        if a != 0 {
            break a;
        }
    };
    let b = rng.gen::<u128>() & mask;
    HashParams::new(a, b, m, field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(v: u128, w: u32) -> Row {
        Row::new(v, w).unwrap()
    }

    #[test]
    fn identity_takes_top_bits() {
        let h = HashParams::identity(4, FieldWidth::W8).unwrap();
        assert_eq!(hash_eval(&h, &row(0xAB, 8)).unwrap(), 0xA);
        let h = HashParams::new(1, 0xFF, 8, FieldWidth::W8).unwrap();
        assert_eq!(hash_eval(&h, &row(0x0F, 8)).unwrap(), 0xF0);
    }

    #[test]
    fn narrow_rows_are_msb_aligned() {
        let h = HashParams::identity(4, FieldWidth::W8).unwrap();
        for x in 0..16u128 {
            assert_eq!(hash_eval(&h, &row(x, 4)).unwrap(), x);
        }
    }

    #[test]
    fn wide_rows_rejected() {
        let h = HashParams::identity(4, FieldWidth::W8).unwrap();
        assert!(matches!(hash_eval(&h, &row(1, 9)), Err(Error::Input(_))));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(HashParams::new(0, 0, 4, FieldWidth::W8).is_err());
        assert!(HashParams::new(1, 0, 9, FieldWidth::W8).is_err());
        assert!(HashParams::new(1, 0, 0, FieldWidth::W8).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_hash(&mut rng, FieldWidth::W16, 17),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let h1 = sample_hash(&mut ChaCha8Rng::seed_from_u64(42), FieldWidth::W64, 32).unwrap();
        let h2 = sample_hash(&mut ChaCha8Rng::seed_from_u64(42), FieldWidth::W64, 32).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn uniform_input_maps_to_uniform_output_gf8() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..64 {
            for m in [1u32, 4, 8] {
                let h = sample_hash(&mut rng, FieldWidth::W8, m).unwrap();
                let mut hist = vec![0u32; 1 << m];
                for x in 0..256u128 {
                    hist[h.eval(x, 8) as usize] += 1;
                }
                assert!(hist.iter().all(|&c| c == 256 >> m));
            }
        }
    }

    #[test]
    fn collision_rate_near_two_to_minus_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, y) = (0x1234u128, 0xBEEFu128);
        let trials = 200_000;
        let mut hits = 0u32;
        for _ in 0..trials {
            let h = sample_hash(&mut rng, FieldWidth::W16, 8).unwrap();
            if h.eval(x, 16) == h.eval(y, 16) {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        let target = 2f64.powi(-8);
        assert!(rate >= target * 0.8 && rate <= target * 1.2, "rate {rate}");
    }

    #[test]
    fn multiplier_never_zero_and_uniform() {
        // chi-square over 16 buckets of the top nibble of a; a = 0 is excluded
        // so bucket 0 has one fewer value out of 2^16 - 1, negligible here.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        let mut hist = [0f64; 16];
        for _ in 0..draws {
            let h = sample_hash(&mut rng, FieldWidth::W16, 8).unwrap();
            assert_ne!(h.a(), 0);
            hist[(h.a() >> 12) as usize] += 1.0;
        }
        let expect = draws as f64 / 16.0;
        let chi2: f64 = hist.iter().map(|c| (c - expect).powi(2) / expect).sum();
        // 99th percentile of chi-square with 15 degrees of freedom.
        assert!(chi2 < 30.578, "chi2 {chi2}");
    }

    #[test]
    fn params_roundtrip_as_hex_json() {
        let h = HashParams::new(0x1F, 0xA0, 4, FieldWidth::W8).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"a":"0x1f","b":"0xa0","m":4,"d":8}"#);
        let back: HashParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<HashParams>(r#"{"a":"0x0","b":"0x0","m":4,"d":8}"#).is_err());
    }
}
