//! Arithmetic in GF(2^d) for d ∈ {8, 16, 32, 64, 128}.
//!
//! Elements are polynomials over GF(2) packed into the low `d` bits of a
//! `u128`, bit `i` holding the coefficient of `x^i`. Each width uses one fixed
//! irreducible reduction polynomial:
//!
//! | d   | polynomial                        | low terms constant |
//! |-----|-----------------------------------|--------------------|
//! | 8   | x^8 + x^4 + x^3 + x + 1           | [`POLY_TAIL_8`]    |
//! | 16  | x^16 + x^5 + x^3 + x + 1          | [`POLY_TAIL_16`]   |
//! | 32  | x^32 + x^7 + x^3 + x^2 + 1        | [`POLY_TAIL_32`]   |
//! | 64  | x^64 + x^4 + x^3 + x + 1          | [`POLY_TAIL_64`]   |
//! | 128 | x^128 + x^7 + x^2 + x + 1         | [`POLY_TAIL_128`]  |
//!
//! The "tail" constants hold every term below `x^d`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const POLY_TAIL_8: u128 = 0x1B;
pub const POLY_TAIL_16: u128 = 0x2B;
pub const POLY_TAIL_32: u128 = 0x8D;
pub const POLY_TAIL_64: u128 = 0x1B;
pub const POLY_TAIL_128: u128 = 0x87;

/// Supported field widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum FieldWidth {
    W8,
    W16,
    W32,
    W64,
    W128,
}

impl FieldWidth {
    pub const ALL: [FieldWidth; 5] = [
        FieldWidth::W8,
        FieldWidth::W16,
        FieldWidth::W32,
        FieldWidth::W64,
        FieldWidth::W128,
    ];

    pub fn new(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(FieldWidth::W8),
            16 => Ok(FieldWidth::W16),
            32 => Ok(FieldWidth::W32),
            64 => Ok(FieldWidth::W64),
            128 => Ok(FieldWidth::W128),
            _ => Err(Error::config(format!(
                "unsupported field width {bits}; expected one of 8, 16, 32, 64, 128"
            ))),
        }
    }

    /// Smallest supported width holding `bits` bits.
    pub fn covering(bits: u32) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|w| w.bits() >= bits)
            .ok_or_else(|| Error::config(format!("no field width covers {bits} bits")))
    }

    pub const fn bits(self) -> u32 {
        match self {
            FieldWidth::W8 => 8,
            FieldWidth::W16 => 16,
            FieldWidth::W32 => 32,
            FieldWidth::W64 => 64,
            FieldWidth::W128 => 128,
        }
    }

    pub const fn tail(self) -> u128 {
        match self {
            FieldWidth::W8 => POLY_TAIL_8,
            FieldWidth::W16 => POLY_TAIL_16,
            FieldWidth::W32 => POLY_TAIL_32,
            FieldWidth::W64 => POLY_TAIL_64,
            FieldWidth::W128 => POLY_TAIL_128,
        }
    }

    /// All-ones mask of the element width.
    pub const fn mask(self) -> u128 {
        match self {
            FieldWidth::W128 => u128::MAX,
            w => (1u128 << w.bits()) - 1,
        }
    }
}

impl TryFrom<u32> for FieldWidth {
    type Error = Error;
    fn try_from(bits: u32) -> Result<Self> {
        FieldWidth::new(bits)
    }
}

impl From<FieldWidth> for u32 {
    fn from(w: FieldWidth) -> u32 {
        w.bits()
    }
}

/// Carry-less product of two 64-bit polynomials.
#[inline]
pub fn clmul64(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: feature presence checked at runtime just above.
            return unsafe { clmul64_pclmul(a, b) };
        }
    }
    clmul64_soft(a, b)
}

/// Portable shift-and-xor carry-less multiply.
#[inline]
pub fn clmul64_soft(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut r = 0u128;
    for i in 0..64 {
        let bit = ((b >> i) & 1) as u128;
        r ^= (a << i) & bit.wrapping_neg();
    }
    r
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq")]
unsafe fn clmul64_pclmul(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::{_mm_clmulepi64_si128, _mm_cvtsi64_si128};
    let va = _mm_cvtsi64_si128(a as i64);
    let vb = _mm_cvtsi64_si128(b as i64);
    let r = _mm_clmulepi64_si128(va, vb, 0x00);
    std::mem::transmute::<_, u128>(r)
}

/// Carry-less product of two 128-bit polynomials as (high, low) halves.
#[inline]
fn clmul128(a: u128, b: u128) -> (u128, u128) {
    let (a0, a1) = (a as u64, (a >> 64) as u64);
    let (b0, b1) = (b as u64, (b >> 64) as u64);
    let lo = clmul64(a0, b0);
    let hi = clmul64(a1, b1);
    // Karatsuba middle term.
    let mid = clmul64(a0 ^ a1, b0 ^ b1) ^ lo ^ hi;
    (hi ^ (mid >> 64), lo ^ (mid << 64))
}

/// XOR of `v << j` over the set bits `j` of `tail`, truncated to 128 bits.
#[inline]
fn shift_xor(v: u128, tail: u128) -> u128 {
    let mut acc = 0u128;
    let mut t = tail;
    while t != 0 {
        let j = t.trailing_zeros();
        acc ^= v << j;
        t &= t - 1;
    }
    acc
}

/// The bits of `v << j` that fall off the top of a `u128`, over set bits of `tail`.
#[inline]
fn shift_xor_overflow(v: u128, tail: u128) -> u128 {
    let mut acc = 0u128;
    let mut t = tail & !1;
    while t != 0 {
        let j = t.trailing_zeros();
        acc ^= v >> (128 - j);
        t &= t - 1;
    }
    acc
}

/// Product of `a` and `b` in GF(2^d). Inputs must be below `2^d`.
#[inline]
pub fn gf_mul(a: u128, b: u128, width: FieldWidth) -> u128 {
    debug_assert!(a & !width.mask() == 0 && b & !width.mask() == 0);
    match width {
        FieldWidth::W128 => {
            let (hi, lo) = clmul128(a, b);
            let tail = width.tail();
            let carry = shift_xor_overflow(hi, tail);
            lo ^ shift_xor(hi, tail) ^ shift_xor(carry, tail)
        }
        _ => {
            let d = width.bits();
            let mut p = clmul64(a as u64, b as u64);
            let tail = width.tail();
            loop {
                let hi = p >> d;
                if hi == 0 {
                    break p;
                }
                p = (p & width.mask()) ^ shift_xor(hi, tail);
            }
        }
    }
}

/// Checked [`gf_mul`] taking the width in bits.
pub fn gf_mul_checked(a: u128, b: u128, bits: u32) -> Result<u128> {
    let width = FieldWidth::new(bits)?;
    if a & !width.mask() != 0 || b & !width.mask() != 0 {
        return Err(Error::input(format!("operand exceeds {bits} bits")));
    }
    Ok(gf_mul(a, b, width))
}
