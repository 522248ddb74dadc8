//! Arithmetic in the ring of integers modulo 2^l and the fixed-point
//! embedding of real values into it.
//!
//! Ring elements are stored as `u64` regardless of the configured bit
//! width; every operation reduces modulo 2^l by masking. Negative reals
//! are embedded in two's complement: -x maps to 2^l - round(x * 2^f).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ring bit width. The cost analysis assumes 32; 64 gives headroom for
/// distance accumulation over long vectors and for weighted aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitWidth {
    /// Z_{2^32}
    B32,
    /// Z_{2^64}
    B64,
}

impl BitWidth {
    pub fn bits(self) -> u32 {
        match self {
            BitWidth::B32 => 32,
            BitWidth::B64 => 64,
        }
    }

    /// Bitmask selecting the low l bits.
    pub fn mask(self) -> u64 {
        match self {
            BitWidth::B32 => u32::MAX as u64,
            BitWidth::B64 => u64::MAX,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            32 => Ok(BitWidth::B32),
            64 => Ok(BitWidth::B64),
            other => Err(Error::InvalidConfig(format!(
                "unsupported ring width {other}, expected 32 or 64"
            ))),
        }
    }

    #[inline]
    pub fn reduce(self, v: u64) -> u64 {
        v & self.mask()
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask()
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask()
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        a.wrapping_mul(b) & self.mask()
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        0u64.wrapping_sub(a) & self.mask()
    }

    /// Most significant bit of an l-bit value.
    #[inline]
    pub fn msb(self, a: u64) -> bool {
        (a >> (self.bits() - 1)) & 1 == 1
    }

    /// Centered lift: interpret an l-bit value as a signed integer in
    /// [-2^{l-1}, 2^{l-1}).
    #[inline]
    pub fn to_signed(self, a: u64) -> i64 {
        match self {
            BitWidth::B32 => a as u32 as i32 as i64,
            BitWidth::B64 => a as i64,
        }
    }

    /// Signed strict less-than on l-bit ring values.
    #[inline]
    pub fn signed_lt(self, a: u64, b: u64) -> bool {
        self.to_signed(a) < self.to_signed(b)
    }
}

/// Fixed-point codec: f fractional bits inside an l-bit two's-complement
/// word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointCodec {
    pub width: BitWidth,
    pub frac_bits: u32,
}

impl FixedPointCodec {
    pub fn new(width: BitWidth, frac_bits: u32) -> Self {
        debug_assert!(frac_bits < width.bits());
        FixedPointCodec { width, frac_bits }
    }

    /// Encode a real value. Fails when |x| >= 2^{l-f-1}, i.e. when the
    /// magnitude would spill into the sign region.
    pub fn encode(&self, x: f64) -> Result<u64> {
        let scaled = (x * (1u64 << self.frac_bits) as f64).round();
        let limit = 2f64.powi((self.width.bits() - 1) as i32);
        if !scaled.is_finite() || scaled.abs() >= limit {
            return Err(Error::FixedPointOverflow {
                value: x,
                bits: self.width.bits(),
                frac: self.frac_bits,
            });
        }
        let magnitude = scaled.abs() as u64;
        Ok(if scaled < 0.0 {
            self.width.neg(magnitude)
        } else {
            magnitude
        })
    }

    /// Decode a ring element back to a real value via the centered lift.
    pub fn decode(&self, r: u64) -> f64 {
        self.width.to_signed(r) as f64 / (1u64 << self.frac_bits) as f64
    }

    pub fn encode_vec(&self, xs: &[f64]) -> Result<Vec<u64>> {
        xs.iter().map(|&x| self.encode(x)).collect()
    }

    pub fn decode_vec(&self, rs: &[u64]) -> Vec<f64> {
        rs.iter().map(|&r| self.decode(r)).collect()
    }
}
