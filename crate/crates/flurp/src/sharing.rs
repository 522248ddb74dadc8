//! Additive secret sharing over Z_{2^l}: splitting, revealing, local
//! addition, Beaver-triple multiplication, Boolean sharing and B2A
//! conversion.
//!
//! Correlated randomness (Beaver triples, B2A correlations) comes from a
//! seeded local dealer: both parties derive identical sequences from the
//! per-session seed, which is the honest-but-curious setup assumption.
//! Dealer output is excluded from protocol accounting.

use crate::error::{Error, Result};
use crate::ring::BitWidth;
use crate::transport::{Endpoint, PartyId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// One party's half of an additive sharing of a ring-element vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArithmeticShare {
    pub party: PartyId,
    pub width: BitWidth,
    /// Fixed-point fractional bits carried by the shared values.
    pub scale: u32,
    pub payload: Vec<u64>,
}

impl ArithmeticShare {
    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    /// Trivial sharing of publicly known values: party 0 holds the
    /// values, party 1 holds zeros.
    pub fn of_public(party: PartyId, width: BitWidth, scale: u32, values: &[u64]) -> Self {
        let payload = match party {
            PartyId::P0 => values.iter().map(|&v| width.reduce(v)).collect(),
            PartyId::P1 => vec![0; values.len()],
        };
        ArithmeticShare {
            party,
            width,
            scale,
            payload,
        }
    }

    pub fn zeros(party: PartyId, width: BitWidth, scale: u32, len: usize) -> Self {
        ArithmeticShare {
            party,
            width,
            scale,
            payload: vec![0; len],
        }
    }

    fn check_compatible(&self, other: &ArithmeticShare) -> Result<()> {
        if self.party != other.party {
            return Err(Error::ShapeMismatch("shares belong to different parties".into()));
        }
        if self.width != other.width {
            return Err(Error::ShapeMismatch("ring widths differ".into()));
        }
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }

    /// Serialize: little-endian fixed-width ring elements behind a
    /// header carrying (l, f, length).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.len() * 8);
        out.extend_from_slice(&(self.width.bits() as u16).to_le_bytes());
        out.extend_from_slice(&(self.scale as u16).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&encode_ring_vec(self.width, &self.payload));
        out
    }

    pub fn from_bytes(party: PartyId, bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Malformed("share header truncated".into()));
        }
        let bits = u16::from_le_bytes([bytes[0], bytes[1]]) as u32;
        let scale = u16::from_le_bytes([bytes[2], bytes[3]]) as u32;
        let len = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let width = BitWidth::from_bits(bits)?;
        let payload = decode_ring_vec(width, &bytes[12..])?;
        if payload.len() != len {
            return Err(Error::Malformed(format!(
                "share payload length {} does not match header {}",
                payload.len(),
                len
            )));
        }
        Ok(ArithmeticShare {
            party,
            width,
            scale,
            payload,
        })
    }
}

/// One party's half of an XOR sharing of a bit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanShare {
    pub party: PartyId,
    pub bits: Vec<bool>,
}

impl BooleanShare {
    pub fn len(&self) -> usize {
        self.bits.len()
    }
}

/// One party's half of a Beaver triple batch (c = a * b elementwise at
/// reveal level). Consumed by value: a triple cannot be used twice.
#[derive(Debug, Clone)]
pub struct BeaverTriple {
    pub party: PartyId,
    pub width: BitWidth,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub c: Vec<u64>,
}

impl BeaverTriple {
    pub fn len(&self) -> usize {
        self.a.len()
    }
}

/// Pack ring elements as little-endian words of the ring's byte width.
pub fn encode_ring_vec(width: BitWidth, values: &[u64]) -> Vec<u8> {
    let bytes = (width.bits() / 8) as usize;
    let mut out = Vec::with_capacity(values.len() * bytes);
    for &v in values {
        out.extend_from_slice(&v.to_le_bytes()[..bytes]);
    }
    out
}

pub fn decode_ring_vec(width: BitWidth, bytes: &[u8]) -> Result<Vec<u64>> {
    let w = (width.bits() / 8) as usize;
    if bytes.len() % w != 0 {
        return Err(Error::Malformed(format!(
            "byte length {} not a multiple of element width {}",
            bytes.len(),
            w
        )));
    }
    let mut out = Vec::with_capacity(bytes.len() / w);
    for chunk in bytes.chunks_exact(w) {
        let mut buf = [0u8; 8];
        buf[..w].copy_from_slice(chunk);
        out.push(u64::from_le_bytes(buf));
    }
    Ok(out)
}

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

/// Split a secret vector into two additive shares. Share 0 is a pure
/// function of the seed (the pre-negotiated-seed optimization: only
/// share 1 ever needs transmitting).
pub fn split(
    secret: &[u64],
    width: BitWidth,
    scale: u32,
    seed: u64,
) -> (ArithmeticShare, ArithmeticShare) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut p0 = Vec::with_capacity(secret.len());
    let mut p1 = Vec::with_capacity(secret.len());
    for &s in secret {
        let r = width.reduce(rng.gen::<u64>());
        p0.push(r);
        p1.push(width.sub(s, r));
    }
    (
        ArithmeticShare {
            party: PartyId::P0,
            width,
            scale,
            payload: p0,
        },
        ArithmeticShare {
            party: PartyId::P1,
            width,
            scale,
            payload: p1,
        },
    )
}

/// Reconstruct the secret from both halves.
pub fn reveal(s0: &ArithmeticShare, s1: &ArithmeticShare) -> Result<Vec<u64>> {
    if s0.width != s1.width || s0.len() != s1.len() || s0.scale != s1.scale {
        return Err(Error::ShapeMismatch(
            "reveal requires matching length, width and scale".into(),
        ));
    }
    Ok(s0
        .payload
        .iter()
        .zip(&s1.payload)
        .map(|(&a, &b)| s0.width.add(a, b))
        .collect())
}

/// Local share addition; communication-free.
pub fn add(x: &ArithmeticShare, y: &ArithmeticShare) -> Result<ArithmeticShare> {
    x.check_compatible(y)?;
    if x.scale != y.scale {
        return Err(Error::ShapeMismatch("scales differ in add".into()));
    }
    Ok(ArithmeticShare {
        party: x.party,
        width: x.width,
        scale: x.scale,
        payload: x
            .payload
            .iter()
            .zip(&y.payload)
            .map(|(&a, &b)| x.width.add(a, b))
            .collect(),
    })
}

/// Local share subtraction; communication-free.
pub fn sub(x: &ArithmeticShare, y: &ArithmeticShare) -> Result<ArithmeticShare> {
    x.check_compatible(y)?;
    if x.scale != y.scale {
        return Err(Error::ShapeMismatch("scales differ in sub".into()));
    }
    Ok(ArithmeticShare {
        party: x.party,
        width: x.width,
        scale: x.scale,
        payload: x
            .payload
            .iter()
            .zip(&y.payload)
            .map(|(&a, &b)| x.width.sub(a, b))
            .collect(),
    })
}

/// Scale a share by a public ring constant; local.
pub fn scale_by_public(x: &ArithmeticShare, k: u64) -> ArithmeticShare {
    ArithmeticShare {
        party: x.party,
        width: x.width,
        scale: x.scale,
        payload: x.payload.iter().map(|&v| x.width.mul(v, k)).collect(),
    }
}

/// Beaver multiplication: one round of mutual exchange of the masked
/// values e = x - a and f = y - b, then local combination. The triple is
/// consumed by value, so reuse is rejected at compile time. Output scale
/// is the sum of the input scales (fixed-point products accumulate
/// fractional bits).
pub fn mul(
    ep: &mut Endpoint,
    x: &ArithmeticShare,
    y: &ArithmeticShare,
    triple: BeaverTriple,
) -> Result<ArithmeticShare> {
    x.check_compatible(y)?;
    if triple.len() != x.len() || triple.width != x.width || triple.party != x.party {
        return Err(Error::ShapeMismatch(
            "triple does not match operand shape".into(),
        ));
    }
    let w = x.width;
    let n = x.len();
    let mut masked = Vec::with_capacity(2 * n);
    for i in 0..n {
        masked.push(w.sub(x.payload[i], triple.a[i]));
    }
    for i in 0..n {
        masked.push(w.sub(y.payload[i], triple.b[i]));
    }
    let theirs = ep.exchange("mul", &encode_ring_vec(w, &masked))?;
    let theirs = decode_ring_vec(w, &theirs)?;
    if theirs.len() != 2 * n {
        return Err(Error::ShapeMismatch("peer masked vector length".into()));
    }
    ep.charge_bits("mul", 2 * n as u64 * w.bits() as u64);

    let mut payload = Vec::with_capacity(n);
    for i in 0..n {
        let e = w.add(masked[i], theirs[i]);
        let f = w.add(masked[n + i], theirs[n + i]);
        let mut z = w.add(
            w.mul(e, triple.b[i]),
            w.add(w.mul(f, triple.a[i]), triple.c[i]),
        );
        if x.party == PartyId::P0 {
            z = w.add(z, w.mul(e, f));
        }
        payload.push(z);
    }
    Ok(ArithmeticShare {
        party: x.party,
        width: w,
        scale: x.scale + y.scale,
        payload,
    })
}

/// Reveal an arithmetic share to both parties in one round.
pub fn reveal_to_both(ep: &mut Endpoint, share: &ArithmeticShare) -> Result<Vec<u64>> {
    let theirs = ep.exchange("reveal", &encode_ring_vec(share.width, &share.payload))?;
    let theirs = decode_ring_vec(share.width, &theirs)?;
    if theirs.len() != share.len() {
        return Err(Error::ShapeMismatch("peer reveal length".into()));
    }
    ep.charge_bits(
        "reveal",
        2 * share.len() as u64 * share.width.bits() as u64,
    );
    Ok(share
        .payload
        .iter()
        .zip(&theirs)
        .map(|(&a, &b)| share.width.add(a, b))
        .collect())
}

/// Reveal a Boolean share to both parties in one round.
pub fn reveal_bool_to_both(ep: &mut Endpoint, share: &BooleanShare) -> Result<Vec<bool>> {
    let theirs = ep.exchange("reveal_b", &pack_bits(&share.bits))?;
    let theirs = unpack_bits(&theirs, share.len());
    ep.charge_bits("reveal_b", 2 * share.len() as u64);
    Ok(share
        .bits
        .iter()
        .zip(&theirs)
        .map(|(&a, &b)| a ^ b)
        .collect())
}

fn gen_triple_batch(
    rng: &mut ChaCha20Rng,
    width: BitWidth,
    count: usize,
) -> (BeaverTriple, BeaverTriple) {
    let mut halves = [
        BeaverTriple {
            party: PartyId::P0,
            width,
            a: Vec::with_capacity(count),
            b: Vec::with_capacity(count),
            c: Vec::with_capacity(count),
        },
        BeaverTriple {
            party: PartyId::P1,
            width,
            a: Vec::with_capacity(count),
            b: Vec::with_capacity(count),
            c: Vec::with_capacity(count),
        },
    ];
    for _ in 0..count {
        let a = width.reduce(rng.gen::<u64>());
        let b = width.reduce(rng.gen::<u64>());
        let c = width.mul(a, b);
        for (val, pick) in [(a, 0), (b, 1), (c, 2)] {
            let r = width.reduce(rng.gen::<u64>());
            let (v0, v1) = (r, width.sub(val, r));
            let dst0 = &mut halves[0];
            match pick {
                0 => dst0.a.push(v0),
                1 => dst0.b.push(v0),
                _ => dst0.c.push(v0),
            }
            let dst1 = &mut halves[1];
            match pick {
                0 => dst1.a.push(v1),
                1 => dst1.b.push(v1),
                _ => dst1.c.push(v1),
            }
        }
    }
    let [h0, h1] = halves;
    (h0, h1)
}

/// Trusted-dealer triple generation: both halves of `count` triples.
pub fn deal_triples(count: usize, seed: u64, width: BitWidth) -> (BeaverTriple, BeaverTriple) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    gen_triple_batch(&mut rng, width, count)
}

/// Streaming per-party triple dealer. Both parties construct one from
/// the same session seed and consume in lockstep; the halves stay
/// consistent because generation is deterministic.
pub struct TripleDealer {
    rng: ChaCha20Rng,
    width: BitWidth,
    party: PartyId,
    consumed: u64,
}

impl TripleDealer {
    pub fn new(seed: u64, width: BitWidth, party: PartyId) -> Self {
        TripleDealer {
            rng: ChaCha20Rng::seed_from_u64(seed),
            width,
            party,
            consumed: 0,
        }
    }

    pub fn take(&mut self, count: usize) -> BeaverTriple {
        self.consumed += count as u64;
        let (h0, h1) = gen_triple_batch(&mut self.rng, self.width, count);
        match self.party {
            PartyId::P0 => h0,
            PartyId::P1 => h1,
        }
    }

    /// Number of scalar triples handed out so far (the session's
    /// share-multiplication count).
    pub fn consumed(&self) -> u64 {
        self.consumed
    }
}

/// Per-instance correlated randomness for B2A: a random bit r held as
/// both a Boolean and an arithmetic sharing.
pub struct B2aCorrelation {
    pub party: PartyId,
    pub width: BitWidth,
    pub bool_half: Vec<bool>,
    pub arith_half: Vec<u64>,
}

/// Streaming B2A correlation dealer, mirroring [`TripleDealer`].
pub struct B2aDealer {
    rng: ChaCha20Rng,
    width: BitWidth,
    party: PartyId,
}

impl B2aDealer {
    pub fn new(seed: u64, width: BitWidth, party: PartyId) -> Self {
        B2aDealer {
            rng: ChaCha20Rng::seed_from_u64(seed),
            width,
            party,
        }
    }

    pub fn take(&mut self, count: usize) -> B2aCorrelation {
        let mut bool_half = Vec::with_capacity(count);
        let mut arith_half = Vec::with_capacity(count);
        for _ in 0..count {
            let r = self.rng.gen::<bool>();
            let b0 = self.rng.gen::<bool>();
            let b1 = r ^ b0;
            let a0 = self.width.reduce(self.rng.gen::<u64>());
            let a1 = self.width.sub(r as u64, a0);
            match self.party {
                PartyId::P0 => {
                    bool_half.push(b0);
                    arith_half.push(a0);
                }
                PartyId::P1 => {
                    bool_half.push(b1);
                    arith_half.push(a1);
                }
            }
        }
        B2aCorrelation {
            party: self.party,
            width: self.width,
            bool_half,
            arith_half,
        }
    }
}

/// Convert Boolean shares of bits into arithmetic shares of the same
/// 0/1 values. One round: the parties open the masked bits c = x XOR r
/// and locally set <x> = c + (1 - 2c) * <r>.
pub fn b2a(
    ep: &mut Endpoint,
    x: &BooleanShare,
    corr: &B2aCorrelation,
    scale: u32,
) -> Result<ArithmeticShare> {
    if corr.bool_half.len() != x.len() || corr.party != x.party {
        return Err(Error::ShapeMismatch(
            "B2A correlation does not match input".into(),
        ));
    }
    let w = corr.width;
    let n = x.len();
    let masked: Vec<bool> = x
        .bits
        .iter()
        .zip(&corr.bool_half)
        .map(|(&a, &r)| a ^ r)
        .collect();
    let theirs = ep.exchange("b2a", &pack_bits(&masked))?;
    let theirs = unpack_bits(&theirs, n);
    ep.charge_bits("b2a", 2 * n as u64);

    let mut payload = Vec::with_capacity(n);
    for i in 0..n {
        let c = masked[i] ^ theirs[i];
        // x = c XOR r = c + r - 2cr; the constant c is added by party 0.
        let sign = if c { w.neg(1) } else { 1 };
        let mut v = w.mul(sign, corr.arith_half[i]);
        if x.party == PartyId::P0 && c {
            v = w.add(v, 1);
        }
        payload.push(v);
    }
    Ok(ArithmeticShare {
        party: x.party,
        width: w,
        scale,
        payload,
    })
}
