//! 1-out-of-M oblivious transfer and the correlated AND gate built on
//! it.
//!
//! OT is realized as an ideal functionality over the transport: a
//! dealer-style exchange in which the receiver's choices travel to the
//! sender and only the chosen messages travel back. Correctness and
//! round counts are exact; communication is charged at the closed-form
//! cost the comparison-tree analysis assigns to each layer, not at the
//! wire byte count of this realization.

use crate::error::{Error, Result};
use crate::sharing::BooleanShare;
use crate::transport::{Endpoint, PartyId};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

/// Shape of one OT batch. All instances share the choice count and
/// payload width; the whole batch runs as one logical round.
#[derive(Debug, Clone, Copy)]
pub struct OtParams<'a> {
    /// M: number of messages per instance.
    pub choices: usize,
    /// Bits per message; at most 8.
    pub payload_bits: u32,
    /// Accounting tag the batch charges to.
    pub tag: &'a str,
    /// Formula-level bits charged per instance (0 when a wrapping
    /// protocol does its own accounting).
    pub charge_bits_per_instance: u64,
}

/// This party's role in an OT batch.
pub enum OtInput<'a> {
    /// Flat message table: instance i's messages occupy
    /// `[i * M, (i + 1) * M)`, one byte each (low `payload_bits` used).
    Sender(&'a [u8]),
    /// One choice index per instance.
    Receiver(&'a [u16]),
}

fn pack_low_bits(values: &[u8], bits: u32) -> Vec<u8> {
    let total = values.len() * bits as usize;
    let mut out = vec![0u8; total.div_ceil(8)];
    for (i, &v) in values.iter().enumerate() {
        for b in 0..bits {
            if v >> b & 1 == 1 {
                let pos = i * bits as usize + b as usize;
                out[pos / 8] |= 1 << (pos % 8);
            }
        }
    }
    out
}

fn unpack_low_bits(bytes: &[u8], bits: u32, n: usize) -> Vec<u8> {
    (0..n)
        .map(|i| {
            let mut v = 0u8;
            for b in 0..bits {
                let pos = i * bits as usize + b as usize;
                if bytes[pos / 8] >> (pos % 8) & 1 == 1 {
                    v |= 1 << b;
                }
            }
            v
        })
        .collect()
}

/// Run one batched 1-of-M OT. The receiver obtains its chosen message
/// per instance (`Some(outputs)`); the sender obtains `None`. The batch
/// consumes exactly one round.
pub fn ot_batch(ep: &mut Endpoint, input: OtInput, params: OtParams) -> Result<Option<Vec<u8>>> {
    if params.payload_bits == 0 || params.payload_bits > 8 {
        return Err(Error::InvalidConfig(format!(
            "OT payload width {} out of range",
            params.payload_bits
        )));
    }
    let tag = params.tag;
    match input {
        OtInput::Receiver(choices) => {
            for &c in choices {
                if c as usize >= params.choices {
                    return Err(Error::ShapeMismatch(format!(
                        "choice {c} out of range for M={}",
                        params.choices
                    )));
                }
            }
            ep.charge_bits(tag, choices.len() as u64 * params.charge_bits_per_instance);
            ep.ideal_step(tag, |ep| {
                let mut wire = Vec::with_capacity(choices.len() * 2);
                for &c in choices {
                    wire.extend_from_slice(&c.to_le_bytes());
                }
                ep.send(tag, &wire)?;
                let reply = ep.receive(tag)?;
                Ok(Some(unpack_low_bits(
                    &reply,
                    params.payload_bits,
                    choices.len(),
                )))
            })
        }
        OtInput::Sender(messages) => {
            if messages.len() % params.choices != 0 {
                return Err(Error::ShapeMismatch(
                    "sender message table is not a multiple of M".into(),
                ));
            }
            let instances = messages.len() / params.choices;
            ep.charge_bits(tag, instances as u64 * params.charge_bits_per_instance);
            ep.ideal_step(tag, |ep| {
                let wire = ep.receive(tag)?;
                if wire.len() != instances * 2 {
                    return Err(Error::ShapeMismatch(format!(
                        "receiver sent {} choices, sender holds {} instances",
                        wire.len() / 2,
                        instances
                    )));
                }
                let mut selected = Vec::with_capacity(instances);
                for i in 0..instances {
                    let c = u16::from_le_bytes([wire[2 * i], wire[2 * i + 1]]) as usize;
                    if c >= params.choices {
                        return Err(Error::ShapeMismatch(format!(
                            "peer choice {c} out of range for M={}",
                            params.choices
                        )));
                    }
                    selected.push(messages[i * params.choices + c]);
                }
                ep.send(tag, &pack_low_bits(&selected, params.payload_bits))?;
                Ok(None)
            })
        }
    }
}

/// Correlated AND over Boolean shares: per instance computes fresh
/// sharings of e = lt AND eq_right and f = eq_left AND eq_right. Party 0
/// acts as OT sender; the two ANDs of each instance are two 1-of-4 OT
/// instances batched into a single round. The closed-form charge is 6
/// bits per instance (the comparison-tree cost attributes the per-chunk
/// "+6" term to this layer).
pub fn correlated_and(
    ep: &mut Endpoint,
    lt: &BooleanShare,
    eq_left: &BooleanShare,
    eq_right: &BooleanShare,
    rng: &mut ChaCha20Rng,
    tag: &str,
) -> Result<(BooleanShare, BooleanShare)> {
    let n = lt.len();
    if eq_left.len() != n || eq_right.len() != n {
        return Err(Error::ShapeMismatch(
            "correlated AND inputs differ in length".into(),
        ));
    }
    let party = lt.party;
    ep.charge_bits(tag, 6 * n as u64);
    let params = OtParams {
        choices: 4,
        payload_bits: 1,
        tag,
        charge_bits_per_instance: 0,
    };
    match party {
        PartyId::P0 => {
            let mut e0 = Vec::with_capacity(n);
            let mut f0 = Vec::with_capacity(n);
            let mut table = Vec::with_capacity(2 * n * 4);
            for i in 0..n {
                let re: bool = rng.gen();
                let rf: bool = rng.gen();
                e0.push(re);
                f0.push(rf);
                // instance 2i: e-AND on (lt, eq_right)
                for k in 0..4u8 {
                    let a = k & 1 == 1; // peer's lt share
                    let b = k >> 1 & 1 == 1; // peer's eq_right share
                    let val = re ^ ((lt.bits[i] ^ a) & (eq_right.bits[i] ^ b));
                    table.push(val as u8);
                }
                // instance 2i+1: f-AND on (eq_left, eq_right)
                for k in 0..4u8 {
                    let a = k & 1 == 1;
                    let b = k >> 1 & 1 == 1;
                    let val = rf ^ ((eq_left.bits[i] ^ a) & (eq_right.bits[i] ^ b));
                    table.push(val as u8);
                }
            }
            ot_batch(ep, OtInput::Sender(&table), params)?;
            Ok((
                BooleanShare { party, bits: e0 },
                BooleanShare { party, bits: f0 },
            ))
        }
        PartyId::P1 => {
            let mut choices = Vec::with_capacity(2 * n);
            for i in 0..n {
                choices.push(lt.bits[i] as u16 | (eq_right.bits[i] as u16) << 1);
                choices.push(eq_left.bits[i] as u16 | (eq_right.bits[i] as u16) << 1);
            }
            let out = ot_batch(ep, OtInput::Receiver(&choices), params)?
                .expect("receiver obtains outputs");
            let mut e1 = Vec::with_capacity(n);
            let mut f1 = Vec::with_capacity(n);
            for i in 0..n {
                e1.push(out[2 * i] == 1);
                f1.push(out[2 * i + 1] == 1);
            }
            Ok((
                BooleanShare { party, bits: e1 },
                BooleanShare { party, bits: f1 },
            ))
        }
    }
}
