//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by transport, sharing and protocol layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Peer endpoint has shut down or the channel is closed.
    #[error("channel closed: {0}")]
    ChannelClosed(String),

    /// Received a frame whose tag does not match the expected one.
    #[error("tag mismatch: expected `{expected}`, got `{got}` (protocol desynchronization)")]
    TagMismatch { expected: String, got: String },

    /// Blocking receive timed out (two-process mode).
    #[error("receive timed out waiting for tag `{0}`")]
    Timeout(String),

    /// Operands disagree on length, bit width or fixed-point scale.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Value cannot be encoded without overflowing the ring.
    #[error("fixed-point overflow: |{value}| does not fit in {bits}-bit ring with {frac} fractional bits")]
    FixedPointOverflow { value: f64, bits: u32, frac: u32 },

    /// SED accumulation left the range where signed comparison is valid.
    #[error("ring overflow: {0}")]
    RingOverflow(String),

    /// The dealer ran out of pre-generated correlated randomness.
    #[error("correlated randomness exhausted: {0}")]
    RandomnessExhausted(String),

    /// A Boolean-share payload contained a non-bit entry.
    #[error("non-bit payload in boolean share")]
    NonBit,

    /// Paillier plaintext outside [0, N).
    #[error("plaintext out of range for the AHE key")]
    PlaintextOutOfRange,

    /// Ciphertexts under different keys were combined, or the wrong key
    /// was used to decrypt.
    #[error("AHE key mismatch: {0}")]
    KeyMismatch(String),

    /// A per-row permutation is not a bijection on its row.
    #[error("permutation is not a bijection over {0} columns")]
    NotAPermutation(usize),

    /// Partition or selection was asked to operate on an empty row.
    #[error("empty row at index {0}")]
    EmptyRow(usize),

    /// Selection target outside [1, row length].
    #[error("selection target {target} out of range for row of length {len}")]
    TargetOutOfRange { target: usize, len: usize },

    /// No client passed the qualification threshold this round.
    #[error("no qualified clients; aggregation round skipped")]
    NoQualifiedClients,

    /// Invalid experiment or protocol configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed bytes while deserializing shares or ciphertexts.
    #[error("malformed data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
