//! Two-server secure aggregation for federated learning.
//!
//! The engine detects and excludes Byzantine-poisoned model updates
//! without revealing any update in plaintext. Clients upload additive
//! shares of their updates together with shares of a low-dimensional
//! representation (windowed l-infinity norms); the two servers compute a
//! shared distance matrix over those representations, obliviously
//! shuffle and select row medians, count proximity neighbors and reveal
//! only the per-client qualification bits before weighted aggregation.
//!
//! Module map:
//! * [`transport`] - paired channels with byte/round accounting
//! * [`sharing`] - additive secret sharing over Z_{2^l}
//! * [`ahe`] - Paillier additive homomorphic encryption
//! * [`ot`] - 1-of-M oblivious transfer and correlated AND
//! * [`compare`] - packed comparison trees over arithmetic shares
//! * [`shuffle`] - shared matrix row shuffle under two permutations
//! * [`select`] - batched multi-row quickselect on shares
//! * [`defense`] - the aggregation round and its plaintext reference
//! * [`attacks`] - Byzantine attack implementations
//! * [`fltoy`] - desk-scale federated learning harness

pub mod ahe;
pub mod compare;
pub mod ot;
pub mod error;
pub mod ring;
pub mod sharing;
pub mod transport;

pub use error::{Error, Result};
