//! Paillier additive homomorphic encryption, used by the shared matrix
//! shuffle.
//!
//! Keys default to a 1024-bit modulus (2048-bit ciphertexts); 512-bit
//! keys are a fast test mode. The generator is fixed to g = N + 1 so
//! encryption is (1 + mN) * r^N mod N^2 and decryption uses
//! mu = phi(N)^{-1} mod N.

use crate::error::{Error, Result};
use crate::ring::BitWidth;
use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Public half of a Paillier keypair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AhePublicKey {
    pub n: BigUint,
    pub n_squared: BigUint,
    /// Distinguishes ciphertexts of different keys within a session.
    pub key_id: u64,
}

/// Secret half of a Paillier keypair.
#[derive(Debug, Clone)]
pub struct AheSecretKey {
    lambda: BigUint,
    mu: BigUint,
    key_id: u64,
}

#[derive(Debug, Clone)]
pub struct AheKeypair {
    pub public: AhePublicKey,
    pub secret: AheSecretKey,
}

fn is_probable_prime(candidate: &BigUint, rng: &mut ChaCha20Rng, rounds: u32) -> bool {
    const SMALL_PRIMES: [u32; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    for p in SMALL_PRIMES {
        let p = BigUint::from(p);
        if candidate == &p {
            return true;
        }
        if (candidate % &p).is_zero() {
            return false;
        }
    }
    // Miller-Rabin with random bases
    let one = BigUint::one();
    let two = &one + &one;
    let n_minus_1 = candidate - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, candidate);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, candidate);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gen_prime(bits: u64, rng: &mut ChaCha20Rng) -> BigUint {
    loop {
        let mut candidate = rng.gen_biguint(bits);
        // force the top two bits so p*q has exactly 2*bits bits, and make odd
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, rng, 40) {
            return candidate;
        }
    }
}

/// A Paillier ciphertext bound to the key that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AheCiphertext {
    pub value: BigUint,
    pub key_id: u64,
}

/// Generate a keypair with a modulus of exactly `security_bits` bits.
/// 1024 is the default; 512 is the fast test mode.
pub fn keygen(security_bits: u64, rng: &mut ChaCha20Rng) -> Result<AheKeypair> {
    if security_bits != 1024 && security_bits != 512 {
        return Err(Error::InvalidConfig(format!(
            "AHE modulus must be 1024 or 512 bits, got {security_bits}"
        )));
    }
    loop {
        let p = gen_prime(security_bits / 2, rng);
        let q = gen_prime(security_bits / 2, rng);
        if p == q {
            continue;
        }
        let n = &p * &q;
        let one = BigUint::one();
        let phi = (&p - &one) * (&q - &one);
        if n.gcd(&phi) != one {
            continue;
        }
        let mu = match phi.modinv(&n) {
            Some(mu) => mu,
            None => continue,
        };
        let key_id = {
            let digits = n.to_u64_digits();
            digits.first().copied().unwrap_or(0) ^ (security_bits << 56)
        };
        let n_squared = &n * &n;
        return Ok(AheKeypair {
            public: AhePublicKey {
                n,
                n_squared,
                key_id,
            },
            secret: AheSecretKey {
                lambda: phi,
                mu,
                key_id,
            },
        });
    }
}

/// Seeded key generation for reproducible tests.
pub fn keygen_seeded(security_bits: u64, seed: u64) -> Result<AheKeypair> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    keygen(security_bits, &mut rng)
}

impl AhePublicKey {
    /// Encrypt a plaintext in [0, N). Randomized: two encryptions of the
    /// same value differ with overwhelming probability.
    pub fn encrypt(&self, m: &BigUint, rng: &mut ChaCha20Rng) -> Result<AheCiphertext> {
        if m >= &self.n {
            return Err(Error::PlaintextOutOfRange);
        }
        let one = BigUint::one();
        let r = loop {
            let r = rng.gen_biguint_range(&one, &self.n);
            if r.gcd(&self.n) == one {
                break r;
            }
        };
        // (1 + mN) * r^N mod N^2
        let g_m = (one + m * &self.n) % &self.n_squared;
        let r_n = r.modpow(&self.n, &self.n_squared);
        Ok(AheCiphertext {
            value: (g_m * r_n) % &self.n_squared,
            key_id: self.key_id,
        })
    }

    /// Homomorphic ciphertext-ciphertext addition.
    pub fn ct_add(&self, c1: &AheCiphertext, c2: &AheCiphertext) -> Result<AheCiphertext> {
        if c1.key_id != self.key_id || c2.key_id != self.key_id {
            return Err(Error::KeyMismatch(
                "ct_add operands under different keys".into(),
            ));
        }
        Ok(AheCiphertext {
            value: (&c1.value * &c2.value) % &self.n_squared,
            key_id: self.key_id,
        })
    }

    /// Homomorphic ciphertext-plaintext addition.
    pub fn pt_add(&self, c: &AheCiphertext, m: &BigUint) -> Result<AheCiphertext> {
        if c.key_id != self.key_id {
            return Err(Error::KeyMismatch("pt_add under a different key".into()));
        }
        if m >= &self.n {
            return Err(Error::PlaintextOutOfRange);
        }
        let g_m = (BigUint::one() + m * &self.n) % &self.n_squared;
        Ok(AheCiphertext {
            value: (&c.value * g_m) % &self.n_squared,
            key_id: self.key_id,
        })
    }

    /// Homomorphic subtraction of a plaintext, embedded as N - m.
    pub fn pt_sub(&self, c: &AheCiphertext, m: &BigUint) -> Result<AheCiphertext> {
        if m >= &self.n {
            return Err(Error::PlaintextOutOfRange);
        }
        if m.is_zero() {
            return self.pt_add(c, m);
        }
        let neg = &self.n - m;
        self.pt_add(c, &neg)
    }
}

impl AheSecretKey {
    pub fn decrypt(&self, pk: &AhePublicKey, c: &AheCiphertext) -> Result<BigUint> {
        if c.key_id != self.key_id || pk.key_id != self.key_id {
            return Err(Error::KeyMismatch("decrypting under the wrong key".into()));
        }
        let x = c.value.modpow(&self.lambda, &pk.n_squared);
        let l = (x - BigUint::one()) / &pk.n;
        Ok((l * &self.mu) % &pk.n)
    }

    /// Decrypt and reduce into the ring, for ciphertexts known to carry
    /// ring elements (possibly offset by multiples of 2^l from masking).
    pub fn decrypt_ring(
        &self,
        pk: &AhePublicKey,
        c: &AheCiphertext,
        width: BitWidth,
    ) -> Result<u64> {
        let m = self.decrypt(pk, c)?;
        let mask = BigUint::from(width.mask());
        let reduced = m & mask;
        Ok(reduced.to_u64_digits().first().copied().unwrap_or(0))
    }
}

/// Serialize a ciphertext as a 4-byte big-endian length prefix followed
/// by the big-endian magnitude.
pub fn ciphertext_to_bytes(c: &AheCiphertext, out: &mut Vec<u8>) {
    let bytes = c.value.to_bytes_be();
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
}

pub fn ciphertexts_to_bytes(cts: &[AheCiphertext]) -> Vec<u8> {
    let mut out = Vec::new();
    for c in cts {
        ciphertext_to_bytes(c, &mut out);
    }
    out
}

pub fn ciphertexts_from_bytes(bytes: &[u8], key_id: u64) -> Result<Vec<AheCiphertext>> {
    let mut out = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        if pos + 4 > bytes.len() {
            return Err(Error::Malformed("ciphertext length prefix truncated".into()));
        }
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + len > bytes.len() {
            return Err(Error::Malformed("ciphertext body truncated".into()));
        }
        out.push(AheCiphertext {
            value: BigUint::from_bytes_be(&bytes[pos..pos + len]),
            key_id,
        });
        pos += len;
    }
    Ok(out)
}
