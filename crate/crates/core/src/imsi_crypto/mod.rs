//! IMSI concealment on the air interface: ElGamal over a safe-prime
//! subgroup, block splitting for small moduli, and the authority-signed
//! identity request that carries the public parameters.

mod elgamal;
mod imsi;
mod prime;
mod signing;

use thiserror::Error;

pub use elgamal::{
    decrypt_imsi, encrypt_block, encrypt_imsi, gen_params, is_safe_prime, rfc3526_2048_prime,
    ElGamalParams, Encryptor, ImsiCiphertext, SecretKey, DEFAULT_BITS, MIN_BITS,
};
pub use imsi::{join_blocks, split_blocks, Imsi, IMSI_DIGITS};
pub use prime::{gen_safe_prime, is_probable_prime, mod_inverse_prime, MR_ROUNDS};
pub use signing::{
    signed_bytes, AuthorityKey, AuthorityPublicKey, SignedIdentityRequest, DEFAULT_FRESHNESS_WINDOW,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no safe prime of {bits} bits found within the attempt budget")]
    PrimeGenerationFailed { bits: u64 },
    #[error("plaintext block outside [1, p-1]")]
    BlockOutOfRange,
    #[error("ephemeral exponent outside [1, n-1]")]
    EphemeralOutOfRange,
    #[error("ciphertext component outside (0, p)")]
    CiphertextOutOfRange,
    #[error("r^s is not invertible modulo p")]
    NonInvertibleElement,
    #[error("modulus too small to carry one IMSI digit per block")]
    BlockTooLargeForModulus,
    #[error("invalid IMSI: {0}")]
    InvalidImsi(String),
    #[error("malformed block list: {0}")]
    MalformedBlocks(String),
    #[error("identity request signature does not verify")]
    BadSignature,
    #[error("identity request timestamp {timestamp} outside window at {now}")]
    StaleTimestamp { timestamp: u64, now: u64 },
}
