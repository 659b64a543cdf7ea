//! Authority signature over the public ElGamal parameters and a timestamp.
//! Ed25519 over `p ‖ α ‖ β ‖ timestamp`, each big integer fixed-width
//! big-endian at the modulus byte length.

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{CryptoError, ElGamalParams};
use crate::wire::biguint_to_fixed;

pub const DEFAULT_FRESHNESS_WINDOW: u64 = 30;

/// Signing half, held by the trusted authority.
#[derive(Clone)]
pub struct AuthorityKey {
    key: SigningKey,
}

impl std::fmt::Debug for AuthorityKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("AuthorityKey").field(&self.public()).finish()
    }
}

/// Verification half, provisioned to every UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuthorityPublicKey(VerifyingKey);

impl AuthorityPublicKey {
    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Result<Self, CryptoError> {
        VerifyingKey::from_bytes(bytes)
            .map(Self)
            .map_err(|_| CryptoError::InvalidParams("authority public key".into()))
    }
}

impl AuthorityKey {
    pub fn from_seed(seed: u64) -> Self {
        let mut secret = [0u8; 32];
        ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut secret);
        Self { key: SigningKey::from_bytes(&secret) }
    }

    pub fn public(&self) -> AuthorityPublicKey {
        AuthorityPublicKey(self.key.verifying_key())
    }

    pub fn sign_identity_request(&self, params: &ElGamalParams, timestamp: u64) -> SignedIdentityRequest {
        let msg = signed_bytes(&params.p, &params.alpha, &params.beta, timestamp);
        SignedIdentityRequest {
            params: params.clone(),
            timestamp,
            signature: self.key.sign(&msg).to_bytes().to_vec(),
        }
    }
}

/// The exact byte string covered by the signature.
pub fn signed_bytes(p: &BigUint, alpha: &BigUint, beta: &BigUint, timestamp: u64) -> Vec<u8> {
    let width = crate::wire::byte_width(p.bits());
    let mut out = Vec::with_capacity(3 * width + 8);
    for x in [p, alpha, beta] {
        // Out-of-range values cannot match any honest signature; encode wide.
        match biguint_to_fixed(x, width) {
            Ok(b) => out.extend(b),
            Err(_) => out.extend(x.to_bytes_be()),
        }
    }
    out.extend_from_slice(&timestamp.to_be_bytes());
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedIdentityRequest {
    /// Only `p`, `alpha` and `beta` are meaningful to the receiver.
    pub params: ElGamalParams,
    pub timestamp: u64,
    pub signature: Vec<u8>,
}

impl SignedIdentityRequest {
    /// True iff the signature verifies and `|now − timestamp| ≤ window`.
    pub fn verify(&self, authority: &AuthorityPublicKey, now: u64, window: u64) -> bool {
        self.check(authority, now, window).is_ok()
    }

    pub fn check(&self, authority: &AuthorityPublicKey, now: u64, window: u64) -> Result<(), CryptoError> {
        let sig = <[u8; 64]>::try_from(self.signature.as_slice())
            .map(|b| Signature::from_bytes(&b))
            .map_err(|_| CryptoError::BadSignature)?;
        let msg = signed_bytes(&self.params.p, &self.params.alpha, &self.params.beta, self.timestamp);
        authority.0.verify(&msg, &sig).map_err(|_| CryptoError::BadSignature)?;
        if now.abs_diff(self.timestamp) > window {
            return Err(CryptoError::StaleTimestamp { timestamp: self.timestamp, now });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imsi_crypto::gen_params;

    fn fixture() -> (AuthorityKey, SignedIdentityRequest) {
        let (params, _) = gen_params(32, 9).unwrap();
        let authority = AuthorityKey::from_seed(1);
        let req = authority.sign_identity_request(&params, 100);
        (authority, req)
    }

    #[test]
    fn fresh_request_verifies() {
        let (a, req) = fixture();
        assert!(req.verify(&a.public(), 100, DEFAULT_FRESHNESS_WINDOW));
        assert!(req.verify(&a.public(), 130, DEFAULT_FRESHNESS_WINDOW));
        assert!(req.verify(&a.public(), 70, DEFAULT_FRESHNESS_WINDOW));
    }

    #[test]
    fn stale_request_rejected() {
        let (a, req) = fixture();
        assert!(!req.verify(&a.public(), 131, DEFAULT_FRESHNESS_WINDOW));
        assert_eq!(
            req.check(&a.public(), 131, DEFAULT_FRESHNESS_WINDOW),
            Err(CryptoError::StaleTimestamp { timestamp: 100, now: 131 })
        );
    }

    #[test]
    fn tampering_rejected() {
        let (a, req) = fixture();
        for i in 0..req.signature.len() {
            let mut bad = req.clone();
            bad.signature[i] ^= 0x01;
            assert!(!bad.verify(&a.public(), 100, 30));
        }
        let mut bad = req.clone();
        bad.params.beta += 1u32;
        assert!(!bad.verify(&a.public(), 100, 30));
        let mut bad = req.clone();
        bad.timestamp += 1;
        assert!(!bad.verify(&a.public(), 100, 30));
        let mut bad = req.clone();
        bad.signature.truncate(10);
        assert!(!bad.verify(&a.public(), 100, 30));
        assert!(!req.verify(&AuthorityKey::from_seed(2).public(), 100, 30));
    }

    #[test]
    fn signed_layout_is_fixed_width() {
        let (_, req) = fixture();
        let b = signed_bytes(&req.params.p, &req.params.alpha, &req.params.beta, 7);
        assert_eq!(b.len(), 3 * 4 + 8);
        assert_eq!(&b[12..], &7u64.to_be_bytes());
    }
}
