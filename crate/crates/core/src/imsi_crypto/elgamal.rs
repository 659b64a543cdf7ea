//! ElGamal over a prime-order subgroup of `Z_p^*`, used to carry the IMSI
//! on air as `(r, t) = (α^k, IMSI·β^k)`.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::prime::{gen_safe_prime, is_probable_prime};
use super::CryptoError;
use crate::wire::byte_width;

/// Operational modulus size.
pub const DEFAULT_BITS: u64 = 2048;
/// Smallest modulus accepted for test vectors.
pub const MIN_BITS: u64 = 16;
const MAX_PRIME_CANDIDATES: usize = 5_000_000;

/// The 2048-bit MODP group prime from RFC 3526 (a safe prime).
const RFC3526_2048_HEX: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

pub fn rfc3526_2048_prime() -> BigUint {
    BigUint::parse_bytes(RFC3526_2048_HEX.as_bytes(), 16).expect("valid hex constant")
}

/// Public parameters `(p, α, β)` plus the order `n` of `α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElGamalParams {
    pub p: BigUint,
    pub alpha: BigUint,
    pub beta: BigUint,
    pub order: BigUint,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    s: BigUint,
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl SecretKey {
    pub fn new(s: BigUint) -> Self {
        Self { s }
    }

    pub fn value(&self) -> &BigUint {
        &self.s
    }
}

impl ElGamalParams {
    /// Builds the key pair for secret `s`, checking `1 < α < p`,
    /// `α^order ≡ 1` and `1 ≤ s ≤ order − 1`.
    pub fn from_secret(
        p: BigUint,
        alpha: BigUint,
        order: BigUint,
        s: BigUint,
    ) -> Result<(Self, SecretKey), CryptoError> {
        if alpha <= BigUint::one() || alpha >= p {
            return Err(CryptoError::InvalidParams("alpha outside (1, p)".into()));
        }
        if !alpha.modpow(&order, &p).is_one() {
            return Err(CryptoError::InvalidParams("alpha^order != 1 mod p".into()));
        }
        if s.is_zero() || s >= order {
            return Err(CryptoError::InvalidParams("secret outside [1, order-1]".into()));
        }
        let beta = alpha.modpow(&s, &p);
        Ok((Self { p, alpha, beta, order }, SecretKey { s }))
    }

    /// Public parameters received from a peer. The order is taken as
    /// `(p − 1)/2`, the subgroup order for safe-prime moduli.
    pub fn from_public(p: BigUint, alpha: BigUint, beta: BigUint) -> Result<Self, CryptoError> {
        if p < BigUint::from(5u8) || p.is_even() {
            return Err(CryptoError::InvalidParams("modulus must be an odd prime".into()));
        }
        if alpha <= BigUint::one() || alpha >= p || beta.is_zero() || beta >= p {
            return Err(CryptoError::InvalidParams("alpha or beta outside Z_p^*".into()));
        }
        let order = (&p - 1u32) >> 1;
        Ok(Self { p, alpha, beta, order })
    }

    /// Field width in bytes for wire encoding.
    pub fn modulus_len(&self) -> usize {
        byte_width(self.p.bits())
    }

    /// Uniform ephemeral exponent in `[1, order − 1]`.
    pub fn random_ephemeral<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &self.order)
    }
}

const PARAMS_MAGIC: &str = "ELGAMAL v1";
const SECRET_MAGIC: &str = "ELGAMAL-SECRET v1";

fn text_fields<'a>(text: &'a str, magic: &str) -> Result<Vec<(&'a str, BigUint)>, CryptoError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some(magic) {
        return Err(CryptoError::InvalidParams(format!("missing {magic:?} header")));
    }
    lines
        .map(|l| {
            let (k, v) = l.split_once('=').ok_or_else(|| CryptoError::InvalidParams(format!("bad line {l:?}")))?;
            let v = BigUint::parse_bytes(v.as_bytes(), 16).ok_or_else(|| CryptoError::InvalidParams(format!("{k}: not hex")))?;
            Ok((k, v))
        })
        .collect()
}

fn field(fields: &[(&str, BigUint)], key: &str) -> Result<BigUint, CryptoError> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v.clone())
        .ok_or_else(|| CryptoError::InvalidParams(format!("missing {key}")))
}

impl ElGamalParams {
    /// Header line, then `p`, `alpha`, `beta`, `order` in hex.
    pub fn to_text(&self) -> String {
        format!(
            "{PARAMS_MAGIC}\np={:x}\nalpha={:x}\nbeta={:x}\norder={:x}\n",
            self.p, self.alpha, self.beta, self.order
        )
    }

    pub fn from_text(text: &str) -> Result<Self, CryptoError> {
        let f = text_fields(text, PARAMS_MAGIC)?;
        let params = Self::from_public(field(&f, "p")?, field(&f, "alpha")?, field(&f, "beta")?)?;
        if field(&f, "order")? != params.order || !params.alpha.modpow(&params.order, &params.p).is_one() {
            return Err(CryptoError::InvalidParams("order does not match alpha".into()));
        }
        Ok(params)
    }
}

impl SecretKey {
    pub fn to_text(&self) -> String {
        format!("{SECRET_MAGIC}\ns={:x}\n", self.s)
    }

    pub fn from_text(text: &str) -> Result<Self, CryptoError> {
        Ok(Self::new(field(&text_fields(text, SECRET_MAGIC)?, "s")?))
    }
}

/// Generates a safe prime `p = 2q + 1` of `bit_length` bits (the fixed
/// RFC 3526 prime at 2048 bits), a generator `α` of the order-`q`
/// subgroup, and a uniform secret `s`.
pub fn gen_params(bit_length: u64, seed: u64) -> Result<(ElGamalParams, SecretKey), CryptoError> {
    if bit_length < MIN_BITS {
        return Err(CryptoError::InvalidParams(format!(
            "bit length {bit_length} below minimum {MIN_BITS}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p = if bit_length == DEFAULT_BITS {
        rfc3526_2048_prime()
    } else {
        gen_safe_prime(bit_length, &mut rng, MAX_PRIME_CANDIDATES)
            .ok_or(CryptoError::PrimeGenerationFailed { bits: bit_length })?
    };
    let order: BigUint = (&p - 1u32) >> 1;
    let two = BigUint::from(2u8);
    // Squares generate the order-q subgroup; only ±1 square to 1.
    let alpha = loop {
        let h = rng.gen_biguint_range(&two, &(&p - 1u32));
        let a = h.modpow(&two, &p);
        if !a.is_one() {
            break a;
        }
    };
    let s = rng.gen_biguint_range(&BigUint::one(), &order);
    ElGamalParams::from_secret(p, alpha, order, s)
}

/// Confirms that `p` and `(p − 1)/2` are both prime.
pub fn is_safe_prime(p: &BigUint, seed: u64) -> bool {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let q = (p - 1u32) >> 1;
    is_probable_prime(p, &mut rng) && is_probable_prime(&q, &mut rng)
}

/// One encrypted IMSI block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImsiCiphertext {
    pub r: BigUint,
    pub t: BigUint,
    pub block_index: u16,
}

/// `r = α^k mod p`, `t = block·β^k mod p`.
pub fn encrypt_imsi(
    params: &ElGamalParams,
    block: &BigUint,
    k: &BigUint,
) -> Result<ImsiCiphertext, CryptoError> {
    encrypt_block(params, block, k, 0)
}

pub fn encrypt_block(
    params: &ElGamalParams,
    block: &BigUint,
    k: &BigUint,
    block_index: u16,
) -> Result<ImsiCiphertext, CryptoError> {
    if block.is_zero() || block >= &params.p {
        return Err(CryptoError::BlockOutOfRange);
    }
    if k.is_zero() || k >= &params.order {
        return Err(CryptoError::EphemeralOutOfRange);
    }
    let r = params.alpha.modpow(k, &params.p);
    let t = (block * params.beta.modpow(k, &params.p)) % &params.p;
    Ok(ImsiCiphertext { r, t, block_index })
}

/// Powers of one fixed base, four exponent bits per table row.
#[derive(Debug, Clone)]
struct FixedBase {
    rows: Vec<[BigUint; 16]>,
}

impl FixedBase {
    fn new(base: &BigUint, p: &BigUint, exp_bits: u64) -> Self {
        let mut rows = Vec::with_capacity(exp_bits.div_ceil(4) as usize);
        let mut b = base % p;
        for _ in 0..exp_bits.div_ceil(4) {
            let mut row: [BigUint; 16] = std::array::from_fn(|_| BigUint::one());
            for j in 1..16 {
                row[j] = (&row[j - 1] * &b) % p;
            }
            b = (&row[15] * &b) % p;
            rows.push(row);
        }
        Self { rows }
    }

    /// Caller guarantees `exp` fits the table.
    fn pow(&self, exp: &BigUint, p: &BigUint) -> BigUint {
        exp.to_radix_le(16)
            .into_iter()
            .zip(&self.rows)
            .filter(|(d, _)| *d != 0)
            .fold(BigUint::one(), |acc, (d, row)| (acc * &row[d as usize]) % p)
    }
}

/// Encryption under one public key with precomputed tables for `α` and
/// `β`. Worth it when many blocks are encrypted under the same key.
#[derive(Debug, Clone)]
pub struct Encryptor {
    params: ElGamalParams,
    alpha: FixedBase,
    beta: FixedBase,
}

impl Encryptor {
    pub fn new(params: ElGamalParams) -> Self {
        let bits = params.order.bits();
        let alpha = FixedBase::new(&params.alpha, &params.p, bits);
        let beta = FixedBase::new(&params.beta, &params.p, bits);
        Self { params, alpha, beta }
    }

    pub fn params(&self) -> &ElGamalParams {
        &self.params
    }

    /// Same result and range checks as [`encrypt_block`].
    pub fn encrypt_block(&self, block: &BigUint, k: &BigUint, block_index: u16) -> Result<ImsiCiphertext, CryptoError> {
        let p = &self.params.p;
        if block.is_zero() || block >= p {
            return Err(CryptoError::BlockOutOfRange);
        }
        if k.is_zero() || k >= &self.params.order {
            return Err(CryptoError::EphemeralOutOfRange);
        }
        let r = self.alpha.pow(k, p);
        let t = (block * self.beta.pow(k, p)) % p;
        Ok(ImsiCiphertext { r, t, block_index })
    }
}

/// `t · r^(−s) mod p`, computed as `t · r^(p−1−s)`.
pub fn decrypt_imsi(
    params: &ElGamalParams,
    sk: &SecretKey,
    ct: &ImsiCiphertext,
) -> Result<BigUint, CryptoError> {
    let p = &params.p;
    if ct.r >= *p || ct.t >= *p || ct.t.is_zero() {
        return Err(CryptoError::CiphertextOutOfRange);
    }
    if ct.r.is_zero() {
        return Err(CryptoError::NonInvertibleElement);
    }
    let exponent = (p - 1u32) - (&sk.s % (p - 1u32));
    let r_inv_s = ct.r.modpow(&exponent, p);
    Ok((&ct.t * r_inv_s) % p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow_mod_naive(base: u64, exp: u64, m: u64) -> u64 {
        (0..exp).fold(1u64, |acc, _| acc * base % m)
    }

    fn toy() -> (ElGamalParams, SecretKey) {
        ElGamalParams::from_secret(23u32.into(), 5u32.into(), 22u32.into(), 6u32.into()).unwrap()
    }

    #[test]
    fn toy_beta() {
        let (params, _) = toy();
        assert_eq!(params.beta, BigUint::from(pow_mod_naive(5, 6, 23)));
        assert_eq!(params.beta, BigUint::from(8u32));
    }

    #[test]
    fn toy_encryption() {
        let (params, sk) = toy();
        let ct = encrypt_imsi(&params, &9u32.into(), &3u32.into()).unwrap();
        let r = pow_mod_naive(5, 3, 23);
        let t = 9 * pow_mod_naive(8, 3, 23) % 23;
        assert_eq!((ct.r.clone(), ct.t.clone()), (BigUint::from(r), BigUint::from(t)));
        assert_eq!((r, t), (10, 8));
        assert_eq!(decrypt_imsi(&params, &sk, &ct).unwrap(), BigUint::from(9u32));
    }

    #[test]
    fn unit_block_gives_beta_power() {
        let (params, _) = toy();
        for k in 1..22u32 {
            let ct = encrypt_imsi(&params, &BigUint::one(), &k.into()).unwrap();
            assert_eq!(ct.t, params.beta.modpow(&k.into(), &params.p));
        }
    }

    #[test]
    fn u_to_minus_s_is_beta_to_minus_k() {
        let (params, sk) = toy();
        let p = 23u64;
        for k in 1..22u64 {
            let u = pow_mod_naive(5, k, p);
            let u_minus_s = pow_mod_naive(u, p - 1 - 6, p);
            let beta_minus_k = pow_mod_naive(8, (p - 1) - k, p);
            assert_eq!(u_minus_s, beta_minus_k);
            let ct = encrypt_imsi(&params, &BigUint::from(4u32), &BigUint::from(k)).unwrap();
            assert_eq!(decrypt_imsi(&params, &sk, &ct).unwrap(), BigUint::from(4u32));
        }
    }

    #[test]
    fn range_errors() {
        let (params, sk) = toy();
        assert_eq!(
            encrypt_imsi(&params, &9u32.into(), &22u32.into()),
            Err(CryptoError::EphemeralOutOfRange)
        );
        assert_eq!(encrypt_imsi(&params, &0u32.into(), &3u32.into()), Err(CryptoError::BlockOutOfRange));
        assert_eq!(encrypt_imsi(&params, &23u32.into(), &3u32.into()), Err(CryptoError::BlockOutOfRange));
        let ct = ImsiCiphertext { r: 0u32.into(), t: 5u32.into(), block_index: 0 };
        assert_eq!(decrypt_imsi(&params, &sk, &ct), Err(CryptoError::NonInvertibleElement));
    }

    #[test]
    fn generated_params_hold_invariants() {
        for seed in 0..5 {
            let (params, sk) = gen_params(16, seed).unwrap();
            assert_eq!(params.p.bits(), 16);
            assert!(is_safe_prime(&params.p, seed));
            assert!(params.alpha.modpow(&params.order, &params.p).is_one());
            assert_eq!(params.beta, params.alpha.modpow(sk.value(), &params.p));
            assert!(!sk.value().is_zero() && sk.value() < &params.order);
        }
        assert!(matches!(gen_params(8, 0), Err(CryptoError::InvalidParams(_))));
    }

    #[test]
    fn key_files_round_trip() {
        let (params, sk) = gen_params(64, 9).unwrap();
        assert_eq!(ElGamalParams::from_text(&params.to_text()).unwrap(), params);
        assert_eq!(SecretKey::from_text(&sk.to_text()).unwrap(), sk);
        assert!(ElGamalParams::from_text(&sk.to_text()).is_err());
        let tampered = params.to_text().replace("order=", "order=1");
        assert!(ElGamalParams::from_text(&tampered).is_err());
    }

    #[test]
    fn encryptor_matches_plain_encryption() {
        let (toy, _) = toy();
        let enc = Encryptor::new(toy.clone());
        for k in 1..22u32 {
            let k = BigUint::from(k);
            assert_eq!(enc.encrypt_block(&9u32.into(), &k, 1), encrypt_block(&toy, &9u32.into(), &k, 1));
        }
        assert_eq!(enc.encrypt_block(&9u32.into(), &22u32.into(), 0), Err(CryptoError::EphemeralOutOfRange));
        let (params, sk) = gen_params(2048, 3).unwrap();
        let enc = Encryptor::new(params.clone());
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..3 {
            let k = params.random_ephemeral(&mut rng);
            let m = rng.gen_biguint_range(&BigUint::one(), &params.p);
            let ct = enc.encrypt_block(&m, &k, 0).unwrap();
            assert_eq!(ct, encrypt_block(&params, &m, &k, 0).unwrap());
            assert_eq!(decrypt_imsi(&params, &sk, &ct).unwrap(), m);
        }
    }

    #[test]
    fn standard_group_is_a_safe_prime() {
        let p = rfc3526_2048_prime();
        assert_eq!(p.bits(), 2048);
        assert!(is_safe_prime(&p, 7));
        let (params, _) = gen_params(2048, 1).unwrap();
        assert_eq!(params.p, p);
        assert!(params.alpha.modpow(&params.order, &params.p).is_one());
    }
}
