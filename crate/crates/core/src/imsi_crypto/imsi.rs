use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::{CryptoError, ElGamalParams};

pub const IMSI_DIGITS: usize = 15;
const IMSI_BOUND: u64 = 1_000_000_000_000_000;

/// A 15-digit subscriber identity: MCC (3), MNC (2 or 3), MSIN (rest).
/// Equality and hashing use the digit string only.
#[derive(Clone)]
pub struct Imsi {
    digits: String,
    mnc_len: usize,
}

impl Imsi {
    pub fn parse(s: &str) -> Result<Self, CryptoError> {
        Self::parse_with_mnc_len(s, 2)
    }

    pub fn parse_with_mnc_len(s: &str, mnc_len: usize) -> Result<Self, CryptoError> {
        if s.len() != IMSI_DIGITS || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CryptoError::InvalidImsi(format!("expected {IMSI_DIGITS} decimal digits, got {s:?}")));
        }
        if !(2..=3).contains(&mnc_len) {
            return Err(CryptoError::InvalidImsi(format!("MNC length {mnc_len} not 2 or 3")));
        }
        if s.bytes().all(|b| b == b'0') {
            return Err(CryptoError::InvalidImsi("all-zero identity".into()));
        }
        Ok(Self { digits: s.to_owned(), mnc_len })
    }

    /// Rebuilds an identity from its integer value, zero-padded to 15 digits.
    pub fn from_value(v: u64) -> Result<Self, CryptoError> {
        if v >= IMSI_BOUND {
            return Err(CryptoError::InvalidImsi(format!("{v} exceeds 15 digits")));
        }
        Self::parse(&format!("{v:015}"))
    }

    pub fn digits(&self) -> &str {
        &self.digits
    }

    pub fn mcc(&self) -> &str {
        &self.digits[..3]
    }

    pub fn mnc(&self) -> &str {
        &self.digits[3..3 + self.mnc_len]
    }

    pub fn msin(&self) -> &str {
        &self.digits[3 + self.mnc_len..]
    }

    pub fn value(&self) -> u64 {
        self.digits.parse().expect("validated digits")
    }
}

impl PartialEq for Imsi {
    fn eq(&self, other: &Self) -> bool {
        self.digits == other.digits
    }
}

impl Eq for Imsi {}

impl std::hash::Hash for Imsi {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.digits.hash(state);
    }
}

impl fmt::Debug for Imsi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Imsi({})", self.digits)
    }
}

impl fmt::Display for Imsi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digits)
    }
}

impl FromStr for Imsi {
    type Err = CryptoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// Decimal digits per block: the largest `d` with `10^d ≤ p − 1`, so that
/// a chunk value plus one stays inside `[1, p − 1]`.
fn chunk_digits(p: &BigUint) -> Result<Option<usize>, CryptoError> {
    if *p > BigUint::from(IMSI_BOUND) {
        return Ok(None);
    }
    let limit = (p - 1u32).to_u64().unwrap_or(0);
    let mut d = 0;
    let mut pow = 10u64;
    while pow <= limit {
        d += 1;
        pow *= 10;
    }
    if d == 0 {
        return Err(CryptoError::BlockTooLargeForModulus);
    }
    Ok(Some(d))
}

/// One block holding the identity value when `p > 10^15`, otherwise
/// consecutive digit chunks. Every block is offset by one so none is zero.
pub fn split_blocks(imsi: &Imsi, params: &ElGamalParams) -> Result<Vec<BigUint>, CryptoError> {
    let blocks: Vec<BigUint> = match chunk_digits(&params.p)? {
        None => vec![BigUint::from(imsi.value() + 1)],
        Some(d) => imsi
            .digits()
            .as_bytes()
            .chunks(d)
            .map(|c| {
                let v: u64 = std::str::from_utf8(c).unwrap().parse().unwrap();
                BigUint::from(v + 1)
            })
            .collect(),
    };
    for b in &blocks {
        if b.is_zero() || *b >= params.p {
            return Err(CryptoError::BlockTooLargeForModulus);
        }
    }
    Ok(blocks)
}

pub fn join_blocks(blocks: &[BigUint], params: &ElGamalParams) -> Result<Imsi, CryptoError> {
    match chunk_digits(&params.p)? {
        None => {
            let [b] = blocks else {
                return Err(CryptoError::MalformedBlocks(format!("expected 1 block, got {}", blocks.len())));
            };
            let v = b.to_u64().and_then(|v| v.checked_sub(1)).filter(|&v| v < IMSI_BOUND).ok_or_else(|| {
                CryptoError::MalformedBlocks("block out of range".into())
            })?;
            Imsi::from_value(v)
        }
        Some(d) => {
            let expected = IMSI_DIGITS.div_ceil(d);
            if blocks.len() != expected {
                return Err(CryptoError::MalformedBlocks(format!(
                    "expected {expected} blocks, got {}",
                    blocks.len()
                )));
            }
            let mut digits = String::with_capacity(IMSI_DIGITS);
            for (i, b) in blocks.iter().enumerate() {
                let width = d.min(IMSI_DIGITS - i * d);
                let v = b
                    .to_u64()
                    .and_then(|v| v.checked_sub(1))
                    .filter(|&v| v < 10u64.pow(width as u32))
                    .ok_or_else(|| CryptoError::MalformedBlocks(format!("block {i} out of range")))?;
                digits.push_str(&format!("{v:0width$}"));
            }
            Imsi::parse(&digits)
        }
    }
}
