//! Exact evaluation of the grid security formulas, and the benchmark
//! driver in [`bench`].

mod bench;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::cgrid::{generate_grid, ColumnWidths, GridError};
use crate::keygen::form_key_sequence;

pub use bench::{keygen_time, read_csv, run_benchmarks, write_csv, BenchConfig, BenchRow, CSV_HEADER};

/// Alphabet size of the cell symbols.
pub const ALPHABET: u64 = 26;
/// Single-key baseline exponent.
pub const BASELINE_BITS: u64 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("EmptyInput")]
    EmptyInput,
    #[error("ZeroLifetime")]
    ZeroLifetime,
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("BadParams: {0}")]
    BadParams(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridComplexityParams {
    /// Bit width of one element, per column.
    pub mu_b: Vec<u32>,
    /// Elements per column.
    pub e_c: u64,
    /// Elements per row.
    pub e_r: u64,
    /// Symbol alphabet size.
    pub e: u64,
    /// Null cells in the grid.
    pub n_v: u64,
    pub n: u64,
}

impl GridComplexityParams {
    /// Standard layout of dimension `n`: one null per column.
    pub fn for_dimension(n: usize) -> Result<Self, AnalysisError> {
        let widths = ColumnWidths::standard(n)?;
        let n = n as u64;
        Ok(Self { mu_b: widths.as_slice().to_vec(), e_c: n, e_r: n, e: ALPHABET, n_v: n, n })
    }
}

fn pow2(bits: u64) -> BigUint {
    BigUint::one() << bits
}

/// Cost of attacking one position whose element is `mu_b` bits wide.
pub fn position_time(p: &GridComplexityParams, mu_b: u32) -> BigUint {
    pow2(u64::from(mu_b)) * p.e_c * p.e_r * p.e * p.n_v
}

/// One position time per cell, row-major.
pub fn position_times(p: &GridComplexityParams) -> Vec<BigUint> {
    (0..p.e_r).flat_map(|_| p.mu_b.iter().map(|&w| position_time(p, w))).collect()
}

/// Sum over columns of the per-position cost.
pub fn breach_time(p: &GridComplexityParams) -> BigUint {
    p.mu_b.iter().map(|&w| position_time(p, w)).sum()
}

pub fn total_compromise_time(position_times: &[BigUint]) -> Result<BigUint, AnalysisError> {
    if position_times.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    Ok(position_times.iter().sum())
}

pub fn key_lifetime(breach_iterations: &BigUint, ks_iterations: &BigUint, grid_complexity: &BigUint) -> BigUint {
    breach_iterations * ks_iterations * grid_complexity
}

pub fn throughput(messages: u64, security_level: &BigUint, lifetime: &BigUint) -> Result<BigRational, AnalysisError> {
    if lifetime.is_zero() {
        return Err(AnalysisError::ZeroLifetime);
    }
    let num = BigUint::from(messages) * security_level;
    Ok(BigRational::new(num.into(), lifetime.clone().into()))
}

pub fn unique_key_count(e_c: u64, n_c: u64, n_mc: u64, e: u64) -> BigUint {
    BigUint::from(e_c.saturating_sub(1)) * n_c * n_mc * e
}

/// Search space of the grid contents: two to the capacity in bits.
pub fn grid_complexity(n: usize) -> Result<BigUint, AnalysisError> {
    let widths = ColumnWidths::standard(n)?;
    Ok(pow2(n as u64 * widths.total()))
}

/// Entries in the key sequence formed for a standard grid of dimension `n`.
pub fn key_sequence_len(n: usize) -> Result<u64, AnalysisError> {
    let grid = generate_grid(n, &ColumnWidths::standard(n)?, 0)?;
    let ks = form_key_sequence(&grid, 0).map_err(|e| AnalysisError::BadParams(e.to_string()))?;
    Ok(ks.entries().len() as u64)
}

/// Lifetime with every operand at its default for dimension `n`.
pub fn default_key_lifetime(n: usize) -> Result<BigUint, AnalysisError> {
    let breach = breach_time(&GridComplexityParams::for_dimension(n)?);
    let ks = BigUint::from(key_sequence_len(n)?);
    Ok(key_lifetime(&breach, &ks, &grid_complexity(n)?))
}

/// Splits `k=v,k=v`. List values inside use `:` as separator.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, String>, AnalysisError> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| AnalysisError::BadParams(format!("expected k=v, got {part:?}")))?;
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

/// Decimal, or `2^k`.
pub fn parse_big(key: &str, v: &str) -> Result<BigUint, AnalysisError> {
    let bad = || AnalysisError::BadParams(format!("{key}={v}"));
    match v.split_once('^') {
        Some(("2", exp)) => exp.parse::<u64>().map(pow2).map_err(|_| bad()),
        Some(_) => Err(bad()),
        None => v.parse::<BigUint>().map_err(|_| bad()),
    }
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn u64(&mut self, k: &str, default: u64) -> Result<u64, AnalysisError> {
        match self.0.remove(k) {
            Some(v) => v.parse().map_err(|_| AnalysisError::BadParams(format!("{k}={v}"))),
            None => Ok(default),
        }
    }

    fn big(&mut self, k: &str, default: impl FnOnce() -> Result<BigUint, AnalysisError>) -> Result<BigUint, AnalysisError> {
        match self.0.remove(k) {
            Some(v) => parse_big(k, &v),
            None => default(),
        }
    }

    fn done(self) -> Result<(), AnalysisError> {
        match self.0.keys().next() {
            Some(k) => Err(AnalysisError::BadParams(format!("unknown parameter {k}"))),
            None => Ok(()),
        }
    }
}

/// Evaluates one formula (`breach`, `lifetime`, `throughput`, `keys`) and
/// renders the exact result in decimal.
pub fn evaluate(kind: &str, params: &str) -> Result<String, AnalysisError> {
    let mut p = Params(parse_params(params)?);
    let n = p.u64("n", 5)? as usize;
    let out = match kind {
        "breach" => {
            let mut g = GridComplexityParams::for_dimension(n)?;
            if let Some(list) = p.0.remove("mu_b") {
                g.mu_b = list
                    .split(':')
                    .map(|w| w.parse().map_err(|_| AnalysisError::BadParams(format!("mu_b={list}"))))
                    .collect::<Result<_, _>>()?;
            }
            g.e_c = p.u64("e_c", g.e_c)?;
            g.e_r = p.u64("e_r", g.e_r)?;
            g.e = p.u64("e", g.e)?;
            g.n_v = p.u64("n_v", g.n_v)?;
            breach_time(&g).to_string()
        }
        "lifetime" => {
            let breach = p.big("breach", || Ok(breach_time(&GridComplexityParams::for_dimension(n)?)))?;
            let ks = p.big("ks", || key_sequence_len(n).map(BigUint::from))?;
            let grid = p.big("grid", || grid_complexity(n))?;
            key_lifetime(&breach, &ks, &grid).to_string()
        }
        "throughput" => {
            let messages = p.u64("messages", 7)?;
            let security = p.big("security", || Ok(pow2(BASELINE_BITS)))?;
            let lifetime = p.big("lifetime", || default_key_lifetime(n))?;
            throughput(messages, &security, &lifetime)?.to_string()
        }
        "keys" => {
            let mirror = ColumnWidths::standard(n)?.mirror_pairs() as u64;
            let e_c = p.u64("e_c", n as u64)?;
            let n_c = p.u64("n_c", n as u64)?;
            let n_mc = p.u64("n_mc", mirror)?;
            let e = p.u64("e", ALPHABET)?;
            unique_key_count(e_c, n_c, n_mc, e).to_string()
        }
        other => return Err(AnalysisError::BadParams(format!("unknown formula {other}"))),
    };
    p.done()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keygen::key_refresh_due;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn single_position_cost() {
        let p = GridComplexityParams { mu_b: vec![32], ..GridComplexityParams::for_dimension(5).unwrap() };
        assert_eq!(breach_time(&p), pow2(32) * 25u32 * 26u32 * 5u32);
    }

    #[test]
    fn zero_nulls_contribute_nothing() {
        let p = GridComplexityParams { n_v: 0, ..GridComplexityParams::for_dimension(5).unwrap() };
        assert!(breach_time(&p).is_zero());
    }

    #[test]
    fn doubling_mu_squares_the_power() {
        let base = GridComplexityParams { mu_b: vec![16], e_c: 1, e_r: 1, e: 1, n_v: 1, n: 1 };
        let doubled = GridComplexityParams { mu_b: vec![32], ..base.clone() };
        assert_eq!(breach_time(&doubled), breach_time(&base).pow(2));
    }

    #[test]
    fn total_is_exact_sum() {
        assert_eq!(total_compromise_time(&[big(1), big(2), big(3)]).unwrap(), big(6));
        assert_eq!(total_compromise_time(&[]), Err(AnalysisError::EmptyInput));
        let pi = pow2(32) * 25u32 * 26u32 * 5u32;
        assert_eq!(total_compromise_time(&vec![pi.clone(); 5]).unwrap(), pi * 5u32);
    }

    #[test]
    fn lifetime_is_a_product() {
        assert_eq!(key_lifetime(&pow2(256), &big(1), &big(1)), pow2(256));
        let base = key_lifetime(&big(3), &big(4), &big(5));
        assert!(key_lifetime(&big(4), &big(4), &big(5)) > base);
        assert!(key_lifetime(&big(3), &big(5), &big(5)) > base);
        assert!(key_lifetime(&big(3), &big(4), &big(6)) > base);
        assert!(default_key_lifetime(5).unwrap() > pow2(256));
    }

    #[test]
    fn lifetime_as_refresh_ttl() {
        let ttl = key_lifetime(&big(3), &big(4), &big(5));
        let ttl = u64::try_from(ttl).unwrap();
        assert!(!key_refresh_due(0, ttl, ttl - 1));
        assert!(key_refresh_due(0, ttl, ttl));
    }

    #[test]
    fn throughput_is_exact() {
        let l = pow2(300);
        assert_eq!(throughput(7, &l, &l).unwrap(), BigRational::from_integer(7.into()));
        assert!(throughput(0, &l, &l).unwrap().is_zero());
        let t = throughput(3, &big(5), &big(7)).unwrap();
        assert_eq!(throughput(3, &big(5), &big(14)).unwrap() * BigRational::from_integer(2.into()), t);
        assert_eq!(throughput(1, &big(1), &big(0)), Err(AnalysisError::ZeroLifetime));
    }

    #[test]
    fn unique_keys() {
        assert_eq!(unique_key_count(1, 5, 2, 26), big(0));
        assert_eq!(unique_key_count(5, 5, 4, 26), unique_key_count(5, 5, 2, 26) * 2u32);
    }

    #[test]
    fn complexity_ordering() {
        let c5 = grid_complexity(5).unwrap();
        assert!(grid_complexity(7).unwrap() > c5);
        assert!(c5 > pow2(BASELINE_BITS));
    }

    #[test]
    fn evaluate_dispatch() {
        assert_eq!(evaluate("keys", "").unwrap(), "1040");
        assert_eq!(evaluate("breach", "mu_b=32").unwrap(), (pow2(32) * 3250u32).to_string());
        assert_eq!(evaluate("throughput", "messages=7,security=2^10,lifetime=1024").unwrap(), "7");
        assert_eq!(evaluate("throughput", "messages=1,security=1,lifetime=2").unwrap(), "1/2");
        assert_eq!(evaluate("lifetime", "breach=2,ks=3,grid=2^4").unwrap(), "96");
        assert!(matches!(evaluate("throughput", "lifetime=0"), Err(AnalysisError::ZeroLifetime)));
        assert!(matches!(evaluate("keys", "bogus=1"), Err(AnalysisError::BadParams(_))));
        assert!(matches!(evaluate("nope", ""), Err(AnalysisError::BadParams(_))));
        assert!(matches!(evaluate("keys", "e_c"), Err(AnalysisError::BadParams(_))));
    }
}
