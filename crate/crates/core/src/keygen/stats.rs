//! Frequency (monobit), runs and serial (m = 2) tests over a bit stream,
//! following the NIST SP 800-22 definitions, plus a pairwise Hamming summary.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use super::{KeygenError, LteKey};

pub const SIGNIFICANCE: f64 = 0.01;
pub const MIN_SUITE_KEYS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct StatTest {
    pub name: &'static str,
    pub statistic: f64,
    pub p_values: Vec<f64>,
    pub threshold: f64,
    pub passed: bool,
}

impl StatTest {
    fn new(name: &'static str, statistic: f64, p_values: Vec<f64>) -> Self {
        let passed = p_values.iter().all(|&p| p >= SIGNIFICANCE);
        Self { name, statistic, p_values, threshold: SIGNIFICANCE, passed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatReport {
    pub tests: Vec<StatTest>,
    /// Mean Hamming distance over all unordered key pairs.
    pub hamming_mean: f64,
    pub bits: usize,
}

impl StatReport {
    pub fn all_passed(&self) -> bool {
        self.tests.iter().all(|t| t.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.tests.iter().filter(|t| !t.passed).map(|t| t.name).collect()
    }

    pub fn test(&self, name: &str) -> Option<&StatTest> {
        self.tests.iter().find(|t| t.name == name)
    }
}

pub fn hamming_distance(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Runs the suite over the concatenation of `keys`.
pub fn randomness_suite(keys: &[LteKey]) -> Result<StatReport, KeygenError> {
    if keys.len() < MIN_SUITE_KEYS {
        return Err(KeygenError::InsufficientSample { needed: MIN_SUITE_KEYS, got: keys.len() });
    }
    let stream: Vec<u8> = keys.iter().flat_map(|k| k.bits().iter().copied()).collect();
    let mut report = randomness_suite_bits(&stream);
    report.hamming_mean = pairwise_hamming_mean(keys);
    Ok(report)
}

/// The three stream tests over raw bytes (MSB first). `hamming_mean` is
/// left at zero.
pub fn randomness_suite_bits(bytes: &[u8]) -> StatReport {
    let bits: Vec<u8> = bytes
        .iter()
        .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1))
        .collect();
    StatReport {
        tests: vec![monobit(&bits), runs(&bits), serial(&bits)],
        hamming_mean: 0.0,
        bits: bits.len(),
    }
}

fn monobit(bits: &[u8]) -> StatTest {
    let n = bits.len() as f64;
    let sum: i64 = bits.iter().map(|&b| if b == 1 { 1 } else { -1 }).sum();
    let s_obs = (sum as f64).abs() / n.sqrt();
    StatTest::new("monobit", s_obs, vec![erfc(s_obs / std::f64::consts::SQRT_2)])
}

fn runs(bits: &[u8]) -> StatTest {
    let n = bits.len() as f64;
    let pi = bits.iter().filter(|&&b| b == 1).count() as f64 / n;
    // Frequency prerequisite: the runs test is meaningless on a biased stream.
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return StatTest::new("runs", f64::NAN, vec![0.0]);
    }
    let v_obs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let v_obs = v_obs as f64;
    let num = (v_obs - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    StatTest::new("runs", v_obs, vec![erfc(num / den)])
}

/// ψ²_m over overlapping m-bit patterns with wrap-around.
fn psi_sq(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len();
    let mut counts = vec![0u64; 1 << m];
    for i in 0..n {
        let mut pattern = 0usize;
        for k in 0..m {
            pattern = (pattern << 1) | bits[(i + k) % n] as usize;
        }
        counts[pattern] += 1;
    }
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    (1u64 << m) as f64 / n as f64 * sum_sq - n as f64
}

fn upper_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(a, x)
    }
}

fn serial(bits: &[u8]) -> StatTest {
    let m = 2;
    let (p2, p1, p0) = (psi_sq(bits, m), psi_sq(bits, m - 1), psi_sq(bits, m - 2));
    let del1 = p2 - p1;
    let del2 = p2 - 2.0 * p1 + p0;
    let pv1 = upper_gamma(2f64.powi(m as i32 - 2), del1 / 2.0);
    let pv2 = upper_gamma(2f64.powi(m as i32 - 3), del2 / 2.0);
    StatTest::new("serial", del1, vec![pv1, pv2])
}

/// Exact mean over all unordered pairs via per-bit column counts:
/// Σ_pairs d = Σ_bits ones·(N − ones).
fn pairwise_hamming_mean(keys: &[LteKey]) -> f64 {
    let n = keys.len() as u64;
    if n < 2 {
        return 0.0;
    }
    let mut ones = [0u64; 256];
    for k in keys {
        for (byte_idx, b) in k.bits().iter().enumerate() {
            for bit in 0..8 {
                ones[byte_idx * 8 + bit] += u64::from((b >> (7 - bit)) & 1);
            }
        }
    }
    let total: u64 = ones.iter().map(|&c| c * (n - c)).sum();
    total as f64 / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    // Worked example from NIST SP 800-22 (n = 100).
    const NIST_EPS: &str = "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";

    fn eps_bits() -> Vec<u8> {
        NIST_EPS.bytes().map(|c| c - b'0').collect()
    }

    #[test]
    fn monobit_matches_reference_example() {
        let t = monobit(&eps_bits());
        assert!((t.p_values[0] - 0.109599).abs() < 1e-6, "{:?}", t);
    }

    #[test]
    fn runs_matches_reference_example() {
        let t = runs(&eps_bits());
        assert!((t.p_values[0] - 0.500798).abs() < 1e-6, "{:?}", t);
    }

    #[test]
    fn psi_sq_matches_hand_count() {
        let bits: Vec<u8> = "0011011101".bytes().map(|c| c - b'0').collect();
        // Overlapping 2-bit patterns with wrap: 00,01,11,10,01,11,11,10,01,10 → 00:1 01:3 10:3 11:3
        let psi2 = 4.0 / 10.0 * (1.0 + 9.0 + 9.0 + 9.0) - 10.0;
        // 1-bit: zeros 4, ones 6
        let psi1 = 2.0 / 10.0 * (16.0 + 36.0) - 10.0;
        assert!((psi_sq(&bits, 2) - psi2).abs() < 1e-12);
        assert!((psi_sq(&bits, 1) - psi1).abs() < 1e-12);
    }

    #[test]
    fn all_zero_stream_fails_monobit() {
        let keys: Vec<LteKey> = (0..100).map(|_| LteKey::from_static([0u8; 32])).collect();
        let r = randomness_suite(&keys).unwrap();
        assert!(!r.test("monobit").unwrap().passed);
        assert_eq!(r.hamming_mean, 0.0);
    }

    #[test]
    fn too_few_keys() {
        let keys: Vec<LteKey> = (0..50).map(|_| LteKey::from_static([1u8; 32])).collect();
        assert_eq!(
            randomness_suite(&keys),
            Err(KeygenError::InsufficientSample { needed: 100, got: 50 })
        );
    }

    #[test]
    fn hamming_mean_matches_brute_force() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let keys: Vec<LteKey> = (0..40)
            .map(|_| {
                let mut b = [0u8; 32];
                rng.fill_bytes(&mut b);
                LteKey::from_static(b)
            })
            .collect();
        let mut sum = 0u64;
        let mut pairs = 0u64;
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                sum += u64::from(hamming_distance(keys[i].bits(), keys[j].bits()));
                pairs += 1;
            }
        }
        let brute = sum as f64 / pairs as f64;
        assert!((pairwise_hamming_mean(&keys) - brute).abs() < 1e-9);
    }
}
