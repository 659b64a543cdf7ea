use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

/// Miller-Rabin rounds; each round errs with probability at most 1/4.
pub const MR_ROUNDS: usize = 40;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        const LIMIT: usize = 2000;
        let mut sieve = vec![true; LIMIT];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..LIMIT {
            if sieve[i] {
                for m in (i * i..LIMIT).step_by(i) {
                    sieve[m] = false;
                }
            }
        }
        (0..LIMIT).filter(|&i| sieve[i]).map(|i| i as u32).collect()
    })
}

/// Probabilistic primality with error below 2^-80.
pub fn is_probable_prime<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> bool {
    if let Some(small) = n.to_u64() {
        if small < 2 {
            return false;
        }
        for &p in small_primes() {
            if small == u64::from(p) {
                return true;
            }
            if small % u64::from(p) == 0 {
                return false;
            }
        }
        // No factor below the sieve limit means prime when n < limit².
        if small < 2000 * 2000 {
            return true;
        }
    } else if small_primes().iter().any(|&p| (n % p).is_zero()) {
        return false;
    }
    miller_rabin(n, MR_ROUNDS, rng)
}

fn miller_rabin<R: Rng + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u8);
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let upper = n - &one; // bases drawn from [2, n-2]
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &upper);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Searches for a safe prime `p = 2q + 1` with exactly `bits` bits.
pub fn gen_safe_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R, max_candidates: usize) -> Option<BigUint> {
    assert!(bits >= 4);
    let low = BigUint::one() << (bits - 2);
    let high = BigUint::one() << (bits - 1);
    for _ in 0..max_candidates {
        let mut q = rng.gen_biguint_range(&low, &high);
        q |= BigUint::one();
        let p: BigUint = (&q << 1u32) + 1u32;
        if p.bits() != bits {
            continue;
        }
        // Cheap sieve on both q and p before any exponentiation.
        let (q_small, p_small) = (q.to_u64(), p.to_u64());
        let composite = small_primes().iter().any(|&sp| {
            let r = (&q % sp).to_u32().unwrap();
            let sp64 = Some(u64::from(sp));
            (r == 0 && q_small != sp64) || (sp != 2 && r == (sp - 1) / 2 && p_small != sp64)
        });
        if composite {
            continue;
        }
        if is_probable_prime(&q, rng) && is_probable_prime(&p, rng) {
            return Some(p);
        }
    }
    None
}

/// `x^-1 mod p` for prime `p`, or `None` when `x ≡ 0`.
pub fn mod_inverse_prime(x: &BigUint, p: &BigUint) -> Option<BigUint> {
    let x = x.mod_floor(p);
    if x.is_zero() {
        return None;
    }
    Some(x.modpow(&(p - 2u32), p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn agrees_with_trial_division_below_five_thousand() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for n in 0..5000u64 {
            assert_eq!(is_probable_prime(&BigUint::from(n), &mut rng), trial_division(n), "n = {n}");
        }
    }

    #[test]
    fn carmichael_numbers_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for n in [561u64, 1105, 1729, 2465, 2821, 6601, 8911, 41041, 825265, 321197185] {
            assert!(!is_probable_prime(&BigUint::from(n), &mut rng));
        }
    }

    #[test]
    fn safe_primes_are_safe() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for bits in [16u64, 24, 64, 128] {
            let p = gen_safe_prime(bits, &mut rng, 1_000_000).unwrap();
            assert_eq!(p.bits(), bits);
            let q: BigUint = (&p - 1u32) >> 1;
            assert!(is_probable_prime(&p, &mut rng));
            assert!(is_probable_prime(&q, &mut rng));
            if let Some(small) = p.to_u64() {
                assert!(trial_division(small) && trial_division((small - 1) / 2));
            }
        }
    }

    #[test]
    fn inverse() {
        let p = BigUint::from(23u32);
        for x in 1..23u32 {
            let inv = mod_inverse_prime(&BigUint::from(x), &p).unwrap();
            assert_eq!((inv * x) % &p, BigUint::one());
        }
        assert_eq!(mod_inverse_prime(&BigUint::from(46u32), &p), None);
    }
}
