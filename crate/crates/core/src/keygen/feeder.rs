//! The key feeder function: a shared 64-bit recurrence whose output picks
//! grid rows while a key sequence is walked.

use crate::prf::{prf, LABEL_KFF_INIT};

/// Substituted for `x` whenever the wrapped product collapses to zero.
pub const RESEED_CONSTANT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeederState {
    pub x: u64,
    pub y: u64,
    /// Outer loop counter (column pass).
    pub i: u64,
    /// Inner loop counter (row within the pass), runs `1..=span`.
    pub j: u64,
    /// Inner loop length, the grid dimension.
    pub span: u64,
}

impl FeederState {
    pub fn new(x: u64, y: u64, i: u64, j: u64, span: u64) -> Self {
        Self { x, y, i, j, span: span.max(1) }
    }

    /// Start state for one derivation. `x` and `y` are the low and high
    /// halves of `PRF(feeder_seed, epoch)`, each forced odd.
    pub fn initial(feeder_seed: u64, epoch: u64, span: u64) -> Self {
        let init = feeder_init_block(feeder_seed, epoch);
        let v = u64::from_be_bytes(init[..8].try_into().unwrap());
        Self::new((v & 0xffff_ffff) | 1, (v >> 32) | 1, 1, 1, span)
    }
}

/// The 32-byte PRF block the feeder is seeded from.
pub fn feeder_init_block(feeder_seed: u64, epoch: u64) -> [u8; 32] {
    prf(&feeder_seed.to_be_bytes(), LABEL_KFF_INIT, &[&epoch.to_be_bytes()])
}

/// One feeder iteration:
///
/// ```text
/// y' = y·x + y + x
/// x_raw = (x·y' + i) · (1024 + i) · (i·j)
/// selector = x_raw mod 4
/// ```
///
/// all in wrapping 64-bit arithmetic. The full `x_raw` is carried forward
/// (only the selector is reduced mod 4); a zero product is replaced by
/// [`RESEED_CONSTANT`].
pub fn feeder_step(state: FeederState) -> (FeederState, u8) {
    let FeederState { x, y, i, j, span } = state;
    let y_next = y.wrapping_mul(x).wrapping_add(y.wrapping_add(x));
    let x_raw = x
        .wrapping_mul(y_next)
        .wrapping_add(i)
        .wrapping_mul(1024u64.wrapping_add(i))
        .wrapping_mul(i.wrapping_mul(j));
    let selector = (x_raw % 4) as u8;
    let x_next = if x_raw == 0 { RESEED_CONSTANT } else { x_raw };

    let (i_next, j_next) = if j >= span {
        (match i.wrapping_add(1) { 0 => 1, v => v }, 1)
    } else {
        (i, j + 1)
    };
    (FeederState { x: x_next, y: y_next, i: i_next, j: j_next, span }, selector)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_follow_loop_nest() {
        let mut s = FeederState::new(3, 5, 1, 1, 3);
        let mut seen = Vec::new();
        for _ in 0..7 {
            seen.push((s.i, s.j));
            s = feeder_step(s).0;
        }
        assert_eq!(seen, vec![(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 1)]);
    }

    #[test]
    fn zero_product_reseeds() {
        // x = 0, y = 0 gives y' = 0 and x_raw = i·(1024+i)·(i·j) with i = 0 → 0.
        let (next, sel) = feeder_step(FeederState::new(0, 0, 0, 1, 5));
        assert_eq!(sel, 0);
        assert_eq!(next.x, RESEED_CONSTANT);
    }

    #[test]
    fn initial_state_is_odd_and_epoch_dependent() {
        let a = FeederState::initial(99, 0, 5);
        let b = FeederState::initial(99, 1, 5);
        assert_eq!(a.x & 1, 1);
        assert_eq!(a.y & 1, 1);
        assert_ne!((a.x, a.y), (b.x, b.y));
        assert_eq!((a.i, a.j), (1, 1));
    }
}
