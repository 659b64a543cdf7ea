//! Dynamic 256-bit root keys drawn from a C-GRID.
//!
//! A derivation walks the subscriber's [`KeySequence`]; for every entry the
//! feeder recurrence picks a starting row in the entry's column and linear
//! probing skips the null cell and cells already read in this derivation.
//! The 256 gathered payload bits are the key source; the key itself is the
//! PRF of that source under the epoch's feeder block, so that every epoch
//! yields an independent-looking key even though it draws on the same grid.

mod feeder;
mod sequence;
mod stats;

use thiserror::Error;

use crate::cgrid::{CGrid, GridId};
use crate::prf::{prf, LABEL_LTE_K};

pub use feeder::{feeder_init_block, feeder_step, FeederState, RESEED_CONSTANT};
pub use sequence::{form_key_sequence, KeySequence, SequenceId};
pub use stats::{
    hamming_distance, randomness_suite, randomness_suite_bits, StatReport, StatTest,
    MIN_SUITE_KEYS, SIGNIFICANCE,
};

/// Length of every root key.
pub const KEY_BITS: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeygenError {
    #[error("grid holds only {usable_bits} usable bits, need {KEY_BITS}")]
    GridTooSmall { usable_bits: u64 },
    #[error("no composition of column widths reaches {KEY_BITS} bits within per-column limits")]
    NoCompositionFound,
    #[error("key sequence does not match grid: {0}")]
    SequenceGridMismatch(String),
    #[error("column {column} has no unread cell left")]
    ColumnExhausted { column: usize },
    #[error("randomness suite needs at least {needed} keys, got {got}")]
    InsufficientSample { needed: usize, got: usize },
    #[error("malformed key sequence file: {0}")]
    MalformedSequenceFile(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyProvenance {
    pub grid_id: GridId,
    pub sequence_id: SequenceId,
    pub epoch: u64,
}

/// A 256-bit root key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LteKey {
    bits: [u8; 32],
    derived_from: Option<KeyProvenance>,
}

impl LteKey {
    /// A fixed, provisioned key with no grid behind it.
    pub fn from_static(bits: [u8; 32]) -> Self {
        Self { bits, derived_from: None }
    }

    pub fn bits(&self) -> &[u8; 32] {
        &self.bits
    }

    pub fn derived_from(&self) -> Option<&KeyProvenance> {
        self.derived_from.as_ref()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.bits)
    }
}

/// The raw 256 bits gathered from the grid together with where they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceMaterial {
    pub bits: [u8; 32],
    /// 1-based `(row, col)` of every cell read, in walk order.
    pub consumed: Vec<(usize, usize)>,
    pub selectors: Vec<u8>,
}

/// Walks `ks` over `grid` and gathers 256 payload bits.
pub fn assemble_source_bits(
    grid: &CGrid,
    ks: &KeySequence,
    feeder_seed: u64,
    epoch: u64,
) -> Result<SourceMaterial, KeygenError> {
    if ks.grid_id() != grid.grid_id() {
        return Err(KeygenError::SequenceGridMismatch(format!(
            "sequence formed for grid {}, used with grid {}",
            ks.grid_id(),
            grid.grid_id()
        )));
    }
    let n = grid.n();
    let widths = grid.widths();
    if let Some(&bad) = ks.entries().iter().find(|&&c| c == 0 || c > n) {
        return Err(KeygenError::SequenceGridMismatch(format!("column {bad} outside 1..={n}")));
    }
    let total: u32 = ks.bits_per_entry(widths).iter().sum();
    if total != KEY_BITS {
        return Err(KeygenError::SequenceGridMismatch(format!(
            "entry widths sum to {total}, not {KEY_BITS}"
        )));
    }

    // Locate the nulls first; they are never readable.
    let mut taken: Vec<bool> = grid.cells().iter().map(|c| c.is_null()).collect();

    let mut state = FeederState::initial(feeder_seed, epoch, n as u64);
    let mut bits = Vec::with_capacity(32);
    let mut consumed = Vec::with_capacity(ks.entries().len());
    let mut selectors = Vec::with_capacity(ks.entries().len());

    for col in ks.effective_columns(widths) {
        let (next, selector) = feeder_step(state);
        state = next;
        selectors.push(selector);

        let row = (0..n)
            .map(|step| (selector as usize + step) % n + 1)
            .find(|&r| !taken[(r - 1) * n + (col - 1)])
            .ok_or(KeygenError::ColumnExhausted { column: col })?;
        taken[(row - 1) * n + (col - 1)] = true;
        consumed.push((row, col));
        bits.extend_from_slice(grid.cells()[(row - 1) * n + (col - 1)].payload().unwrap_or_default());
    }

    let bits: [u8; 32] = bits.try_into().map_err(|v: Vec<u8>| {
        KeygenError::SequenceGridMismatch(format!("gathered {} bits", v.len() * 8))
    })?;
    Ok(SourceMaterial { bits, consumed, selectors })
}

/// Derives the epoch's root key. Both endpoints holding the same grid,
/// sequence, feeder seed and epoch obtain the same key.
pub fn derive_lte_key(
    grid: &CGrid,
    ks: &KeySequence,
    feeder_seed: u64,
    epoch: u64,
) -> Result<LteKey, KeygenError> {
    let material = assemble_source_bits(grid, ks, feeder_seed, epoch)?;
    let init = feeder_init_block(feeder_seed, epoch);
    let bits = prf(&material.bits, LABEL_LTE_K, &[&init, &epoch.to_be_bytes()]);
    Ok(LteKey {
        bits,
        derived_from: Some(KeyProvenance {
            grid_id: grid.grid_id().clone(),
            sequence_id: ks.sequence_id().clone(),
            epoch,
        }),
    })
}

/// Whether the key started at `epoch_started_at` has outlived `ttl`.
/// The boundary is inclusive.
pub fn key_refresh_due(epoch_started_at: u64, ttl: u64, now: u64) -> bool {
    assert!(ttl > 0, "ttl must be positive");
    now.saturating_sub(epoch_started_at) >= ttl
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgrid::{generate_grid, ColumnWidths};
    use std::collections::HashSet;

    fn setup(n: usize, seed: u64) -> (CGrid, KeySequence) {
        let g = generate_grid(n, &ColumnWidths::standard(n).unwrap(), seed).unwrap();
        let ks = form_key_sequence(&g, seed ^ 0xabc).unwrap();
        (g, ks)
    }

    #[test]
    fn refresh_boundary() {
        assert!(!key_refresh_due(0, 100, 99));
        assert!(key_refresh_due(0, 100, 100));
        assert!(!key_refresh_due(50, 100, 10));
    }

    #[test]
    fn no_cell_read_twice() {
        for seed in 0..200 {
            for n in [5, 7, 9] {
                let (g, ks) = setup(n, seed);
                let m = assemble_source_bits(&g, &ks, seed, seed * 3).unwrap();
                let set: HashSet<_> = m.consumed.iter().collect();
                assert_eq!(set.len(), m.consumed.len());
                assert!(m.consumed.iter().all(|&(r, c)| !g.lookup(r, c).unwrap().is_null()));
            }
        }
    }

    #[test]
    fn provenance_is_recorded() {
        let (g, ks) = setup(5, 1);
        let k = derive_lte_key(&g, &ks, 5, 9).unwrap();
        let p = k.derived_from().unwrap();
        assert_eq!(&p.grid_id, g.grid_id());
        assert_eq!(&p.sequence_id, ks.sequence_id());
        assert_eq!(p.epoch, 9);
        assert_eq!(k.to_hex().len(), 64);
    }

    #[test]
    fn exhausted_column_is_reported() {
        let (g, _) = setup(5, 1);
        // Five reads of the 24-bit centre column cannot fit in four usable cells.
        let ks = KeySequence::new(g.grid_id().clone(), vec![3, 3, 3, 3, 3, 2, 4, 2, 4, 2, 4, 2, 4, 1]);
        let total: u32 = ks.bits_per_entry(g.widths()).iter().sum();
        assert_eq!(total, 256);
        assert_eq!(
            assemble_source_bits(&g, &ks, 0, 0),
            Err(KeygenError::ColumnExhausted { column: 3 })
        );
    }
}
