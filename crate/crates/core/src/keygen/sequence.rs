//! Key sequences: the pre-shared ordered list of grid columns whose widths
//! add up to one 256-bit key.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::{KeygenError, KEY_BITS};
use crate::cgrid::{CGrid, ColumnWidths, GridId};

const FILE_MAGIC: &str = "KSEQ v1";
const MAX_ARRANGEMENT_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SequenceId(String);

impl SequenceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SequenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeySequence {
    entries: Vec<usize>,
    grid_id: GridId,
    sequence_id: SequenceId,
}

impl KeySequence {
    /// Wraps raw entries for `grid_id` without checking them against a grid.
    pub fn new(grid_id: GridId, entries: Vec<usize>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(grid_id.as_str().as_bytes());
        for e in &entries {
            hasher.update((*e as u32).to_be_bytes());
        }
        let sequence_id = SequenceId(hex::encode(&hasher.finalize()[..8]));
        Self { entries, grid_id, sequence_id }
    }

    /// 1-based column indices in walk order.
    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn grid_id(&self) -> &GridId {
        &self.grid_id
    }

    pub fn sequence_id(&self) -> &SequenceId {
        &self.sequence_id
    }

    /// Bits contributed by each entry under `widths`.
    pub fn bits_per_entry(&self, widths: &ColumnWidths) -> Vec<u32> {
        self.entries.iter().map(|&c| widths.width(c)).collect()
    }

    /// Columns actually read once the mirror-alternation rule is applied:
    /// an entry that follows an equal-width entry is redirected to the
    /// mirror (`n + 1 - i`) of the column the previous entry was read from.
    pub fn effective_columns(&self, widths: &ColumnWidths) -> Vec<usize> {
        let n = widths.len();
        let mut out: Vec<usize> = Vec::with_capacity(self.entries.len());
        for &col in &self.entries {
            let effective = match out.last() {
                Some(&prev) if widths.width(prev) == widths.width(col) => n + 1 - prev,
                _ => col,
            };
            out.push(effective);
        }
        out
    }

    /// Checks the sequence against `grid`: same grid, columns in range,
    /// widths summing to 256, and at most `n - 1` reads per column both
    /// before and after mirror alternation.
    pub fn check_against(&self, grid: &CGrid) -> Result<(), KeygenError> {
        let n = grid.n();
        if &self.grid_id != grid.grid_id() {
            return Err(KeygenError::SequenceGridMismatch(format!(
                "sequence formed for grid {}, used with grid {}",
                self.grid_id,
                grid.grid_id()
            )));
        }
        if let Some(&bad) = self.entries.iter().find(|&&c| c == 0 || c > n) {
            return Err(KeygenError::SequenceGridMismatch(format!("column {bad} outside 1..={n}")));
        }
        let total: u32 = self.bits_per_entry(grid.widths()).iter().sum();
        if total != KEY_BITS {
            return Err(KeygenError::SequenceGridMismatch(format!(
                "entry widths sum to {total}, not {KEY_BITS}"
            )));
        }
        for cols in [self.entries.clone(), self.effective_columns(grid.widths())] {
            let mut counts = vec![0usize; n + 1];
            for c in cols {
                counts[c] += 1;
                if counts[c] > n - 1 {
                    return Err(KeygenError::ColumnExhausted { column: c });
                }
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let entries: Vec<String> = self.entries.iter().map(usize::to_string).collect();
        format!("{FILE_MAGIC}\ngrid={}\nentries={}\n", self.grid_id, entries.join(","))
    }

    pub fn deserialize(text: &str) -> Result<Self, KeygenError> {
        let bad = |m: &str| KeygenError::MalformedSequenceFile(m.to_string());
        let mut lines = text.lines().map(str::trim_end);
        if lines.next() != Some(FILE_MAGIC) {
            return Err(bad("missing KSEQ v1 header"));
        }
        let grid_id: GridId = lines
            .next()
            .and_then(|l| l.strip_prefix("grid="))
            .ok_or_else(|| bad("missing grid= line"))?
            .parse()
            .unwrap();
        let entries = lines
            .next()
            .and_then(|l| l.strip_prefix("entries="))
            .ok_or_else(|| bad("missing entries= line"))?
            .split(',')
            .map(|e| e.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(&format!("bad entry: {e}")))?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing data"));
        }
        Ok(Self::new(grid_id, entries))
    }
}

/// Forms a key sequence for `grid`.
///
/// The composition (how many reads of each width) is found widest-first,
/// which for the 5×5 default gives `24·4 + 16·4 + 16·4 + 8·4`. The seed
/// then shuffles the order and picks which mirror column opens each run of
/// equal-width entries; runs alternate between mirror columns so the
/// sequence is already in its post-alternation form.
pub fn form_key_sequence(grid: &CGrid, seed: u64) -> Result<KeySequence, KeygenError> {
    if grid.usable_bits() < u64::from(KEY_BITS) {
        return Err(KeygenError::GridTooSmall { usable_bits: grid.usable_bits() });
    }
    let n = grid.n();
    let widths = grid.widths();

    // width -> columns with that width
    let mut classes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for col in 1..=n {
        classes.entry(widths.width(col)).or_default().push(col);
    }
    let classes: Vec<(u32, Vec<usize>)> = classes.into_iter().rev().collect();
    let caps: Vec<usize> = classes.iter().map(|(_, cols)| cols.len() * (n - 1)).collect();
    let class_widths: Vec<u32> = classes.iter().map(|(w, _)| *w).collect();

    let counts = widest_first_composition(&class_widths, &caps, KEY_BITS)
        .ok_or(KeygenError::NoCompositionFound)?;

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(class, &k)| std::iter::repeat_n(class, k))
        .collect();

    for _ in 0..MAX_ARRANGEMENT_ATTEMPTS {
        pool.shuffle(&mut rng);
        if let Some(entries) = assign_columns(&pool, &classes, n, &mut rng) {
            let ks = KeySequence::new(grid.grid_id().clone(), entries);
            if ks.check_against(grid).is_ok() {
                return Ok(ks);
            }
        }
    }
    Err(KeygenError::NoCompositionFound)
}

/// Per-class read counts summing to `target` bits, preferring as many reads
/// of the widest class as possible, then the next, with backtracking.
fn widest_first_composition(widths: &[u32], caps: &[usize], target: u32) -> Option<Vec<usize>> {
    fn go(idx: usize, remaining: u32, widths: &[u32], caps: &[usize], acc: &mut Vec<usize>) -> bool {
        if remaining == 0 {
            acc.resize(widths.len(), 0);
            return true;
        }
        if idx == widths.len() {
            return false;
        }
        let max = caps[idx].min((remaining / widths[idx]) as usize);
        for k in (0..=max).rev() {
            acc.push(k);
            if go(idx + 1, remaining - k as u32 * widths[idx], widths, caps, acc) {
                return true;
            }
            acc.pop();
        }
        false
    }
    let mut acc = Vec::new();
    go(0, target, widths, caps, &mut acc).then_some(acc)
}

fn assign_columns(
    pool: &[usize],
    classes: &[(u32, Vec<usize>)],
    n: usize,
    rng: &mut ChaCha20Rng,
) -> Option<Vec<usize>> {
    let mut used = vec![0usize; n + 1];
    let mut entries = Vec::with_capacity(pool.len());
    let mut prev: Option<(usize, usize)> = None; // (class, column)
    for &class in pool {
        let col = match prev {
            Some((pc, pcol)) if pc == class => n + 1 - pcol,
            _ => {
                let cols = &classes[class].1;
                let best = cols.iter().map(|&c| used[c]).min()?;
                let candidates: Vec<usize> = cols.iter().copied().filter(|&c| used[c] == best).collect();
                candidates[rng.gen_range(0..candidates.len())]
            }
        };
        used[col] += 1;
        if used[col] > n - 1 {
            return None;
        }
        entries.push(col);
        prev = Some((class, col));
    }
    Some(entries)
}
