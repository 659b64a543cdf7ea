//! The C-GRID: an `n × n` table of symbol-tagged bit strings that replaces
//! the static root key as the subscriber's key-source material.
//!
//! Columns carry fixed payload widths (multiples of 8 bits, palindromic so
//! that columns `i` and `n + 1 - i` mirror each other) and every row and
//! every column holds exactly one null cell. Rows and columns are 1-based in
//! the public API.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Smallest supported grid dimension.
pub const MIN_DIMENSION: usize = 5;

const FILE_MAGIC: &str = "CGRID v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("grid dimension {0} must be odd and at least {MIN_DIMENSION}")]
    InvalidDimension(usize),
    #[error("expected {expected} column widths, got {got}")]
    WidthCountMismatch { expected: usize, got: usize },
    #[error("column {column} width differs from its mirror column {mirror}")]
    NonPalindromicWidths { column: usize, mirror: usize },
    #[error("column {column} width {width} is not a positive multiple of 8")]
    WidthNotByteMultiple { column: usize, width: u32 },
    #[error("cell ({row},{col}) is outside a {n}x{n} grid")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("malformed grid file: {0}")]
    MalformedGridFile(String),
    #[error("grid failed validation: {0}")]
    ValidationFailed(ValidationReport),
}

/// Per-column payload widths in bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnWidths(Vec<u32>);

impl ColumnWidths {
    pub fn new(widths: Vec<u32>) -> Result<Self, GridError> {
        for (idx, &w) in widths.iter().enumerate() {
            if w == 0 || w % 8 != 0 {
                return Err(GridError::WidthNotByteMultiple { column: idx + 1, width: w });
            }
        }
        let n = widths.len();
        for idx in 0..n / 2 {
            if widths[idx] != widths[n - 1 - idx] {
                return Err(GridError::NonPalindromicWidths { column: idx + 1, mirror: n - idx });
            }
        }
        Ok(Self(widths))
    }

    /// Skips the width checks. Only for building deliberately broken grids.
    pub fn new_unchecked(widths: Vec<u32>) -> Self {
        Self(widths)
    }

    /// The default layout: 8 bits at the edges, growing by 8 toward the
    /// center column (`8,16,24,16,8` for n = 5).
    pub fn standard(n: usize) -> Result<Self, GridError> {
        if n < MIN_DIMENSION || n.is_multiple_of(2) {
            return Err(GridError::InvalidDimension(n));
        }
        let widths = (0..n)
            .map(|c| 8 * (1 + c.min(n - 1 - c) as u32))
            .collect();
        Self::new(widths)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Width of the 1-based column `col`.
    pub fn width(&self, col: usize) -> u32 {
        self.0[col - 1]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&w| u64::from(w)).sum()
    }

    /// Number of equal-width `(i, n + 1 - i)` column pairs.
    pub fn mirror_pairs(&self) -> usize {
        let n = self.0.len();
        (0..n / 2).filter(|&i| self.0[i] == self.0[n - 1 - i]).count()
    }
}

/// Minimum number of mirror pairs a grid of dimension `n` must carry.
pub fn required_mirror_pairs(n: usize) -> usize {
    n.div_ceil(2).saturating_sub(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cell {
    Null,
    Filled { symbol: u8, payload: Vec<u8> },
}

impl Cell {
    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }

    pub fn payload(&self) -> Option<&[u8]> {
        match self {
            Cell::Null => None,
            Cell::Filled { payload, .. } => Some(payload),
        }
    }

    pub fn symbol(&self) -> Option<char> {
        match self {
            Cell::Null => None,
            Cell::Filled { symbol, .. } => Some(char::from(*symbol)),
        }
    }

    /// Payload length in bits (0 for a null cell).
    pub fn bits(&self) -> u32 {
        self.payload().map_or(0, |p| 8 * p.len() as u32)
    }
}

/// Opaque content-derived identifier of a grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridId(String);

impl GridId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GridId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for GridId {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(GridId(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CGrid {
    n: usize,
    widths: ColumnWidths,
    cells: Vec<Cell>,
    grid_id: GridId,
    created_at: u64,
}

impl CGrid {
    /// Builds a grid from raw parts without checking any invariant.
    /// Run [`validate_grid`] on the result before trusting it.
    pub fn from_parts_unchecked(n: usize, widths: ColumnWidths, cells: Vec<Cell>) -> Self {
        let mut grid = CGrid {
            n,
            widths,
            cells,
            grid_id: GridId(String::new()),
            created_at: 0,
        };
        grid.grid_id = grid.content_id();
        grid
    }

    /// Builds a grid and rejects it unless it validates cleanly.
    pub fn from_parts(n: usize, widths: ColumnWidths, cells: Vec<Cell>) -> Result<Self, GridError> {
        let grid = Self::from_parts_unchecked(n, widths, cells);
        let report = validate_grid(&grid);
        if report.is_valid() {
            Ok(grid)
        } else {
            Err(GridError::ValidationFailed(report))
        }
    }

    /// Builds a grid from a symbol layout such as the rows of a printed
    /// table: each row is whitespace-separated, `ϕ` (or `NULL`) marks the
    /// null cell and any other token is a single letter. Payload bits are
    /// drawn from `payload_seed`.
    pub fn from_layout(
        widths: ColumnWidths,
        rows: &[&str],
        payload_seed: u64,
    ) -> Result<Self, GridError> {
        let n = widths.len();
        if rows.len() != n {
            return Err(GridError::MalformedGridFile(format!(
                "layout has {} rows, expected {n}",
                rows.len()
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(payload_seed);
        let mut cells = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            let tokens: Vec<&str> = row.split_whitespace().collect();
            if tokens.len() != n {
                return Err(GridError::MalformedGridFile(format!(
                    "layout row {} has {} cells, expected {n}",
                    r + 1,
                    tokens.len()
                )));
            }
            for (c, tok) in tokens.iter().enumerate() {
                if *tok == "ϕ" || *tok == "NULL" {
                    cells.push(Cell::Null);
                    continue;
                }
                let symbol = parse_symbol(tok).ok_or_else(|| {
                    GridError::MalformedGridFile(format!("bad symbol {tok:?} at ({},{})", r + 1, c + 1))
                })?;
                let mut payload = vec![0u8; (widths.width(c + 1) / 8) as usize];
                rng.fill_bytes(&mut payload);
                cells.push(Cell::Filled { symbol, payload });
            }
        }
        Self::from_parts(n, widths, cells)
    }

    pub fn with_created_at(mut self, created_at: u64) -> Self {
        self.created_at = created_at;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn widths(&self) -> &ColumnWidths {
        &self.widths
    }

    pub fn grid_id(&self) -> &GridId {
        &self.grid_id
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// The cell at 1-based `(row, col)`.
    pub fn lookup(&self, row: usize, col: usize) -> Result<&Cell, GridError> {
        if row == 0 || col == 0 || row > self.n || col > self.n {
            return Err(GridError::IndexOutOfRange { row, col, n: self.n });
        }
        Ok(&self.cells[(row - 1) * self.n + (col - 1)])
    }

    /// Total payload bits the layout can hold, nulls included.
    pub fn capacity_bits(&self) -> u64 {
        self.n as u64 * self.widths.total()
    }

    /// Payload bits actually present: one null per column removes one
    /// payload of every width.
    pub fn usable_bits(&self) -> u64 {
        self.capacity_bits() - self.widths.total()
    }

    /// 1-based row of the null cell in `col`, if there is exactly one.
    pub fn null_row(&self, col: usize) -> Option<usize> {
        let mut rows = (1..=self.n).filter(|&r| self.cells[(r - 1) * self.n + (col - 1)].is_null());
        match (rows.next(), rows.next()) {
            (Some(r), None) => Some(r),
            _ => None,
        }
    }

    fn content_id(&self) -> GridId {
        let digest = Sha256::digest(serialize_grid(self));
        GridId(hex::encode(&digest[..8]))
    }
}

/// Draws a fresh grid. Null positions are a uniform permutation; symbols
/// and payload bits come from a ChaCha20 stream seeded by `seed`, so equal
/// inputs always produce bit-identical grids.
pub fn generate_grid(n: usize, widths: &ColumnWidths, seed: u64) -> Result<CGrid, GridError> {
    if n < MIN_DIMENSION || n.is_multiple_of(2) {
        return Err(GridError::InvalidDimension(n));
    }
    if widths.len() != n {
        return Err(GridError::WidthCountMismatch { expected: n, got: widths.len() });
    }
    // Re-run the width checks in case the widths were built unchecked.
    let widths = ColumnWidths::new(widths.as_slice().to_vec())?;

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut null_row_of_col: Vec<usize> = (0..n).collect();
    null_row_of_col.shuffle(&mut rng);

    let mut cells = Vec::with_capacity(n * n);
    for row in 0..n {
        for (col, &null_row) in null_row_of_col.iter().enumerate() {
            if null_row == row {
                cells.push(Cell::Null);
            } else {
                let symbol = rng.gen_range(b'A'..=b'Z');
                let mut payload = vec![0u8; (widths.width(col + 1) / 8) as usize];
                rng.fill_bytes(&mut payload);
                cells.push(Cell::Filled { symbol, payload });
            }
        }
    }
    Ok(CGrid::from_parts_unchecked(n, widths, cells))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InvalidDimension { n: usize },
    WidthCountMismatch { expected: usize, got: usize },
    WidthNotByteMultiple { column: usize, width: u32 },
    NonPalindromicWidths { column: usize, mirror: usize },
    InsufficientMirrorColumns { found: usize, required: usize },
    CellCountMismatch { expected: usize, got: usize },
    RowNullCount { row: usize, count: usize },
    ColumnNullCount { column: usize, count: usize },
    PayloadWidthMismatch { row: usize, column: usize, expected_bits: u32, actual_bits: u32 },
    InvalidSymbol { row: usize, column: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidDimension { n } => write!(f, "InvalidDimension(n={n})"),
            Violation::WidthCountMismatch { expected, got } => {
                write!(f, "WidthCountMismatch(expected={expected}, got={got})")
            }
            Violation::WidthNotByteMultiple { column, width } => {
                write!(f, "WidthNotByteMultiple(column={column}, width={width})")
            }
            Violation::NonPalindromicWidths { column, mirror } => {
                write!(f, "NonPalindromicWidths(column={column}, mirror={mirror})")
            }
            Violation::InsufficientMirrorColumns { found, required } => {
                write!(f, "InsufficientMirrorColumns(found={found}, required={required})")
            }
            Violation::CellCountMismatch { expected, got } => {
                write!(f, "CellCountMismatch(expected={expected}, got={got})")
            }
            Violation::RowNullCount { row, count } => write!(f, "RowNullCount(row={row}, count={count})"),
            Violation::ColumnNullCount { column, count } => {
                write!(f, "ColumnNullCount(column={column}, count={count})")
            }
            Violation::PayloadWidthMismatch { row, column, expected_bits, actual_bits } => write!(
                f,
                "PayloadWidthMismatch(at=({row},{column}), expected={expected_bits}, actual={actual_bits})"
            ),
            Violation::InvalidSymbol { row, column } => write!(f, "InvalidSymbol(at=({row},{column}))"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every invariant the grid breaks. An empty report means valid.
pub fn validate_grid(grid: &CGrid) -> ValidationReport {
    let mut violations = Vec::new();
    let n = grid.n;
    let widths = grid.widths.as_slice();

    if n < MIN_DIMENSION || n.is_multiple_of(2) {
        violations.push(Violation::InvalidDimension { n });
    }
    if widths.len() != n {
        violations.push(Violation::WidthCountMismatch { expected: n, got: widths.len() });
    }
    for (idx, &w) in widths.iter().enumerate() {
        if w == 0 || w % 8 != 0 {
            violations.push(Violation::WidthNotByteMultiple { column: idx + 1, width: w });
        }
    }
    let wn = widths.len();
    for idx in 0..wn / 2 {
        if widths[idx] != widths[wn - 1 - idx] {
            violations.push(Violation::NonPalindromicWidths { column: idx + 1, mirror: wn - idx });
        }
    }
    let required = required_mirror_pairs(n);
    let found = grid.widths.mirror_pairs();
    if found < required {
        violations.push(Violation::InsufficientMirrorColumns { found, required });
    }
    if grid.cells.len() != n * n {
        violations.push(Violation::CellCountMismatch { expected: n * n, got: grid.cells.len() });
        return ValidationReport { violations };
    }

    for row in 1..=n {
        let count = (1..=n).filter(|&c| grid.cells[(row - 1) * n + c - 1].is_null()).count();
        if count != 1 {
            violations.push(Violation::RowNullCount { row, count });
        }
    }
    for column in 1..=n {
        let count = (1..=n).filter(|&r| grid.cells[(r - 1) * n + column - 1].is_null()).count();
        if count != 1 {
            violations.push(Violation::ColumnNullCount { column, count });
        }
    }
    for row in 1..=n {
        for column in 1..=n {
            if let Cell::Filled { symbol, payload } = &grid.cells[(row - 1) * n + column - 1] {
                if !symbol.is_ascii_uppercase() {
                    violations.push(Violation::InvalidSymbol { row, column });
                }
                if let Some(&expected_bits) = widths.get(column - 1) {
                    let actual_bits = 8 * payload.len() as u32;
                    if actual_bits != expected_bits {
                        violations.push(Violation::PayloadWidthMismatch {
                            row,
                            column,
                            expected_bits,
                            actual_bits,
                        });
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Renders the text grid format:
///
/// ```text
/// CGRID v1
/// n=5
/// widths=8,16,24,16,8
/// NULL B:1a2b E:00ff10 ...
/// ```
pub fn serialize_grid(grid: &CGrid) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(FILE_MAGIC);
    out.push('\n');
    out.push_str(&format!("n={}\n", grid.n));
    let widths: Vec<String> = grid.widths.as_slice().iter().map(u32::to_string).collect();
    out.push_str(&format!("widths={}\n", widths.join(",")));
    for row in grid.cells.chunks(grid.n.max(1)) {
        let tokens: Vec<String> = row
            .iter()
            .map(|cell| match cell {
                Cell::Null => "NULL".to_string(),
                Cell::Filled { symbol, payload } => {
                    format!("{}:{}", char::from(*symbol), hex::encode(payload))
                }
            })
            .collect();
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses the text grid format and re-validates the result.
pub fn deserialize_grid(bytes: &[u8]) -> Result<CGrid, GridError> {
    let malformed = |msg: String| GridError::MalformedGridFile(msg);
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("not UTF-8".into()))?;
    let mut lines = text.lines();

    match lines.next() {
        Some(l) if l.trim_end() == FILE_MAGIC => {}
        other => return Err(malformed(format!("bad header {other:?}"))),
    }
    let n: usize = lines
        .next()
        .and_then(|l| l.trim_end().strip_prefix("n="))
        .ok_or_else(|| malformed("missing n= line".into()))?
        .parse()
        .map_err(|e| malformed(format!("bad n: {e}")))?;
    if n == 0 || n > 1024 {
        return Err(malformed(format!("unreasonable dimension {n}")));
    }
    let widths: Vec<u32> = lines
        .next()
        .and_then(|l| l.trim_end().strip_prefix("widths="))
        .ok_or_else(|| malformed("missing widths= line".into()))?
        .split(',')
        .map(|w| w.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|e| malformed(format!("bad width: {e}")))?;

    let mut cells = Vec::with_capacity(n * n);
    for r in 1..=n {
        let line = lines.next().ok_or_else(|| malformed(format!("missing row {r}")))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != n {
            return Err(malformed(format!("row {r} has {} cells, expected {n}", tokens.len())));
        }
        for (c, tok) in tokens.iter().enumerate() {
            if *tok == "NULL" {
                cells.push(Cell::Null);
                continue;
            }
            let (sym, hex_payload) = tok
                .split_once(':')
                .ok_or_else(|| malformed(format!("bad cell {tok:?} at ({r},{})", c + 1)))?;
            let symbol = parse_symbol(sym)
                .ok_or_else(|| malformed(format!("bad symbol {sym:?} at ({r},{})", c + 1)))?;
            let payload = hex::decode(hex_payload)
                .map_err(|e| malformed(format!("bad payload at ({r},{}): {e}", c + 1)))?;
            cells.push(Cell::Filled { symbol, payload });
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(malformed("trailing data after last row".into()));
    }

    CGrid::from_parts(n, ColumnWidths::new_unchecked(widths), cells)
}

fn parse_symbol(tok: &str) -> Option<u8> {
    match tok.as_bytes() {
        [b] if b.is_ascii_uppercase() => Some(*b),
        _ => None,
    }
}
