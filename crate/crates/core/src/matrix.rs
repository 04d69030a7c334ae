//! Bounded integral matrices, rectangles, and exact structural queries.
//!
//! An [`IntegralMatrix`] holds the two-party function as an immutable grid of
//! integers in `[0, delta]`. A [`Rectangle`] selects a (non-contiguous)
//! submatrix by ordered row and column index sets; all submatrix operations
//! work through rectangles and never copy entries.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

mod rank;

pub use rank::{exact_rank, exact_rank_full, RankCertificate};

/// A matrix with integer entries in `[0, delta]`.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralMatrix {
    n_rows: usize,
    n_cols: usize,
    delta: i64,
    entries: Vec<i64>,
}

impl IntegralMatrix {
    /// Builds a matrix from row-major entries, validating the entry range.
    ///
    /// `delta` is a declared bound: every entry must lie in `[0, delta]`, but
    /// the bound need not be attained.
    pub fn new(n_rows: usize, n_cols: usize, delta: i64, entries: Vec<i64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if delta < 0 {
            return Err(Error::Parse(format!("delta must be nonnegative, got {delta}")));
        }
        if entries.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries, got {}",
                n_rows * n_cols,
                entries.len()
            )));
        }
        for (idx, &value) in entries.iter().enumerate() {
            if value < 0 || value > delta {
                return Err(Error::EntryOutOfRange {
                    row: idx / n_cols,
                    col: idx % n_cols,
                    value,
                    delta,
                });
            }
        }
        Ok(Self { n_rows, n_cols, delta, entries })
    }

    /// Builds a matrix from rows, inferring `delta` as the maximum entry.
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let n_cols = rows[0].len();
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let delta = rows.iter().flatten().copied().max().unwrap_or(0).max(0);
        let n_rows = rows.len();
        let entries = rows.into_iter().flatten().collect();
        Self::new(n_rows, n_cols, delta, entries)
    }

    /// Same as [`IntegralMatrix::from_rows`] but with an explicit bound.
    pub fn from_rows_with_delta(rows: Vec<Vec<i64>>, delta: i64) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let n_cols = rows[0].len();
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let n_rows = rows.len();
        let entries = rows.into_iter().flatten().collect();
        Self::new(n_rows, n_cols, delta, entries)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> i64 {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.entries[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.entries[row * self.n_cols..(row + 1) * self.n_cols]
    }

    /// The rectangle selecting the whole matrix.
    pub fn full_rectangle(&self) -> Rectangle {
        Rectangle::new((0..self.n_rows).collect(), (0..self.n_cols).collect())
            .expect("full rectangle is always valid")
    }

    /// Checks that a rectangle's indices are within this matrix.
    pub fn check_rectangle(&self, rect: &Rectangle) -> Result<()> {
        if let Some(&r) = rect.rows().last() {
            if r >= self.n_rows {
                return Err(Error::IndexOutOfRange { axis: "rows", index: r, len: self.n_rows });
            }
        }
        if let Some(&c) = rect.cols().last() {
            if c >= self.n_cols {
                return Err(Error::IndexOutOfRange { axis: "cols", index: c, len: self.n_cols });
            }
        }
        Ok(())
    }

    /// Copies a rectangle out into a standalone matrix. Test and I/O helper;
    /// computational paths use views instead.
    pub fn extract(&self, rect: &Rectangle) -> Result<IntegralMatrix> {
        self.check_rectangle(rect)?;
        if rect.is_empty() {
            return Err(Error::EmptyRectangle);
        }
        let mut entries = Vec::with_capacity(rect.area());
        for &r in rect.rows() {
            for &c in rect.cols() {
                entries.push(self.entry(r, c));
            }
        }
        IntegralMatrix::new(rect.rows().len(), rect.cols().len(), self.delta, entries)
    }

    /// Parses the CSV form: one line per row, comma-separated integers.
    /// `delta` is inferred as the maximum entry.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Vec<i64> = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<i64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for r in 0..self.n_rows {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the JSON form `{"delta": d, "rows": [[...], ...]}`, validating
    /// every entry against the declared bound.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let dto: MatrixDto = serde_json::from_str(text)?;
        Self::from_rows_with_delta(dto.rows, dto.delta)
    }

    pub fn to_json_string(&self) -> String {
        let dto = MatrixDto {
            delta: self.delta,
            rows: (0..self.n_rows).map(|r| self.row(r).to_vec()).collect(),
        };
        serde_json::to_string(&dto).expect("matrix serialization cannot fail")
    }
}

impl fmt::Display for IntegralMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.n_rows {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixDto {
    delta: i64,
    rows: Vec<Vec<i64>>,
}

/// An ordered pair of index subsets selecting a submatrix.
///
/// Both sets are strictly increasing. Either both are non-empty or both are
/// empty (the empty rectangle).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rectangle {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl Rectangle {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if rows.is_empty() != cols.is_empty() {
            return Err(Error::InvalidRectangle(
                "row and column sets must be empty together".into(),
            ));
        }
        for w in rows.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidRectangle("rows not strictly increasing".into()));
            }
        }
        for w in cols.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidRectangle("cols not strictly increasing".into()));
            }
        }
        Ok(Self { rows, cols })
    }

    pub fn empty() -> Self {
        Self { rows: Vec::new(), cols: Vec::new() }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn area(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn contains_row(&self, row: usize) -> bool {
        self.rows.binary_search(&row).is_ok()
    }

    pub fn contains_col(&self, col: usize) -> bool {
        self.cols.binary_search(&col).is_ok()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.contains_row(row) && self.contains_col(col)
    }

    /// Keeps the given rows (root ids) and all columns.
    pub fn restrict_rows(&self, rows: Vec<usize>) -> Self {
        if rows.is_empty() {
            return Self::empty();
        }
        Self { rows, cols: self.cols.clone() }
    }

    /// Keeps the given columns (root ids) and all rows.
    pub fn restrict_cols(&self, cols: Vec<usize>) -> Self {
        if cols.is_empty() {
            return Self::empty();
        }
        Self { rows: self.rows.clone(), cols }
    }
}

/// Majority statistics over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonoStats {
    /// The most frequent entry value (smallest value on ties).
    pub color: i64,
    /// Occurrences of `color`.
    pub count: usize,
    /// Total number of entries in the rectangle.
    pub total: usize,
}

impl MonoStats {
    pub fn fraction(&self) -> f64 {
        self.count as f64 / self.total as f64
    }

    /// True iff every entry has the majority value.
    pub fn is_monochromatic(&self) -> bool {
        self.count == self.total
    }
}

/// Majority value and its frequency over the rectangle's entries.
pub fn mono_stats(m: &IntegralMatrix, rect: &Rectangle) -> Result<MonoStats> {
    m.check_rectangle(rect)?;
    if rect.is_empty() {
        return Err(Error::EmptyRectangle);
    }
    let mut counts = vec![0usize; (m.delta() + 1) as usize];
    for &r in rect.rows() {
        for &c in rect.cols() {
            counts[m.entry(r, c) as usize] += 1;
        }
    }
    let (color, count) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(v, &n)| (v as i64, n))
        .expect("delta >= 0 gives at least one class");
    Ok(MonoStats { color, count, total: rect.area() })
}

/// Result of deduplicating a rectangle view in place.
#[derive(Debug, Clone)]
pub struct DedupView {
    /// Representative rows and columns, as root indices.
    pub kept: Rectangle,
    /// For each row of the input rectangle, the root id of its representative.
    pub row_rep: Vec<usize>,
    /// For each column of the input rectangle, the root id of its representative.
    pub col_rep: Vec<usize>,
}

impl DedupView {
    /// Expands a rectangle over representatives back to all duplicate
    /// rows/columns of the original view. Preserves monochromaticity.
    pub fn inflate(&self, original: &Rectangle, reduced: &Rectangle) -> Rectangle {
        let rows: Vec<usize> = original
            .rows()
            .iter()
            .enumerate()
            .filter(|&(i, _)| reduced.contains_row(self.row_rep[i]))
            .map(|(_, &r)| r)
            .collect();
        let cols: Vec<usize> = original
            .cols()
            .iter()
            .enumerate()
            .filter(|&(i, _)| reduced.contains_col(self.col_rep[i]))
            .map(|(_, &c)| c)
            .collect();
        if rows.is_empty() || cols.is_empty() {
            return Rectangle::empty();
        }
        Rectangle::new(rows, cols).expect("inflated index sets stay sorted")
    }
}

/// Removes duplicate rows and columns from a rectangle view.
///
/// Two columns are equal in the view iff they agree on the kept rows (kept
/// rows represent all rows), so row and column deduplication are independent.
pub fn dedup_view(m: &IntegralMatrix, rect: &Rectangle) -> Result<DedupView> {
    m.check_rectangle(rect)?;
    if rect.is_empty() {
        return Err(Error::EmptyRectangle);
    }
    let mut seen_rows: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut kept_rows = Vec::new();
    let mut row_rep = Vec::with_capacity(rect.rows().len());
    for &r in rect.rows() {
        let key: Vec<i64> = rect.cols().iter().map(|&c| m.entry(r, c)).collect();
        let rep = *seen_rows.entry(key).or_insert_with(|| {
            kept_rows.push(r);
            r
        });
        row_rep.push(rep);
    }
    let mut seen_cols: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut kept_cols = Vec::new();
    let mut col_rep = Vec::with_capacity(rect.cols().len());
    for &c in rect.cols() {
        let key: Vec<i64> = rect.rows().iter().map(|&r| m.entry(r, c)).collect();
        let rep = *seen_cols.entry(key).or_insert_with(|| {
            kept_cols.push(c);
            c
        });
        col_rep.push(rep);
    }
    Ok(DedupView {
        kept: Rectangle::new(kept_rows, kept_cols)?,
        row_rep,
        col_rep,
    })
}

/// Deduplicates a whole matrix.
///
/// Returns the reduced matrix plus index maps: `row_map[i]` is the row of the
/// reduced matrix representing original row `i`, so
/// `reduced[row_map[i]][col_map[j]] == m[i][j]` for all `(i, j)`.
pub fn deduplicate(m: &IntegralMatrix) -> Result<(IntegralMatrix, Vec<usize>, Vec<usize>)> {
    let full = m.full_rectangle();
    let dd = dedup_view(m, &full)?;
    let reduced = m.extract(&dd.kept)?;
    let row_pos: HashMap<usize, usize> =
        dd.kept.rows().iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let col_pos: HashMap<usize, usize> =
        dd.kept.cols().iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let row_map = dd.row_rep.iter().map(|r| row_pos[r]).collect();
    let col_map = dd.col_rep.iter().map(|c| col_pos[c]).collect();
    Ok((reduced, row_map, col_map))
}

/// True iff the matrix has at most `(delta + 1)^rank` distinct rows and at
/// most that many distinct columns. Guaranteed for every bounded integral
/// matrix; a `false` indicates an internal bug.
pub fn distinct_bound_check(m: &IntegralMatrix, rank: usize) -> Result<bool> {
    let full = m.full_rectangle();
    let dd = dedup_view(m, &full)?;
    let bound = match u128::try_from(m.delta() + 1)
        .ok()
        .and_then(|b| b.checked_pow(rank.min(u32::MAX as usize) as u32))
    {
        Some(b) => b,
        // The bound overflowed u128; any finite matrix satisfies it.
        None => return Ok(true),
    };
    Ok((dd.kept.rows().len() as u128) <= bound && (dd.kept.cols().len() as u128) <= bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn identity(n: usize) -> IntegralMatrix {
        let rows: Vec<Vec<i64>> =
            (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        IntegralMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn constructor_rejects_out_of_range() {
        let err = IntegralMatrix::new(1, 2, 1, vec![0, 2]).unwrap_err();
        match err {
            Error::EntryOutOfRange { row: 0, col: 1, value: 2, delta: 1 } => {}
            other => panic!("unexpected error {other:?}"),
        }
        assert!(IntegralMatrix::new(0, 0, 1, vec![]).is_err());
        assert!(IntegralMatrix::new(1, 1, 0, vec![-1]).is_err());
    }

    #[test]
    fn rectangle_validation() {
        assert!(Rectangle::new(vec![0, 2, 1], vec![0]).is_err());
        assert!(Rectangle::new(vec![0, 0], vec![0]).is_err());
        assert!(Rectangle::new(vec![0], vec![]).is_err());
        assert!(Rectangle::new(vec![], vec![]).unwrap().is_empty());
        let r = Rectangle::new(vec![0, 3], vec![1, 2]).unwrap();
        assert_eq!(r.area(), 4);
        assert!(r.contains(3, 1));
        assert!(!r.contains(1, 1));
    }

    #[test]
    fn mono_stats_all_zero() {
        let m = IntegralMatrix::from_rows_with_delta(vec![vec![0, 0], vec![0, 0]], 1).unwrap();
        let s = mono_stats(&m, &m.full_rectangle()).unwrap();
        assert_eq!(s.color, 0);
        assert_eq!(s.fraction(), 1.0);
        assert!(s.is_monochromatic());
    }

    #[test]
    fn mono_stats_single_off_entry() {
        // 3x4 rectangle, one entry 1, rest 0: majority 0 at 11/12.
        let mut rows = vec![vec![0i64; 4]; 3];
        rows[1][2] = 1;
        let m = IntegralMatrix::from_rows(rows).unwrap();
        let s = mono_stats(&m, &m.full_rectangle()).unwrap();
        assert_eq!(s.color, 0);
        assert_eq!(s.count, 11);
        assert_eq!(s.total, 12);
        assert!((s.fraction() - 11.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn mono_stats_empty_rectangle_signals() {
        let m = identity(2);
        let err = mono_stats(&m, &Rectangle::empty()).unwrap_err();
        assert!(matches!(err, Error::EmptyRectangle));
    }

    #[test]
    fn mono_stats_matches_naive_recount() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n_rows = rng.random_range(1..7);
            let n_cols = rng.random_range(1..7);
            let rows: Vec<Vec<i64>> = (0..n_rows)
                .map(|_| (0..n_cols).map(|_| rng.random_range(0..4)).collect())
                .collect();
            let m = IntegralMatrix::from_rows_with_delta(rows.clone(), 3).unwrap();
            let s = mono_stats(&m, &m.full_rectangle()).unwrap();
            // Independent recount.
            let mut best = (0i64, 0usize);
            for color in 0..=3i64 {
                let count = rows.iter().flatten().filter(|&&v| v == color).count();
                if count > best.1 {
                    best = (color, count);
                }
            }
            assert_eq!(s.count, best.1);
            assert_eq!(s.color, best.0);
        }
    }

    #[test]
    fn dedup_merges_identical_rows() {
        let m = IntegralMatrix::from_rows(vec![vec![1, 0], vec![1, 0], vec![0, 1]]).unwrap();
        let (reduced, row_map, _col_map) = deduplicate(&m).unwrap();
        assert_eq!(reduced.n_rows(), 2);
        assert_eq!(reduced.n_cols(), 2);
        assert_eq!(row_map[0], row_map[1]);
        assert_ne!(row_map[0], row_map[2]);
    }

    #[test]
    fn dedup_distinct_is_identity() {
        let m = identity(3);
        let (reduced, row_map, col_map) = deduplicate(&m).unwrap();
        assert_eq!(reduced, m);
        assert_eq!(row_map, vec![0, 1, 2]);
        assert_eq!(col_map, vec![0, 1, 2]);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn dedup_roundtrip_random() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rows: Vec<Vec<i64>> = (0..8)
                .map(|_| (0..8).map(|_| rng.random_range(0..2)).collect())
                .collect();
            let m = IntegralMatrix::from_rows_with_delta(rows, 1).unwrap();
            let (reduced, row_map, col_map) = deduplicate(&m).unwrap();
            for i in 0..m.n_rows() {
                for j in 0..m.n_cols() {
                    assert_eq!(m.entry(i, j), reduced.entry(row_map[i], col_map[j]));
                }
            }
        }
    }

    #[test]
    fn distinct_bound_trivial_cases() {
        let m = identity(2);
        assert!(distinct_bound_check(&m, 2).unwrap());
        let ones = IntegralMatrix::from_rows(vec![vec![1; 7]; 5]).unwrap();
        assert!(distinct_bound_check(&ones, 1).unwrap());
    }

    #[test]
    fn csv_json_roundtrip() {
        let m = IntegralMatrix::from_rows(vec![vec![0, 1, 2], vec![2, 1, 0]]).unwrap();
        let csv = m.to_csv_string();
        let back = IntegralMatrix::from_csv_str(&csv).unwrap();
        assert_eq!(back, m);
        let json = m.to_json_string();
        let back = IntegralMatrix::from_json_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_loader_validates_range() {
        let err = IntegralMatrix::from_json_str(r#"{"delta": 1, "rows": [[0, 3]]}"#).unwrap_err();
        assert!(matches!(err, Error::EntryOutOfRange { value: 3, .. }));
    }
}
