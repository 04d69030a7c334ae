//! Exact integer rank via fraction-free (Bareiss) elimination.
//!
//! Rank is computed over the rationals with integer-only arithmetic. The
//! elimination runs in `i128` with checked operations and transparently
//! restarts over arbitrary-precision integers if an intermediate product
//! overflows, so a rank is never silently wrong. Protocol case splits depend
//! on these ranks being exact; floating-point rank is not used anywhere.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{IntegralMatrix, Rectangle};
use crate::error::Error;
use crate::Result;

/// Witness for an exactly computed rank.
///
/// `pivot_rows` x `pivot_cols` (root indices) select a maximal invertible
/// submatrix: both lists have length `rank` and the selected square submatrix
/// has nonzero determinant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankCertificate {
    pub rank: usize,
    pub pivot_rows: Vec<usize>,
    pub pivot_cols: Vec<usize>,
}

impl RankCertificate {
    /// Re-checks the certificate: the pivot submatrix must have nonzero
    /// determinant, computed exactly.
    pub fn check(&self, m: &IntegralMatrix) -> Result<bool> {
        if self.pivot_rows.len() != self.rank || self.pivot_cols.len() != self.rank {
            return Ok(false);
        }
        if self.rank == 0 {
            return Ok(true);
        }
        let mut rows = self.pivot_rows.clone();
        let mut cols = self.pivot_cols.clone();
        rows.sort_unstable();
        cols.sort_unstable();
        let rect = Rectangle::new(rows, cols)?;
        let cert = exact_rank(m, &rect)?;
        Ok(cert.rank == self.rank)
    }
}

/// Integer arithmetic abstraction for the elimination: `i128` with checked
/// operations, or `BigInt` which never fails.
trait ElimInt: Clone + PartialEq {
    fn from_i64(v: i64) -> Self;
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn checked_mul(&self, other: &Self) -> Option<Self>;
    fn checked_sub(&self, other: &Self) -> Option<Self>;
    /// Exact division; the Bareiss update guarantees divisibility.
    fn div_exact(&self, other: &Self) -> Self;
    fn abs_lt(&self, other: &Self) -> bool;
}

impl ElimInt for i128 {
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn zero() -> Self {
        0
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn checked_mul(&self, other: &Self) -> Option<Self> {
        i128::checked_mul(*self, *other)
    }
    fn checked_sub(&self, other: &Self) -> Option<Self> {
        i128::checked_sub(*self, *other)
    }
    fn div_exact(&self, other: &Self) -> Self {
        debug_assert!(*other != 0 && self % other == 0, "Bareiss division must be exact");
        self / other
    }
    fn abs_lt(&self, other: &Self) -> bool {
        self.unsigned_abs() < other.unsigned_abs()
    }
}

impl ElimInt for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn checked_mul(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn checked_sub(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
    fn div_exact(&self, other: &Self) -> Self {
        debug_assert!(!Zero::is_zero(other) && Zero::is_zero(&(self % other)));
        self / other
    }
    fn abs_lt(&self, other: &Self) -> bool {
        self.abs() < other.abs()
    }
}

/// One fraction-free elimination pass. Returns `None` on arithmetic overflow
/// (only possible for `T = i128`).
fn bareiss<T: ElimInt>(
    m: &IntegralMatrix,
    rect: &Rectangle,
) -> Option<(usize, Vec<usize>, Vec<usize>)> {
    let n_rows = rect.rows().len();
    let n_cols = rect.cols().len();
    let mut work: Vec<Vec<T>> = rect
        .rows()
        .iter()
        .map(|&r| rect.cols().iter().map(|&c| T::from_i64(m.entry(r, c))).collect())
        .collect();
    // Track original positions through swaps.
    let mut row_perm: Vec<usize> = (0..n_rows).collect();
    let mut col_perm: Vec<usize> = (0..n_cols).collect();

    let mut prev = T::from_i64(1);
    let mut k = 0;
    while k < n_rows.min(n_cols) {
        // Full pivot search; smallest nonzero magnitude keeps intermediates small.
        let mut pivot: Option<(usize, usize)> = None;
        for i in k..n_rows {
            for j in k..n_cols {
                if work[i][j].is_zero() {
                    continue;
                }
                match pivot {
                    None => pivot = Some((i, j)),
                    Some((pi, pj)) => {
                        if work[i][j].abs_lt(&work[pi][pj]) {
                            pivot = Some((i, j));
                        }
                    }
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        work.swap(k, pi);
        row_perm.swap(k, pi);
        if pj != k {
            for row in work.iter_mut() {
                row.swap(k, pj);
            }
            col_perm.swap(k, pj);
        }

        let (pivot_row, rest) = work[k..].split_first_mut().expect("k < n_rows");
        let pivot_val = pivot_row[k].clone();
        for row in rest.iter_mut() {
            let lead = row[k].clone();
            for j in (k + 1)..n_cols {
                let a = row[j].checked_mul(&pivot_val)?;
                let b = lead.checked_mul(&pivot_row[j])?;
                row[j] = a.checked_sub(&b)?.div_exact(&prev);
            }
            row[k] = T::zero();
        }
        prev = pivot_val;
        k += 1;
    }

    let mut pivot_rows: Vec<usize> = row_perm[..k].iter().map(|&i| rect.rows()[i]).collect();
    let mut pivot_cols: Vec<usize> = col_perm[..k].iter().map(|&j| rect.cols()[j]).collect();
    pivot_rows.sort_unstable();
    pivot_cols.sort_unstable();
    Some((k, pivot_rows, pivot_cols))
}

/// Exact rank of the rectangle view of `m`, with a pivot certificate.
pub fn exact_rank(m: &IntegralMatrix, rect: &Rectangle) -> Result<RankCertificate> {
    m.check_rectangle(rect)?;
    if rect.is_empty() {
        return Err(Error::EmptyRectangle);
    }
    let (rank, pivot_rows, pivot_cols) = match bareiss::<i128>(m, rect) {
        Some(out) => out,
        None => bareiss::<BigInt>(m, rect).ok_or(Error::ExactOverflow)?,
    };
    Ok(RankCertificate { rank, pivot_rows, pivot_cols })
}

/// Exact rank of the whole matrix.
pub fn exact_rank_full(m: &IntegralMatrix) -> Result<RankCertificate> {
    exact_rank(m, &m.full_rectangle())
}
