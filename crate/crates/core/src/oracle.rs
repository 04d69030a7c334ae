//! Independent brute-force and statistical references.
//!
//! Everything here exists to check the main code paths from a different
//! direction: rank by rational Gaussian elimination instead of fraction-free
//! elimination, maximum monochromatic rectangles by exhaustive row-subset
//! enumeration, and hyperplane-rounding probabilities by direct Monte Carlo.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::Error;
use crate::matrix::{IntegralMatrix, Rectangle};
use crate::rng;
use crate::Result;

/// Caps for the exhaustive searches.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    /// Row-subset enumeration refuses above this many rows (after orienting
    /// the matrix so the enumerated side is the smaller one).
    pub max_rows_for_enumeration: usize,
    pub monte_carlo_trials: usize,
    pub seed: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_rows_for_enumeration: 10, monte_carlo_trials: 10_000, seed: 0 }
    }
}

/// Exact maximum-area monochromatic rectangle by exhaustive enumeration.
///
/// Enumerates all nonempty subsets of the smaller dimension; for each subset
/// and color, the best column set is exactly the columns constant with that
/// color on the subset. If `color` is given only that color is considered.
/// Deterministic: ties resolve to the smaller color, then the earlier subset.
pub fn brute_max_mono_rect(
    m: &IntegralMatrix,
    color: Option<i64>,
    budget: &OracleBudget,
) -> Result<(Rectangle, i64)> {
    let transpose = m.n_cols() < m.n_rows();
    let (n_sub, n_other) = if transpose {
        (m.n_cols(), m.n_rows())
    } else {
        (m.n_rows(), m.n_cols())
    };
    if n_sub > budget.max_rows_for_enumeration {
        return Err(Error::EnumerationCap { rows: n_sub, cap: budget.max_rows_for_enumeration });
    }
    let at = |sub: usize, other: usize| -> i64 {
        if transpose {
            m.entry(other, sub)
        } else {
            m.entry(sub, other)
        }
    };
    let colors: Vec<i64> = match color {
        Some(c) => vec![c],
        None => (0..=m.delta()).collect(),
    };

    let mut best: Option<(usize, i64, Vec<usize>, Vec<usize>)> = None;
    for mask in 1u64..(1u64 << n_sub) {
        let subset: Vec<usize> = (0..n_sub).filter(|&i| mask >> i & 1 == 1).collect();
        for &c in &colors {
            let others: Vec<usize> = (0..n_other)
                .filter(|&j| subset.iter().all(|&i| at(i, j) == c))
                .collect();
            if others.is_empty() {
                continue;
            }
            let area = subset.len() * others.len();
            let better = match &best {
                None => true,
                Some((ba, bc, _, _)) => area > *ba || (area == *ba && c < *bc),
            };
            if better {
                best = Some((area, c, subset.clone(), others));
            }
        }
    }
    match best {
        Some((_, c, subset, others)) => {
            let rect = if transpose {
                Rectangle::new(others, subset)?
            } else {
                Rectangle::new(subset, others)?
            };
            Ok((rect, c))
        }
        None => Ok((Rectangle::empty(), 0)),
    }
}

/// Exact maximum-area rectangle whose non-`i` fraction is at most
/// `1/(16 rank)` for some color `i`, by row-subset enumeration.
///
/// For a fixed row subset and color, sorting columns by their count of
/// off-color entries and taking the longest feasible prefix is optimal, so
/// the search is exact.
pub fn brute_max_almost_mono_rect(
    m: &IntegralMatrix,
    rank: usize,
    budget: &OracleBudget,
) -> Result<(Rectangle, i64)> {
    if m.n_rows() > budget.max_rows_for_enumeration {
        return Err(Error::EnumerationCap {
            rows: m.n_rows(),
            cap: budget.max_rows_for_enumeration,
        });
    }
    if rank == 0 {
        return Ok((m.full_rectangle(), 0));
    }
    let n_rows = m.n_rows();
    let n_cols = m.n_cols();
    let mut best: Option<(usize, i64, Vec<usize>, Vec<usize>)> = None;
    for mask in 1u64..(1u64 << n_rows) {
        let subset: Vec<usize> = (0..n_rows).filter(|&i| mask >> i & 1 == 1).collect();
        for c in 0..=m.delta() {
            // Columns ordered by how many off-color entries they bring in.
            let mut cols: Vec<(usize, usize)> = (0..n_cols)
                .map(|j| {
                    let off = subset.iter().filter(|&&i| m.entry(i, j) != c).count();
                    (off, j)
                })
                .collect();
            cols.sort_unstable();
            let mut off_total = 0usize;
            let mut taken: Vec<usize> = Vec::new();
            let mut feasible_len = 0usize;
            for (off, j) in cols {
                off_total += off;
                taken.push(j);
                // fraction of off-color entries <= 1/(16 rank), exactly.
                if off_total * 16 * rank <= subset.len() * taken.len() {
                    feasible_len = taken.len();
                }
            }
            if feasible_len == 0 {
                continue;
            }
            taken.truncate(feasible_len);
            taken.sort_unstable();
            let area = subset.len() * feasible_len;
            let better = match &best {
                None => true,
                Some((ba, bc, _, _)) => area > *ba || (area == *ba && c < *bc),
            };
            if better {
                best = Some((area, c, subset.clone(), taken));
            }
        }
    }
    match best {
        Some((_, c, rows, cols)) => Ok((Rectangle::new(rows, cols)?, c)),
        None => Ok((Rectangle::empty(), 0)),
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Empirical probability that a standard Gaussian lands nonnegatively against
/// both vectors: `Pr[<g,u> >= 0 and <g,v> >= 0]`.
pub fn monte_carlo_sheppard(u: &[f64], v: &[f64], trials: usize, seed: u64) -> Result<McEstimate> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector dims differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.iter().all(|&x| x == 0.0) || v.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut rng = rng::stream(seed, 0);
    let mut hits = 0usize;
    for _ in 0..trials {
        let g = rng::gaussian_vector(&mut rng, u.len());
        let du: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
        let dv: f64 = g.iter().zip(v).map(|(a, b)| a * b).sum();
        if du >= 0.0 && dv >= 0.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Rank by rational Gaussian elimination with partial pivoting.
///
/// Deliberately a different code path from the fraction-free elimination so
/// the two can cross-check each other.
#[allow(clippy::needless_range_loop)] // updates row i against row rank in place
pub fn brute_rank(m: &IntegralMatrix, rect: &Rectangle) -> Result<usize> {
    m.check_rectangle(rect)?;
    if rect.is_empty() {
        return Err(Error::EmptyRectangle);
    }
    let n_rows = rect.rows().len();
    let n_cols = rect.cols().len();
    let mut work: Vec<Vec<BigRational>> = rect
        .rows()
        .iter()
        .map(|&r| {
            rect.cols()
                .iter()
                .map(|&c| BigRational::from(BigInt::from(m.entry(r, c))))
                .collect()
        })
        .collect();
    let mut rank = 0usize;
    let mut col = 0usize;
    while rank < n_rows && col < n_cols {
        let Some(pivot_row) = (rank..n_rows).find(|&i| !work[i][col].is_zero()) else {
            col += 1;
            continue;
        };
        work.swap(rank, pivot_row);
        let pivot = work[rank][col].clone();
        for i in (rank + 1)..n_rows {
            if work[i][col].is_zero() {
                continue;
            }
            let factor = &work[i][col] / &pivot;
            for j in col..n_cols {
                let sub = &factor * &work[rank][j];
                work[i][j] -= sub;
            }
        }
        rank += 1;
        col += 1;
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::exact_rank_full;

    fn identity(n: usize) -> IntegralMatrix {
        let rows: Vec<Vec<i64>> =
            (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        IntegralMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn brute_rank_identity_and_outer_product() {
        assert_eq!(brute_rank(&identity(4), &identity(4).full_rectangle()).unwrap(), 4);
        // rank-1 outer product
        let m = IntegralMatrix::from_rows(vec![vec![0, 2, 4], vec![0, 1, 2], vec![0, 3, 6]])
            .unwrap();
        assert_eq!(brute_rank(&m, &m.full_rectangle()).unwrap(), 1);
    }

    #[test]
    fn brute_rank_agrees_with_exact_rank() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(500);
        for _ in 0..500 {
            let n_rows = rng.random_range(1..9);
            let n_cols = rng.random_range(1..9);
            let rows: Vec<Vec<i64>> = (0..n_rows)
                .map(|_| (0..n_cols).map(|_| rng.random_range(0..4)).collect())
                .collect();
            let m = IntegralMatrix::from_rows_with_delta(rows, 3).unwrap();
            let brute = brute_rank(&m, &m.full_rectangle()).unwrap();
            let fast = exact_rank_full(&m).unwrap().rank;
            assert_eq!(brute, fast);
        }
    }

    #[test]
    fn max_mono_on_constant_matrix_is_everything() {
        let m = IntegralMatrix::from_rows(vec![vec![2; 5]; 4]).unwrap();
        let (rect, color) = brute_max_mono_rect(&m, None, &OracleBudget::default()).unwrap();
        assert_eq!(rect.area(), 20);
        assert_eq!(color, 2);
    }

    #[test]
    fn max_mono_on_two_by_two_identity() {
        // Enumeration: single rows give area 1 (one off-diagonal zero or the
        // diagonal one); the paired rows have no constant column. Max area 1.
        let m = identity(2);
        let (rect, _color) = brute_max_mono_rect(&m, None, &OracleBudget::default()).unwrap();
        assert_eq!(rect.area(), 1);
    }

    #[test]
    fn enumeration_cap_enforced() {
        let m = IntegralMatrix::from_rows(vec![vec![0; 2]; 12]).unwrap();
        // 12 rows but only 2 columns: enumeration runs over columns, fine.
        assert!(brute_max_mono_rect(&m, None, &OracleBudget::default()).is_ok());
        let wide = IntegralMatrix::from_rows(vec![vec![0; 12]; 12]).unwrap();
        let err = brute_max_mono_rect(&wide, None, &OracleBudget::default()).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { .. }));
    }

    #[test]
    fn sheppard_estimates_anchor_cases() {
        let u = vec![1.0, 0.0];
        let same = monte_carlo_sheppard(&u, &u, 20_000, 1).unwrap();
        assert!((same.estimate - 0.5).abs() < 5.0 * same.std_error.max(1e-3));
        let v = vec![0.0, 1.0];
        let orth = monte_carlo_sheppard(&u, &v, 20_000, 2).unwrap();
        assert!((orth.estimate - 0.25).abs() < 5.0 * orth.std_error.max(1e-3));
        let neg = vec![-1.0, 0.0];
        let opp = monte_carlo_sheppard(&u, &neg, 20_000, 3).unwrap();
        assert!(opp.estimate < 1e-9);
        assert!(monte_carlo_sheppard(&u, &[0.0, 0.0], 10, 0).is_err());
    }
}
