//! Property tests for the exact-arithmetic invariants.

use proptest::collection::vec;
use proptest::prelude::*;

use logrank::gamma2::{factorize_bounded, pad_to_equal_norm};
use logrank::matrix::{deduplicate, exact_rank_full, IntegralMatrix, Rectangle};
use logrank::oracle::brute_rank;
use logrank::rect::score;

fn arb_matrix(max_side: usize, delta: i64) -> impl Strategy<Value = IntegralMatrix> {
    (1..=max_side, 1..=max_side).prop_flat_map(move |(n_rows, n_cols)| {
        vec(0..=delta, n_rows * n_cols).prop_map(move |entries| {
            IntegralMatrix::new(n_rows, n_cols, delta, entries).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Fraction-free elimination agrees with independent rational elimination.
    #[test]
    fn rank_agrees_with_rational_oracle(m in arb_matrix(10, 3)) {
        let fast = exact_rank_full(&m).unwrap();
        let slow = brute_rank(&m, &m.full_rectangle()).unwrap();
        prop_assert_eq!(fast.rank, slow);
        prop_assert!(fast.rank <= m.n_rows().min(m.n_cols()));
        prop_assert!(fast.check(&m).unwrap());
    }

    /// Deduplication preserves rank and reconstructs the original entrywise.
    #[test]
    #[allow(clippy::needless_range_loop)]
    fn dedup_preserves_rank_and_entries(m in arb_matrix(9, 2)) {
        let (reduced, row_map, col_map) = deduplicate(&m).unwrap();
        prop_assert_eq!(
            exact_rank_full(&reduced).unwrap().rank,
            exact_rank_full(&m).unwrap().rank
        );
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                prop_assert_eq!(m.entry(i, j), reduced.entry(row_map[i], col_map[j]));
            }
        }
    }

    /// The rectangle score is invariant under consistent row/column
    /// permutations of the matrix and the rectangle.
    #[test]
    fn score_is_permutation_invariant(
        m in arb_matrix(8, 3),
        row_seed in any::<u64>(),
        col_seed in any::<u64>(),
        color in 0..=3i64,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let rect = Rectangle::new(
            (0..m.n_rows()).step_by(2).collect(),
            (0..m.n_cols()).step_by(2).collect(),
        ).unwrap();
        let base = score(&m, &rect, color, 2).unwrap();

        let mut row_perm: Vec<usize> = (0..m.n_rows()).collect();
        row_perm.shuffle(&mut rand_chacha::ChaCha12Rng::seed_from_u64(row_seed));
        let mut col_perm: Vec<usize> = (0..m.n_cols()).collect();
        col_perm.shuffle(&mut rand_chacha::ChaCha12Rng::seed_from_u64(col_seed));
        let rows: Vec<Vec<i64>> = (0..m.n_rows())
            .map(|i| (0..m.n_cols()).map(|j| m.entry(row_perm[i], col_perm[j])).collect())
            .collect();
        let permuted = IntegralMatrix::from_rows_with_delta(rows, m.delta()).unwrap();
        // The image of the rectangle under the inverse permutation.
        let mut new_rows: Vec<usize> = (0..m.n_rows())
            .filter(|&i| rect.contains_row(row_perm[i]))
            .collect();
        new_rows.sort_unstable();
        let mut new_cols: Vec<usize> = (0..m.n_cols())
            .filter(|&j| rect.contains_col(col_perm[j]))
            .collect();
        new_cols.sort_unstable();
        let moved = Rectangle::new(new_rows, new_cols).unwrap();
        prop_assert_eq!(score(&permuted, &moved, color, 2).unwrap(), base);
    }

    /// Padding to a common norm never changes any pairwise inner product.
    #[test]
    fn padding_preserves_inner_products(m in arb_matrix(6, 3), extra in 0.0..2.0f64) {
        let rank = exact_rank_full(&m).unwrap().rank;
        prop_assume!(rank > 0);
        let f = match factorize_bounded(&m, &m.full_rectangle(), rank, 1e-8) {
            Ok(f) => f,
            Err(_) => return Ok(()), // budget miss is reported, not hidden
        };
        let s = f.max_norm() * (1.0 + 1e-12) + extra;
        let padded = pad_to_equal_norm(&f, s).unwrap();
        for a in 0..m.n_rows() {
            for b in 0..m.n_cols() {
                let before = f.inner(a, b);
                let after = padded.inner(a, b);
                prop_assert!((before - after).abs() <= 1e-12 * (1.0 + before.abs()));
            }
        }
    }
}
