//! Recursive two-party protocol trees over bounded integral matrices.
//!
//! Each internal node splits its submatrix around a monochromatic rectangle:
//! one of the two block arrangements is guaranteed to have rank at most
//! `floor(rank/2 + 3/2)`, and the speaker owning that axis announces with one
//! bit which side their input falls on. Bit 0 descends into the block
//! containing the rectangle (rank drops), bit 1 into the complement (size
//! drops), so the recursion terminates unconditionally. Views of rank at most
//! 2 become leaves where the row player sends at most two of their own
//! entries and the column player finishes the reconstruction exactly.
//!
//! Views are kept in root coordinates throughout. Duplicate rows and columns
//! are re-merged at every node before rectangle search (a rectangle over
//! representatives inflates back to the full view without losing
//! monochromaticity), so the leaf views always partition the root matrix
//! exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::matrix::{dedup_view, exact_rank, mono_stats, IntegralMatrix, Rectangle};
use crate::rat;
use crate::rect::{extract_mono, find_almost_mono, SamplerConfig};
use crate::rng;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    /// Owns the row index; speaks on row splits.
    Alice,
    /// Owns the column index; speaks on column splits.
    Bob,
}

/// Which block arrangement the split uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitCase {
    /// Bit 0 keeps the rectangle's rows (all columns); Alice speaks.
    RowBlock,
    /// Bit 0 keeps the rectangle's columns (all rows); Bob speaks.
    ColBlock,
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Internal {
        speaker: Speaker,
        /// The monochromatic rectangle the split was built around.
        split: Rectangle,
        child0: Box<ProtocolNode>,
        child1: Box<ProtocolNode>,
    },
    /// 1x1 view; the value is announced with zero additional bits.
    Entry { value: i64 },
    /// View of rank <= 2: `cols` holds the leftmost independent columns and
    /// `coeffs[t][j]` the exact coefficient of column `t` for the view's
    /// `j`-th column, so `M[a][b] = sum_t M[a][cols[t]] * coeffs[t][j]`.
    LowRank {
        cols: Vec<usize>,
        coeffs: Vec<Vec<BigRational>>,
    },
}

#[derive(Debug, Clone)]
pub struct ProtocolNode {
    /// Submatrix in root coordinates.
    pub view: Rectangle,
    /// Exact rank of the view.
    pub rank: usize,
    pub kind: NodeKind,
}

#[derive(Debug, Clone)]
pub struct ProtocolTree {
    pub root: ProtocolNode,
    pub delta: i64,
    /// Width of one base-case payload value: `ceil(log2(delta + 1))`.
    pub payload_bits: u32,
    pub n_rows: usize,
    pub n_cols: usize,
}

/// Caps on the recursive construction; termination is guaranteed without
/// them, they bound damage from misuse.
#[derive(Debug, Clone, Copy)]
pub struct BuildLimits {
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for BuildLimits {
    fn default() -> Self {
        Self { max_nodes: 1_000_000, max_depth: 10_000 }
    }
}

/// Supplies a monochromatic rectangle inside a (deduplicated) view.
pub trait RectangleFinder: Sync {
    fn find_mono(
        &self,
        m: &IntegralMatrix,
        view: &Rectangle,
        rank: usize,
        salt: u64,
    ) -> Result<Rectangle>;
}

/// The default finder: half-space sampling with fallbacks, then exact
/// extraction. Each node derives its own seed from the configured seed and
/// the node's salt, keeping builds reproducible.
pub struct SamplingFinder {
    pub config: SamplerConfig,
}

impl SamplingFinder {
    pub fn new(config: SamplerConfig) -> Self {
        Self { config }
    }
}

impl RectangleFinder for SamplingFinder {
    fn find_mono(
        &self,
        m: &IntegralMatrix,
        view: &Rectangle,
        rank: usize,
        salt: u64,
    ) -> Result<Rectangle> {
        let mut config = self.config.clone();
        config.seed = rng::mix(self.config.seed, salt);
        let outcome = find_almost_mono(m, view, rank, &config)?;
        extract_mono(m, &outcome.best.rect, rank.max(1))
    }
}

pub fn payload_width(delta: i64) -> u32 {
    if delta <= 0 {
        0
    } else {
        64 - (delta as u64).leading_zeros()
    }
}

/// Ranks relevant to a split: the view itself, the row block (rectangle rows
/// times all columns), and the column block (all rows times rectangle
/// columns).
struct SplitRanks {
    view: usize,
    row_block: usize,
    col_block: usize,
}

fn split_ranks(m: &IntegralMatrix, view: &Rectangle, mono: &Rectangle) -> Result<SplitRanks> {
    Ok(SplitRanks {
        view: exact_rank(m, view)?.rank,
        row_block: exact_rank(m, &view.restrict_rows(mono.rows().to_vec()))?.rank,
        col_block: exact_rank(m, &view.restrict_cols(mono.cols().to_vec()))?.rank,
    })
}

/// Halving bound `floor(rank/2 + 3/2)`.
pub fn rank_bound(rank: usize) -> usize {
    (rank + 3) / 2
}

/// Chooses the block arrangement whose rank is at most
/// `floor(rank(S)/2 + 3/2)`; at least one always qualifies for a rank <= 1
/// rectangle, and the row block is preferred when both do.
pub fn rank_reduce_case(
    m: &IntegralMatrix,
    view: &Rectangle,
    rect: &Rectangle,
) -> Result<SplitCase> {
    m.check_rectangle(view)?;
    if rect.is_empty() {
        return Err(Error::EmptyRectangle);
    }
    let rect_rank = exact_rank(m, rect)?.rank;
    if rect_rank > 1 {
        return Err(Error::PremiseViolation(format!(
            "split rectangle has rank {rect_rank}, need at most 1"
        )));
    }
    let ranks = split_ranks(m, view, rect)?;
    let bound = rank_bound(ranks.view);
    if ranks.row_block <= bound {
        Ok(SplitCase::RowBlock)
    } else if ranks.col_block <= bound {
        Ok(SplitCase::ColBlock)
    } else {
        unreachable!(
            "no block meets the halving bound: view {}, blocks {} and {}; \
             the block rank inequality excludes this",
            ranks.view, ranks.row_block, ranks.col_block
        );
    }
}

/// Case choice for the builder: like [`rank_reduce_case`] but refuses a
/// degenerate split (a rectangle spanning every row of the view makes the
/// row-block child equal to the view itself). When the rectangle spans all
/// rows, the column block has rank at most 3 and qualifies for every view of
/// rank at least 3, and symmetrically; both spanning would make the view
/// monochromatic, which cannot reach an internal node.
fn split_case_nondegenerate(ranks: &SplitRanks, view: &Rectangle, mono: &Rectangle) -> SplitCase {
    let bound = rank_bound(ranks.view);
    let row_degenerate = mono.rows().len() == view.rows().len();
    let col_degenerate = mono.cols().len() == view.cols().len();
    assert!(!(row_degenerate && col_degenerate), "split rectangle equals an internal view");
    if ranks.row_block <= bound && !row_degenerate {
        SplitCase::RowBlock
    } else if ranks.col_block <= bound && !col_degenerate {
        SplitCase::ColBlock
    } else if row_degenerate {
        assert!(
            ranks.col_block <= bound,
            "column block rank {} misses bound {bound} despite a full-row rectangle",
            ranks.col_block
        );
        SplitCase::ColBlock
    } else {
        assert!(
            ranks.row_block <= bound,
            "row block rank {} misses bound {bound} despite a full-column rectangle",
            ranks.row_block
        );
        SplitCase::RowBlock
    }
}

struct Builder<'a, F: RectangleFinder + ?Sized> {
    m: &'a IntegralMatrix,
    finder: &'a F,
    limits: BuildLimits,
    nodes: usize,
}

impl<F: RectangleFinder + ?Sized> Builder<'_, F> {
    fn build(&mut self, view: Rectangle, depth: usize) -> Result<ProtocolNode> {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes || depth > self.limits.max_depth {
            return Err(Error::BuildLimits { nodes: self.nodes, depth });
        }
        let rank = exact_rank(self.m, &view)?.rank;
        if view.area() == 1 {
            let value = self.m.entry(view.rows()[0], view.cols()[0]);
            return Ok(ProtocolNode { view, rank, kind: NodeKind::Entry { value } });
        }
        if rank <= 2 {
            let kind = self.lowrank_leaf(&view, rank)?;
            return Ok(ProtocolNode { view, rank, kind });
        }

        // Merge duplicate rows/columns for the search, then inflate back.
        let dd = dedup_view(self.m, &view)?;
        let mono_reduced = self.finder.find_mono(self.m, &dd.kept, rank, self.nodes as u64)?;
        if mono_reduced.is_empty() {
            return Err(Error::PremiseViolation("finder returned an empty rectangle".into()));
        }
        let mono = dd.inflate(&view, &mono_reduced);
        debug_assert!(mono_stats(self.m, &mono)?.is_monochromatic());

        let ranks = split_ranks(self.m, &view, &mono)?;
        let case = split_case_nondegenerate(&ranks, &view, &mono);
        let (speaker, view0, view1) = match case {
            SplitCase::RowBlock => {
                let complement: Vec<usize> = view
                    .rows()
                    .iter()
                    .filter(|r| !mono.contains_row(**r))
                    .copied()
                    .collect();
                (
                    Speaker::Alice,
                    view.restrict_rows(mono.rows().to_vec()),
                    view.restrict_rows(complement),
                )
            }
            SplitCase::ColBlock => {
                let complement: Vec<usize> = view
                    .cols()
                    .iter()
                    .filter(|c| !mono.contains_col(**c))
                    .copied()
                    .collect();
                (
                    Speaker::Bob,
                    view.restrict_cols(mono.cols().to_vec()),
                    view.restrict_cols(complement),
                )
            }
        };
        debug_assert!(!view0.is_empty() && !view1.is_empty());

        let child0 = Box::new(self.build(view0, depth + 1)?);
        let child1 = Box::new(self.build(view1, depth + 1)?);
        assert!(
            child0.rank <= rank_bound(rank),
            "0-child rank {} exceeds bound {} at view rank {rank}",
            child0.rank,
            rank_bound(rank)
        );
        Ok(ProtocolNode {
            view,
            rank,
            kind: NodeKind::Internal { speaker, split: mono, child0, child1 },
        })
    }

    /// Base case for rank <= 2: pick the leftmost independent columns and
    /// solve the exact coefficients expressing every view column in them.
    fn lowrank_leaf(&self, view: &Rectangle, rank: usize) -> Result<NodeKind> {
        let m = self.m;
        if rank == 0 {
            return Ok(NodeKind::LowRank { cols: Vec::new(), coeffs: Vec::new() });
        }
        let col_nonzero = |c: usize| view.rows().iter().any(|&r| m.entry(r, c) != 0);
        let c1 = *view
            .cols()
            .iter()
            .find(|&&c| col_nonzero(c))
            .expect("rank >= 1 view has a nonzero column");

        if rank == 1 {
            let r1 = *view
                .rows()
                .iter()
                .find(|&&r| m.entry(r, c1) != 0)
                .expect("nonzero column has a nonzero entry");
            let denom = BigInt::from(m.entry(r1, c1));
            let coeffs: Vec<BigRational> = view
                .cols()
                .iter()
                .map(|&b| BigRational::new(BigInt::from(m.entry(r1, b)), denom.clone()))
                .collect();
            self.check_leaf_reconstruction(view, &[c1], std::slice::from_ref(&coeffs));
            return Ok(NodeKind::LowRank { cols: vec![c1], coeffs: vec![coeffs] });
        }

        // rank == 2: find the first column independent of c1, i.e. not a
        // rational multiple of it. Cross products in i128 so large declared
        // bounds cannot overflow.
        let proportional = |c: usize| -> bool {
            let mut anchor: Option<(i128, i128)> = None;
            for &r in view.rows() {
                let (x1, x) = (m.entry(r, c1) as i128, m.entry(r, c) as i128);
                match anchor {
                    None => {
                        if x1 != 0 || x != 0 {
                            anchor = Some((x1, x));
                        }
                    }
                    Some((a1, a)) => {
                        if a1 * x != a * x1 {
                            return false;
                        }
                    }
                }
            }
            true
        };
        let c2 = *view
            .cols()
            .iter()
            .find(|&&c| c > c1 && !proportional(c))
            .expect("rank 2 view has a second independent column");

        // Pivot rows making the 2x2 system invertible.
        let r1 = *view
            .rows()
            .iter()
            .find(|&&r| m.entry(r, c1) != 0 || m.entry(r, c2) != 0)
            .expect("independent columns are not both zero");
        let det_with = |r2: usize| -> i128 {
            m.entry(r1, c1) as i128 * m.entry(r2, c2) as i128
                - m.entry(r1, c2) as i128 * m.entry(r2, c1) as i128
        };
        let r2 = *view
            .rows()
            .iter()
            .find(|&&r| r != r1 && det_with(r) != 0)
            .expect("rank 2 pair of columns has an invertible 2x2 minor");
        let det = BigRational::from(BigInt::from(det_with(r2)));

        let mut coeff1 = Vec::with_capacity(view.cols().len());
        let mut coeff2 = Vec::with_capacity(view.cols().len());
        for &b in view.cols() {
            let t1 = BigRational::from(BigInt::from(m.entry(r1, b)));
            let t2 = BigRational::from(BigInt::from(m.entry(r2, b)));
            let a11 = BigRational::from(BigInt::from(m.entry(r1, c1)));
            let a12 = BigRational::from(BigInt::from(m.entry(r1, c2)));
            let a21 = BigRational::from(BigInt::from(m.entry(r2, c1)));
            let a22 = BigRational::from(BigInt::from(m.entry(r2, c2)));
            coeff1.push((&t1 * &a22 - &t2 * &a12) / &det);
            coeff2.push((&t2 * &a11 - &t1 * &a21) / &det);
        }
        self.check_leaf_reconstruction(view, &[c1, c2], &[coeff1.clone(), coeff2.clone()]);
        Ok(NodeKind::LowRank { cols: vec![c1, c2], coeffs: vec![coeff1, coeff2] })
    }

    fn check_leaf_reconstruction(
        &self,
        view: &Rectangle,
        cols: &[usize],
        coeffs: &[Vec<BigRational>],
    ) {
        for &a in view.rows() {
            for (j, &b) in view.cols().iter().enumerate() {
                let mut value = BigRational::zero();
                for (t, &c) in cols.iter().enumerate() {
                    value += BigRational::from(BigInt::from(self.m.entry(a, c))) * &coeffs[t][j];
                }
                assert_eq!(
                    value,
                    BigRational::from(BigInt::from(self.m.entry(a, b))),
                    "leaf reconstruction failed at ({a}, {b})"
                );
            }
        }
    }
}

/// Builds the recursive protocol for the whole matrix.
pub fn build_protocol<F: RectangleFinder + ?Sized>(
    m: &IntegralMatrix,
    finder: &F,
    limits: BuildLimits,
) -> Result<ProtocolTree> {
    let mut builder = Builder { m, finder, limits, nodes: 0 };
    let root = builder.build(m.full_rectangle(), 0)?;
    Ok(ProtocolTree {
        root,
        delta: m.delta(),
        payload_bits: payload_width(m.delta()),
        n_rows: m.n_rows(),
        n_cols: m.n_cols(),
    })
}

/// A bit-level record of one protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub bits: Vec<(Speaker, u8)>,
    /// Base-case values the row player sent, each in `[0, delta]`.
    pub payload: Vec<i64>,
    pub output: i64,
    /// Width of each payload value in bits.
    pub payload_width: u32,
}

impl Transcript {
    /// Total bits exchanged: one per internal node plus the payload widths.
    pub fn bit_count(&self) -> usize {
        self.bits.len() + self.payload.len() * self.payload_width as usize
    }

    pub fn to_json(&self) -> Value {
        json!({
            "bits": self.bits.iter().map(|(s, b)| json!({
                "speaker": match s { Speaker::Alice => "alice", Speaker::Bob => "bob" },
                "bit": b,
            })).collect::<Vec<_>>(),
            "payload": self.payload,
            "payload_width": self.payload_width,
            "output": self.output,
            "bit_count": self.bit_count(),
        })
    }
}

/// Simulates the two agents on inputs `(a, b)`. Both know the tree; the row
/// player knows `a` (and reads only row `a` of the matrix), the column player
/// knows `b` and the coefficient tables.
pub fn run(tree: &ProtocolTree, m: &IntegralMatrix, a: usize, b: usize) -> Result<Transcript> {
    if a >= tree.n_rows {
        return Err(Error::IndexOutOfRange { axis: "rows", index: a, len: tree.n_rows });
    }
    if b >= tree.n_cols {
        return Err(Error::IndexOutOfRange { axis: "cols", index: b, len: tree.n_cols });
    }
    let mut node = &tree.root;
    let mut bits = Vec::new();
    loop {
        match &node.kind {
            NodeKind::Internal { speaker, child0, child1, .. } => {
                let bit = match speaker {
                    Speaker::Alice => u8::from(!child0.view.contains_row(a)),
                    Speaker::Bob => u8::from(!child0.view.contains_col(b)),
                };
                bits.push((*speaker, bit));
                node = if bit == 0 { child0 } else { child1 };
            }
            NodeKind::Entry { value } => {
                return Ok(Transcript {
                    bits,
                    payload: Vec::new(),
                    output: *value,
                    payload_width: tree.payload_bits,
                });
            }
            NodeKind::LowRank { cols, coeffs } => {
                let payload: Vec<i64> = cols.iter().map(|&c| m.entry(a, c)).collect();
                let local_b = node
                    .view
                    .cols()
                    .binary_search(&b)
                    .expect("run navigated to a leaf containing b");
                let mut value = BigRational::zero();
                for (t, &sent) in payload.iter().enumerate() {
                    value += BigRational::from(BigInt::from(sent)) * &coeffs[t][local_b];
                }
                assert!(value.denom().is_one(), "leaf output must be integral");
                let output = i64::try_from(value.numer().clone())
                    .expect("leaf output fits the entry type");
                debug_assert!(payload.iter().all(|&p| (0..=tree.delta).contains(&p)));
                return Ok(Transcript {
                    bits,
                    payload,
                    output,
                    payload_width: tree.payload_bits,
                });
            }
        }
    }
}

/// Aggregate statistics from exhaustive verification.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolStats {
    pub leaves: usize,
    pub internal_nodes: usize,
    /// Max bits on any root-leaf path (structural).
    pub depth: usize,
    /// Max transcript bit count over all input pairs.
    pub max_bits: usize,
    /// `(parent rank, 0-child rank)` per internal node, depth-first.
    pub rank_trajectory: Vec<(usize, usize)>,
    /// `-ln(|R| / |S|)` per internal node, depth-first.
    pub empirical_delta: Vec<f64>,
}

fn walk_tree(
    m: &IntegralMatrix,
    node: &ProtocolNode,
    cover: &mut [usize],
    n_cols: usize,
    stats: &mut ProtocolStats,
    payload_bits: u32,
) -> Result<usize> {
    match &node.kind {
        NodeKind::Internal { split, child0, child1, .. } => {
            stats.internal_nodes += 1;
            if exact_rank(m, split)?.rank > 1 {
                return Err(Error::PremiseViolation(
                    "internal split rectangle not rank <= 1".into(),
                ));
            }
            if child0.rank > rank_bound(node.rank) {
                return Err(Error::PremiseViolation(format!(
                    "0-child rank {} exceeds bound {}",
                    child0.rank,
                    rank_bound(node.rank)
                )));
            }
            stats.rank_trajectory.push((node.rank, child0.rank));
            stats
                .empirical_delta
                .push(-((split.area() as f64 / node.view.area() as f64).ln()));
            let d0 = walk_tree(m, child0, cover, n_cols, stats, payload_bits)?;
            let d1 = walk_tree(m, child1, cover, n_cols, stats, payload_bits)?;
            Ok(1 + d0.max(d1))
        }
        NodeKind::Entry { .. } => {
            stats.leaves += 1;
            for &r in node.view.rows() {
                for &c in node.view.cols() {
                    cover[r * n_cols + c] += 1;
                }
            }
            Ok(0)
        }
        NodeKind::LowRank { cols, .. } => {
            stats.leaves += 1;
            for &r in node.view.rows() {
                for &c in node.view.cols() {
                    cover[r * n_cols + c] += 1;
                }
            }
            Ok(cols.len() * payload_bits as usize)
        }
    }
}

/// Runs every input pair, checks outputs against the matrix, and checks that
/// the leaf views exactly partition it.
pub fn verify_all(tree: &ProtocolTree, m: &IntegralMatrix) -> Result<ProtocolStats> {
    if tree.n_rows != m.n_rows() || tree.n_cols != m.n_cols() {
        return Err(Error::ShapeMismatch("tree was built for a different shape".into()));
    }
    let mut stats = ProtocolStats {
        leaves: 0,
        internal_nodes: 0,
        depth: 0,
        max_bits: 0,
        rank_trajectory: Vec::new(),
        empirical_delta: Vec::new(),
    };
    let mut cover = vec![0usize; m.n_rows() * m.n_cols()];
    stats.depth = walk_tree(m, &tree.root, &mut cover, m.n_cols(), &mut stats, tree.payload_bits)?;
    for (idx, &count) in cover.iter().enumerate() {
        if count != 1 {
            return Err(Error::LeafCover {
                row: idx / m.n_cols(),
                col: idx % m.n_cols(),
                count,
            });
        }
    }

    let pairs: Vec<(usize, usize)> = (0..m.n_rows())
        .flat_map(|a| (0..m.n_cols()).map(move |b| (a, b)))
        .collect();
    let bit_counts: Vec<usize> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let t = run(tree, m, a, b)?;
            if t.output != m.entry(a, b) {
                return Err(Error::VerifyMismatch {
                    row: a,
                    col: b,
                    expected: m.entry(a, b),
                    got: t.output,
                });
            }
            Ok(t.bit_count())
        })
        .collect::<Result<_>>()?;
    stats.max_bits = bit_counts.into_iter().max().unwrap_or(0);
    debug_assert_eq!(stats.max_bits, stats.depth);
    Ok(stats)
}

impl ProtocolTree {
    /// Depth-first leaves, 0-child before 1-child.
    pub fn leaves(&self) -> Vec<&ProtocolNode> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match &node.kind {
                NodeKind::Internal { child0, child1, .. } => {
                    stack.push(child1);
                    stack.push(child0);
                }
                _ => out.push(node),
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        fn node_json(node: &ProtocolNode) -> Value {
            let view = json!({ "rows": node.view.rows(), "cols": node.view.cols() });
            match &node.kind {
                NodeKind::Internal { speaker, split, child0, child1 } => json!({
                    "kind": "internal",
                    "view": view,
                    "rank": node.rank,
                    "speaker": match speaker { Speaker::Alice => "alice", Speaker::Bob => "bob" },
                    "split": { "rows": split.rows(), "cols": split.cols() },
                    "child0": node_json(child0),
                    "child1": node_json(child1),
                }),
                NodeKind::Entry { value } => json!({
                    "kind": "entry",
                    "view": view,
                    "rank": node.rank,
                    "value": value,
                }),
                NodeKind::LowRank { cols, coeffs } => json!({
                    "kind": "lowrank",
                    "view": view,
                    "rank": node.rank,
                    "cols": cols,
                    "coeffs": coeffs
                        .iter()
                        .map(|row| row.iter().map(rat::to_string).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                }),
            }
        }
        json!({
            "delta": self.delta,
            "payload_bits": self.payload_bits,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "root": node_json(&self.root),
        })
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::exact_rank_full;

    fn finder(seed: u64) -> SamplingFinder {
        let mut config = SamplerConfig::new(seed);
        config.samples = 32;
        config.k_sweep = (0, 4);
        SamplingFinder::new(config)
    }

    fn random_matrix(rng: &mut rand_chacha::ChaCha12Rng, n: usize, delta: i64) -> IntegralMatrix {
        use rand::Rng;
        let rows: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(0..=delta)).collect())
            .collect();
        IntegralMatrix::from_rows_with_delta(rows, delta).unwrap()
    }

    #[test]
    fn single_entry_matrix_needs_no_bits() {
        let m = IntegralMatrix::from_rows(vec![vec![2]]).unwrap();
        let tree = build_protocol(&m, &finder(1), BuildLimits::default()).unwrap();
        assert!(matches!(tree.root.kind, NodeKind::Entry { value: 2 }));
        let t = run(&tree, &m, 0, 0).unwrap();
        assert_eq!(t.output, 2);
        assert_eq!(t.bit_count(), 0);
    }

    #[test]
    fn rank_one_matrix_is_a_single_leaf() {
        let m = IntegralMatrix::from_rows(vec![vec![1; 4]; 3]).unwrap();
        let tree = build_protocol(&m, &finder(1), BuildLimits::default()).unwrap();
        match &tree.root.kind {
            NodeKind::LowRank { cols, .. } => assert_eq!(cols.len(), 1),
            other => panic!("expected a low-rank leaf, got {other:?}"),
        }
        // One payload value of one bit; the column player outputs 1.
        let t = run(&tree, &m, 1, 2).unwrap();
        assert_eq!(t.output, 1);
        assert_eq!(t.payload, vec![1]);
        assert_eq!(t.bit_count(), 1);
    }

    #[test]
    fn rank_zero_matrix_outputs_zero_without_bits() {
        let m = IntegralMatrix::from_rows_with_delta(vec![vec![0; 3]; 3], 2).unwrap();
        let tree = build_protocol(&m, &finder(1), BuildLimits::default()).unwrap();
        let t = run(&tree, &m, 2, 1).unwrap();
        assert_eq!(t.output, 0);
        assert_eq!(t.bit_count(), 0);
    }

    #[test]
    fn zero_children_halve_rank() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(88);
        let m = random_matrix(&mut rng, 8, 1);
        let tree = build_protocol(&m, &finder(9), BuildLimits::default()).unwrap();
        let stats = verify_all(&tree, &m).unwrap();
        for &(parent, child) in &stats.rank_trajectory {
            assert!(child <= rank_bound(parent), "{child} > bound of {parent}");
        }
    }

    #[test]
    fn exhaustive_verification_on_random_matrices() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1234);
        for trial in 0..8 {
            let n = 4 + (trial % 5);
            let delta = 1 + (trial as i64 % 3);
            let m = random_matrix(&mut rng, n, delta);
            let tree = build_protocol(&m, &finder(trial as u64), BuildLimits::default()).unwrap();
            let stats = verify_all(&tree, &m).unwrap();
            assert!(stats.leaves >= 1);
            let leaf_area: usize = tree.leaves().iter().map(|l| l.view.area()).sum();
            assert_eq!(leaf_area, n * n);
        }
    }

    #[test]
    fn constant_matrix_has_one_leaf() {
        let m = IntegralMatrix::from_rows(vec![vec![3; 6]; 4]).unwrap();
        let tree = build_protocol(&m, &finder(0), BuildLimits::default()).unwrap();
        let stats = verify_all(&tree, &m).unwrap();
        assert_eq!(stats.leaves, 1);
        assert_eq!(stats.internal_nodes, 0);
    }

    #[test]
    fn build_limits_are_enforced() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 8, 3);
        let limits = BuildLimits { max_nodes: 2, max_depth: 10_000 };
        match build_protocol(&m, &finder(0), limits) {
            Err(Error::BuildLimits { .. }) => {}
            other => panic!("expected a limits error, got {other:?}"),
        }
    }

    #[test]
    fn duplicated_rows_still_covered_exactly() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(55);
        let base = random_matrix(&mut rng, 5, 2);
        // Duplicate every row and column.
        let rows: Vec<Vec<i64>> = (0..10)
            .map(|i| (0..10).map(|j| base.entry(i / 2, j / 2)).collect())
            .collect();
        let m = IntegralMatrix::from_rows_with_delta(rows, 2).unwrap();
        let tree = build_protocol(&m, &finder(7), BuildLimits::default()).unwrap();
        verify_all(&tree, &m).unwrap();
    }

    #[test]
    fn transcripts_and_trees_serialize_deterministically() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 6, 2);
        let t1 = build_protocol(&m, &finder(11), BuildLimits::default()).unwrap();
        let t2 = build_protocol(&m, &finder(11), BuildLimits::default()).unwrap();
        assert_eq!(t1.to_json_string(), t2.to_json_string());
        let run1 = run(&t1, &m, 3, 4).unwrap().to_json().to_string();
        let run2 = run(&t2, &m, 3, 4).unwrap().to_json().to_string();
        assert_eq!(run1, run2);
    }

    #[test]
    fn rank_reduce_case_on_monochromatic_view() {
        // The whole view is monochromatic: both blocks have rank <= 1 and the
        // row block is preferred.
        let m = IntegralMatrix::from_rows(vec![vec![1; 3]; 3]).unwrap();
        let case = rank_reduce_case(&m, &m.full_rectangle(), &m.full_rectangle()).unwrap();
        assert_eq!(case, SplitCase::RowBlock);
    }

    #[test]
    fn rank_reduce_case_rejects_high_rank_rectangles() {
        let m = IntegralMatrix::from_rows(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let err = rank_reduce_case(&m, &m.full_rectangle(), &m.full_rectangle()).unwrap_err();
        assert!(matches!(err, Error::PremiseViolation(_)));
    }

    #[test]
    fn rank_reduce_case_meets_bound_on_planted_rectangles() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(606);
        for _ in 0..200 {
            let n = rng.random_range(4..9);
            let delta = 2i64;
            // Constant block planted in the top-left corner.
            let bi = rng.random_range(1..n);
            let bj = rng.random_range(1..n);
            let color = rng.random_range(0..=delta);
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i < bi && j < bj {
                                color
                            } else {
                                rng.random_range(0..=delta)
                            }
                        })
                        .collect()
                })
                .collect();
            let m = IntegralMatrix::from_rows_with_delta(rows, delta).unwrap();
            let view = m.full_rectangle();
            let rect = Rectangle::new((0..bi).collect(), (0..bj).collect()).unwrap();
            let case = rank_reduce_case(&m, &view, &rect).unwrap();
            let view_rank = exact_rank_full(&m).unwrap().rank;
            let block = match case {
                SplitCase::RowBlock => view.restrict_rows(rect.rows().to_vec()),
                SplitCase::ColBlock => view.restrict_cols(rect.cols().to_vec()),
            };
            let block_rank = exact_rank(&m, &block).unwrap().rank;
            assert!(block_rank <= rank_bound(view_rank));
        }
    }

    /// Returns the view's rows times its first constant column, else a 1x1
    /// rectangle; exercises splits that span every row of the view.
    struct ConstantColumnFinder;

    impl RectangleFinder for ConstantColumnFinder {
        fn find_mono(
            &self,
            m: &IntegralMatrix,
            view: &Rectangle,
            _rank: usize,
            _salt: u64,
        ) -> crate::Result<Rectangle> {
            for &c in view.cols() {
                let first = m.entry(view.rows()[0], c);
                if view.rows().iter().all(|&r| m.entry(r, c) == first) {
                    return Rectangle::new(view.rows().to_vec(), vec![c]);
                }
            }
            Rectangle::new(vec![view.rows()[0]], vec![view.cols()[0]])
        }
    }

    #[test]
    fn full_row_span_rectangle_forces_the_column_case() {
        // Rank 3 with an all-zero column: the found rectangle spans every
        // row, so the row case would recurse on the view itself. The build
        // must take the column case and still verify.
        let m = IntegralMatrix::from_rows(vec![
            vec![0, 1, 0, 0],
            vec![0, 0, 1, 0],
            vec![0, 0, 0, 1],
            vec![0, 1, 1, 1],
        ])
        .unwrap();
        assert_eq!(exact_rank_full(&m).unwrap().rank, 3);
        let tree = build_protocol(&m, &ConstantColumnFinder, BuildLimits::default()).unwrap();
        verify_all(&tree, &m).unwrap();
        match &tree.root.kind {
            NodeKind::Internal { speaker, split, .. } => {
                assert_eq!(split.rows().len(), 4, "the split spans every row");
                assert_eq!(*speaker, Speaker::Bob, "the column case must be chosen");
            }
            other => panic!("expected an internal root, got {other:?}"),
        }
    }

    #[test]
    fn full_column_span_rectangle_forces_the_row_case() {
        let m = IntegralMatrix::from_rows(vec![
            vec![0, 0, 0, 0],
            vec![1, 0, 0, 1],
            vec![0, 1, 0, 1],
            vec![0, 0, 1, 1],
        ])
        .unwrap();
        assert_eq!(exact_rank_full(&m).unwrap().rank, 3);
        // Transposed flavor of the finder: rows of a constant row.
        struct ConstantRowFinder;
        impl RectangleFinder for ConstantRowFinder {
            fn find_mono(
                &self,
                m: &IntegralMatrix,
                view: &Rectangle,
                _rank: usize,
                _salt: u64,
            ) -> crate::Result<Rectangle> {
                for &r in view.rows() {
                    let first = m.entry(r, view.cols()[0]);
                    if view.cols().iter().all(|&c| m.entry(r, c) == first) {
                        return Rectangle::new(vec![r], view.cols().to_vec());
                    }
                }
                Rectangle::new(vec![view.rows()[0]], vec![view.cols()[0]])
            }
        }
        let tree = build_protocol(&m, &ConstantRowFinder, BuildLimits::default()).unwrap();
        verify_all(&tree, &m).unwrap();
        match &tree.root.kind {
            NodeKind::Internal { speaker, split, .. } => {
                assert_eq!(split.cols().len(), 4, "the split spans every column");
                assert_eq!(*speaker, Speaker::Alice, "the row case must be chosen");
            }
            other => panic!("expected an internal root, got {other:?}"),
        }
    }

    #[test]
    fn rank_bound_arithmetic() {
        // floor(rank/2 + 3/2): a rank 2 view admits any block of rank <= 2.
        assert_eq!(rank_bound(2), 2);
        assert_eq!(rank_bound(3), 3);
        assert_eq!(rank_bound(4), 3);
        assert_eq!(rank_bound(7), 5);
    }
}
