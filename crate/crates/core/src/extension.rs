//! Polytope pairs, slack matrices, and extended formulations.
//!
//! A [`PolytopePair`] is an inner polytope given by vertices and an outer one
//! given by inequalities. Its partial slack matrix, when integral and
//! bounded, feeds the protocol machinery: the protocol tree's leaves split
//! into monochromatic rectangles, each a nonnegative rank-1 term, giving an
//! exact nonnegative factorization `S = U V`. The factorization in turn lifts
//! the outer polytope's inequality system to `{(x, y) : A x + U y = b,
//! y >= 0}`, whose projection is sandwiched between the two polytopes and has
//! at most `inner_dim` facets.
//!
//! All polytope data is exact rational; floats appear only in reports.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::matrix::{exact_rank_full, IntegralMatrix};
use crate::protocol::{NodeKind, ProtocolTree};
use crate::rat;
use crate::Result;

/// An inner polytope `P = conv(vertices)` inside an outer polytope
/// `Q = {x : A x <= b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopePair {
    /// Ambient dimension `n`.
    pub dim: usize,
    /// Vertices of the inner polytope, each of length `dim`.
    pub vertices: Vec<Vec<BigRational>>,
    /// Inequality matrix of the outer polytope, `f x dim`.
    pub ineq_matrix: Vec<Vec<BigRational>>,
    /// Right-hand sides, length `f`.
    pub ineq_rhs: Vec<BigRational>,
}

impl PolytopePair {
    /// Validates shapes and the containment `P ⊆ Q` (every vertex satisfies
    /// every inequality).
    pub fn new(
        dim: usize,
        vertices: Vec<Vec<BigRational>>,
        ineq_matrix: Vec<Vec<BigRational>>,
        ineq_rhs: Vec<BigRational>,
    ) -> Result<Self> {
        if vertices.is_empty() || ineq_matrix.is_empty() {
            return Err(Error::InvalidInstance(
                "need at least one vertex and one inequality".into(),
            ));
        }
        if ineq_matrix.len() != ineq_rhs.len() {
            return Err(Error::InvalidInstance("inequality rows and rhs differ".into()));
        }
        if vertices.iter().any(|v| v.len() != dim) || ineq_matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInstance(format!("rows must have dimension {dim}")));
        }
        let pair = Self { dim, vertices, ineq_matrix, ineq_rhs };
        for (j, vertex) in pair.vertices.iter().enumerate() {
            for (i, row) in pair.ineq_matrix.iter().enumerate() {
                if dot(row, vertex) > pair.ineq_rhs[i] {
                    return Err(Error::VertexOutsideOuter { vertex: j, facet: i });
                }
            }
        }
        Ok(pair)
    }

    pub fn n_facets(&self) -> usize {
        self.ineq_matrix.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Parses `{"n": .., "vertices": [[..]], "A": [[..]], "b": [..]}` where
    /// each number is a JSON integer or a `"p/q"` string.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let dim = value
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("missing integer field `n`".into()))? as usize;
        let matrix = |field: &str| -> Result<Vec<Vec<BigRational>>> {
            value
                .get(field)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse(format!("missing array field `{field}`")))?
                .iter()
                .map(|row| {
                    row.as_array()
                        .ok_or_else(|| Error::Parse(format!("`{field}` rows must be arrays")))?
                        .iter()
                        .map(rational_from_value)
                        .collect()
                })
                .collect()
        };
        let rhs: Vec<BigRational> = value
            .get("b")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing array field `b`".into()))?
            .iter()
            .map(rational_from_value)
            .collect::<Result<_>>()?;
        Self::new(dim, matrix("vertices")?, matrix("A")?, rhs)
    }

    pub fn to_json(&self) -> Value {
        let fmt_matrix = |m: &[Vec<BigRational>]| -> Value {
            json!(m
                .iter()
                .map(|row| row.iter().map(rat::to_string).collect::<Vec<_>>())
                .collect::<Vec<_>>())
        };
        json!({
            "n": self.dim,
            "vertices": fmt_matrix(&self.vertices),
            "A": fmt_matrix(&self.ineq_matrix),
            "b": self.ineq_rhs.iter().map(rat::to_string).collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }
}

fn rational_from_value(v: &Value) -> Result<BigRational> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(|i| BigRational::from(BigInt::from(i)))
            .ok_or_else(|| Error::Parse(format!("non-integer number {n}"))),
        Value::String(s) => rat::from_str(s),
        other => Err(Error::Parse(format!("expected number or \"p/q\" string, got {other}"))),
    }
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The partial slack matrix `S[i][j] = b_i - A_i x_j`, which must be a
/// nonnegative integer for every facet-vertex pair; `delta` is set to the
/// maximum entry.
pub fn slack_matrix(pair: &PolytopePair) -> Result<IntegralMatrix> {
    let mut rows = Vec::with_capacity(pair.n_facets());
    for (i, ineq) in pair.ineq_matrix.iter().enumerate() {
        let mut row = Vec::with_capacity(pair.n_vertices());
        for (j, vertex) in pair.vertices.iter().enumerate() {
            let slack = &pair.ineq_rhs[i] - dot(ineq, vertex);
            if !slack.is_integer() || slack.is_negative() {
                return Err(Error::BadSlack {
                    facet: i,
                    vertex: j,
                    value: rat::to_string(&slack),
                });
            }
            let value = i64::try_from(slack.to_integer()).map_err(|_| Error::BadSlack {
                facet: i,
                vertex: j,
                value: rat::to_string(&slack),
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    IntegralMatrix::from_rows(rows)
}

/// An exact nonnegative factorization `target = U V`.
#[derive(Debug, Clone, Serialize)]
pub struct NonnegFactorization {
    pub inner_dim: usize,
    /// `rows x inner_dim`, entries `>= 0`.
    pub u: Vec<Vec<i64>>,
    /// `inner_dim x cols`, entries `>= 0`.
    pub v: Vec<Vec<i64>>,
    /// Integer-exact (always true for protocol-derived factorizations).
    pub exact: bool,
}

impl NonnegFactorization {
    /// Exact integer recomputation of `U V` against the target.
    pub fn reproduces(&self, target: &IntegralMatrix) -> bool {
        if self.u.len() != target.n_rows() {
            return false;
        }
        for (a, u_row) in self.u.iter().enumerate() {
            for b in 0..target.n_cols() {
                let value: i64 = (0..self.inner_dim).map(|t| u_row[t] * self.v[t][b]).sum();
                if value != target.entry(a, b) {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("factorization serialization cannot fail")
    }
}

/// Splits every protocol leaf into monochromatic rectangles and emits one
/// nonnegative rank-1 term per rectangle with a positive color.
///
/// Entry leaves contribute at most one term. Low-rank leaves are not
/// monochromatic in general, so each is re-split exactly: rows of the leaf
/// view are grouped by their value pattern, and each group splits by value
/// into constant blocks. `U` gets the row indicator scaled by the color, `V`
/// the column indicator, and `U V = M` holds in integer arithmetic because
/// the rectangles partition the support of the matrix.
pub fn nnmf_from_protocol(
    m: &IntegralMatrix,
    tree: &ProtocolTree,
) -> Result<NonnegFactorization> {
    if tree.n_rows != m.n_rows() || tree.n_cols != m.n_cols() {
        return Err(Error::ShapeMismatch("tree was built for a different shape".into()));
    }
    // The construction needs the leaf views to partition the matrix.
    let mut cover = vec![0usize; m.n_rows() * m.n_cols()];
    for leaf in tree.leaves() {
        for &r in leaf.view.rows() {
            for &c in leaf.view.cols() {
                cover[r * m.n_cols() + c] += 1;
            }
        }
    }
    if let Some((idx, &count)) = cover.iter().enumerate().find(|&(_, &c)| c != 1) {
        return Err(Error::LeafCover {
            row: idx / m.n_cols(),
            col: idx % m.n_cols(),
            count,
        });
    }

    // (rows, cols, color) per monochromatic rectangle, in leaf order.
    let mut terms: Vec<(Vec<usize>, Vec<usize>, i64)> = Vec::new();
    for leaf in tree.leaves() {
        match &leaf.kind {
            NodeKind::Entry { value } => {
                if *value > 0 {
                    terms.push((leaf.view.rows().to_vec(), leaf.view.cols().to_vec(), *value));
                }
            }
            NodeKind::LowRank { .. } => {
                // Group rows by their pattern over the leaf's columns.
                let mut groups: Vec<(Vec<i64>, Vec<usize>)> = Vec::new();
                for &r in leaf.view.rows() {
                    let pattern: Vec<i64> =
                        leaf.view.cols().iter().map(|&c| m.entry(r, c)).collect();
                    match groups.iter_mut().find(|(p, _)| *p == pattern) {
                        Some((_, rows)) => rows.push(r),
                        None => groups.push((pattern, vec![r])),
                    }
                }
                for (pattern, rows) in groups {
                    let mut values: Vec<i64> =
                        pattern.iter().copied().filter(|&v| v > 0).collect();
                    values.sort_unstable();
                    values.dedup();
                    for value in values {
                        let cols: Vec<usize> = leaf
                            .view
                            .cols()
                            .iter()
                            .zip(&pattern)
                            .filter(|&(_, &p)| p == value)
                            .map(|(&c, _)| c)
                            .collect();
                        terms.push((rows.clone(), cols, value));
                    }
                }
            }
            NodeKind::Internal { .. } => unreachable!("leaves() only yields leaves"),
        }
    }

    let inner_dim = terms.len();
    let mut u = vec![vec![0i64; inner_dim]; m.n_rows()];
    let mut v = vec![vec![0i64; m.n_cols()]; inner_dim];
    for (t, (rows, cols, color)) in terms.iter().enumerate() {
        for &r in rows {
            u[r][t] = *color;
        }
        for &c in cols {
            v[t][c] = 1;
        }
    }
    let nnmf = NonnegFactorization { inner_dim, u, v, exact: true };
    assert!(nnmf.reproduces(m), "rectangle terms must recompose the matrix exactly");
    Ok(nnmf)
}

/// The lifted system `{(x, y) : A x + U y = b, y >= 0}` built from a
/// nonnegative factorization of the pair's slack matrix.
#[derive(Debug, Clone)]
pub struct LiftedPolytope {
    pub ineq_matrix: Vec<Vec<BigRational>>,
    pub ineq_rhs: Vec<BigRational>,
    pub u: Vec<Vec<i64>>,
    /// Original dimension `n`.
    pub dim: usize,
    /// Lifted dimension `n + inner_dim`.
    pub lifted_dim: usize,
}

impl LiftedPolytope {
    /// Inequality count of the lift (the `y >= 0` constraints).
    pub fn n_inequalities(&self) -> usize {
        self.lifted_dim - self.dim
    }

    /// Equality count of the lift (one per outer facet).
    pub fn n_equalities(&self) -> usize {
        self.ineq_matrix.len()
    }
}

/// Builds the lift and verifies it is sandwiched between the pair:
/// every vertex has the exact witness `(x_j, V e_j)` with `y >= 0`
/// (inner containment), and `U >= 0` entrywise so `A x <= b` holds for any
/// lift point (outer containment).
pub fn lift(pair: &PolytopePair, nnmf: &NonnegFactorization) -> Result<LiftedPolytope> {
    if nnmf.u.len() != pair.n_facets() {
        return Err(Error::ShapeMismatch(format!(
            "factorization has {} rows, pair has {} facets",
            nnmf.u.len(),
            pair.n_facets()
        )));
    }
    if nnmf.inner_dim > 0 && nnmf.v[0].len() != pair.n_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "factorization has {} columns, pair has {} vertices",
            nnmf.v[0].len(),
            pair.n_vertices()
        )));
    }
    if nnmf.u.iter().flatten().any(|&x| x < 0) || nnmf.v.iter().flatten().any(|&x| x < 0) {
        return Err(Error::InvalidInstance("factorization has negative entries".into()));
    }
    for (j, vertex) in pair.vertices.iter().enumerate() {
        // y = V e_j; nonnegativity is immediate from the entries.
        let witness: Vec<i64> = (0..nnmf.inner_dim).map(|t| nnmf.v[t][j]).collect();
        for (i, ineq) in pair.ineq_matrix.iter().enumerate() {
            let lifted: BigRational = dot(ineq, vertex)
                + (0..nnmf.inner_dim)
                    .map(|t| BigRational::from(BigInt::from(nnmf.u[i][t] * witness[t])))
                    .sum::<BigRational>();
            if lifted != pair.ineq_rhs[i] {
                return Err(Error::LiftWitness {
                    vertex: j,
                    reason: format!(
                        "equality fails on facet {i}: {} != {}",
                        rat::to_string(&lifted),
                        rat::to_string(&pair.ineq_rhs[i])
                    ),
                });
            }
        }
    }
    Ok(LiftedPolytope {
        ineq_matrix: pair.ineq_matrix.clone(),
        ineq_rhs: pair.ineq_rhs.clone(),
        u: nnmf.u.clone(),
        dim: pair.dim,
        lifted_dim: pair.dim + nnmf.inner_dim,
    })
}

/// The unit square `[0, 1]^2`: four vertices against `x <= 1`, `y <= 1`,
/// `-x <= 0`, `-y <= 0`.
pub fn unit_square() -> PolytopePair {
    let q = |v: i64| BigRational::from(BigInt::from(v));
    PolytopePair::new(
        2,
        vec![
            vec![q(0), q(0)],
            vec![q(1), q(0)],
            vec![q(0), q(1)],
            vec![q(1), q(1)],
        ],
        vec![
            vec![q(1), q(0)],
            vec![q(0), q(1)],
            vec![q(-1), q(0)],
            vec![q(0), q(-1)],
        ],
        vec![q(1), q(1), q(0), q(0)],
    )
    .expect("unit square data is consistent")
}

/// The standard simplex `conv{0, e_1, ..., e_n}` with facets `x_i >= 0` and
/// `sum x <= 1`.
pub fn simplex(dim: usize) -> Result<PolytopePair> {
    if dim == 0 {
        return Err(Error::InvalidInstance("simplex dimension must be at least 1".into()));
    }
    let q = |v: i64| BigRational::from(BigInt::from(v));
    let mut vertices = vec![vec![q(0); dim]];
    for i in 0..dim {
        let mut v = vec![q(0); dim];
        v[i] = q(1);
        vertices.push(v);
    }
    let mut ineq = Vec::with_capacity(dim + 1);
    let mut rhs = Vec::with_capacity(dim + 1);
    for i in 0..dim {
        let mut row = vec![q(0); dim];
        row[i] = q(-1);
        ineq.push(row);
        rhs.push(q(0));
    }
    ineq.push(vec![q(1); dim]);
    rhs.push(q(1));
    PolytopePair::new(dim, vertices, ineq, rhs)
}

/// Builds the set-packing pair: the inner polytope is the convex hull of all
/// 0/1 selections putting at most `k` chosen sets on every element, the outer
/// one its relaxation over `[0, 1]^n` with the same element constraints.
///
/// `sets[i]` lists the elements of the i-th set, each in `1..=n_elements`.
/// The slack matrix of the result has entries in `{0, ..., max(k, 1)}`.
pub fn ksp_instance(n_elements: usize, k: i64, sets: &[Vec<usize>]) -> Result<PolytopePair> {
    let n = sets.len();
    if n == 0 {
        return Err(Error::InvalidInstance("need at least one set".into()));
    }
    if n > 20 {
        return Err(Error::InvalidInstance(format!(
            "vertex enumeration over 2^{n} selections refused (max 20 sets)"
        )));
    }
    if n_elements == 0 {
        return Err(Error::InvalidInstance("need at least one element".into()));
    }
    if k < 0 {
        return Err(Error::InvalidInstance("k must be nonnegative".into()));
    }
    for (i, set) in sets.iter().enumerate() {
        for &element in set {
            if element == 0 || element > n_elements {
                return Err(Error::InvalidInstance(format!(
                    "set {i} references element {element} outside 1..={n_elements}"
                )));
            }
        }
    }
    let q = |v: i64| BigRational::from(BigInt::from(v));

    // Element rows, then x_i <= 1, then -x_i <= 0.
    let mut ineq = Vec::new();
    let mut rhs = Vec::new();
    for element in 1..=n_elements {
        let row: Vec<BigRational> = (0..n)
            .map(|i| q(i64::from(sets[i].contains(&element))))
            .collect();
        ineq.push(row);
        rhs.push(q(k));
    }
    for i in 0..n {
        let mut row = vec![q(0); n];
        row[i] = q(1);
        ineq.push(row);
        rhs.push(q(1));
    }
    for i in 0..n {
        let mut row = vec![q(0); n];
        row[i] = q(-1);
        ineq.push(row);
        rhs.push(q(0));
    }

    // Exact enumeration of the feasible 0/1 selections.
    let mut vertices = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let chosen: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let feasible = (1..=n_elements).all(|element| {
            let load = chosen.iter().filter(|&&i| sets[i].contains(&element)).count();
            load as i64 <= k
        });
        if feasible {
            vertices.push((0..n).map(|i| q(i64::from(mask >> i & 1 == 1))).collect());
        }
    }
    PolytopePair::new(n, vertices, ineq, rhs)
}

/// Summary of an end-to-end extended-formulation run.
#[derive(Debug, Clone, Serialize)]
pub struct XcReport {
    /// Protocol leaf count.
    pub leaves: usize,
    /// Nonnegative factorization witness size (an upper bound on the
    /// nonnegative rank, hence on the sandwiched extension complexity).
    pub inner_dim: usize,
    /// Exact rank of the slack matrix.
    pub slack_rank: usize,
    /// Entry bound of the slack matrix.
    pub slack_delta: i64,
    pub dim: usize,
    /// Lifted ambient dimension `n + inner_dim`.
    pub ambient_dim: usize,
    /// `y >= 0` inequality count of the lift.
    pub lift_inequalities: usize,
    /// Equality count of the lift.
    pub lift_equalities: usize,
    /// The slack of a vertex is affine in the vertex, so the rank can reach
    /// `dim + 1`; flagged when it does.
    pub rank_at_dim_plus_one: bool,
}

pub fn xc_report(
    pair: &PolytopePair,
    slack: &IntegralMatrix,
    leaves: usize,
    nnmf: &NonnegFactorization,
    lifted: &LiftedPolytope,
) -> Result<XcReport> {
    let slack_rank = exact_rank_full(slack)?.rank;
    Ok(XcReport {
        leaves,
        inner_dim: nnmf.inner_dim,
        slack_rank,
        slack_delta: slack.delta(),
        dim: pair.dim,
        ambient_dim: lifted.lifted_dim,
        lift_inequalities: lifted.n_inequalities(),
        lift_equalities: lifted.n_equalities(),
        rank_at_dim_plus_one: slack_rank == pair.dim + 1,
    })
}

/// Runs factorization, lift, and witness checks for an already verified
/// protocol tree over the pair's slack matrix.
pub fn xc_report_for_tree(pair: &PolytopePair, tree: &ProtocolTree) -> Result<XcReport> {
    let slack = slack_matrix(pair)?;
    let nnmf = nnmf_from_protocol(&slack, tree)?;
    let lifted = lift(pair, &nnmf)?;
    xc_report(pair, &slack, tree.leaves().len(), &nnmf, &lifted)
}
