//! Rectangle sampling, scoring, and monochromatic extraction.
//!
//! A rectangle is drawn by intersecting `k` Gaussian half-space rectangles
//! over a balanced factorization: for each Gaussian `g`, the rows with
//! `<u_a, g> >= 0` times the columns with `<v_b, g> >= 0`. An entry `(a, b)`
//! survives one draw with probability `h(M[a][b] / (delta * sqrt(r)))` where
//! `h` is Sheppard's hyperplane-rounding formula, so heavier entries survive
//! intersections preferentially and large almost-monochromatic rectangles
//! appear. [`extract_mono`] then trims an almost-monochromatic rectangle to
//! an exactly monochromatic one of at least an eighth of the area.
//!
//! The analytic choice of `k` makes single-entry survival about `4^-k`,
//! far too small to simulate directly, so the default strategy sweeps small
//! `k` with a configurable sample budget and falls back to a deterministic
//! greedy trim (and exhaustive search on small views) when sampling misses.
//! The analytic `k` remains available for formula checking.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::gamma2::{self, BalancedFactorization};
use crate::matrix::{exact_rank, mono_stats, IntegralMatrix, Rectangle};
use crate::oracle::{self, OracleBudget};
use crate::rng;
use crate::Result;

/// Sheppard's formula `h(alpha) = (1 - arccos(alpha)/pi) / 2`: the
/// probability that a standard Gaussian has nonnegative inner product with
/// both of two unit vectors of inner product `alpha`.
pub fn sheppard_h(alpha: f64) -> Result<f64> {
    if alpha.abs() > 1.0 + 1e-12 {
        return Err(Error::HDomain(alpha));
    }
    let a = alpha.clamp(-1.0, 1.0);
    Ok(0.5 * (1.0 - a.acos() / std::f64::consts::PI))
}

/// Survival probability of a single draw for an entry of value `j`:
/// `c(j) = h(j / (delta * sqrt(r)))`.
pub fn color_prob(j: i64, rank: usize, delta: i64) -> Result<f64> {
    sheppard_h(j as f64 / (delta as f64 * (rank as f64).sqrt()))
}

/// Log-space color weights `log m_j = (8 delta)^j * ln(64 r delta)` for
/// `j = 0..=delta`. The raw weights overflow immediately, so all weight
/// arithmetic stays in natural-log space.
pub fn color_weights_log(rank: usize, delta: i64) -> Vec<f64> {
    let base = (64.0 * rank as f64 * delta as f64).ln();
    (0..=delta)
        .map(|j| (8.0 * delta as f64).powi(j as i32) * base)
        .collect()
}

/// Per-color entry counts over a rectangle: `sizes[j] = |E_j|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorPartition {
    pub sizes: Vec<usize>,
    pub total: usize,
}

impl ColorPartition {
    pub fn compute(m: &IntegralMatrix, rect: &Rectangle) -> Result<Self> {
        m.check_rectangle(rect)?;
        if rect.is_empty() {
            return Err(Error::EmptyRectangle);
        }
        let mut sizes = vec![0usize; (m.delta() + 1) as usize];
        for &r in rect.rows() {
            for &c in rect.cols() {
                sizes[m.entry(r, c) as usize] += 1;
            }
        }
        let total = rect.area();
        debug_assert_eq!(sizes.iter().sum::<usize>(), total);
        Ok(Self { sizes, total })
    }
}

/// The color maximizing `log m_j + log |E_j|` over nonempty classes, ties
/// broken toward the smaller color for determinism.
pub fn select_target_color(partition: &ColorPartition, log_weights: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &size) in partition.sizes.iter().enumerate() {
        if size == 0 {
            continue;
        }
        let value = log_weights[j] + (size as f64).ln();
        match best {
            Some((_, bv)) if value <= bv => {}
            _ => best = Some((j, value)),
        }
    }
    best.map(|(j, _)| j)
        .ok_or_else(|| Error::PremiseViolation("no nonempty color class".into()))
}

/// The analytic number of half-space intersections for target color `i`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KChoice {
    pub k: u64,
    /// Smallest sufficient `k` for out-scoring colors below `i` (0 when
    /// `i = 0`, where no such colors exist).
    pub lower: f64,
    /// Largest sufficient `k` for out-scoring colors above `i`.
    pub upper: f64,
}

/// Chooses `k` for the target color: the lower bound (rounded up) when
/// `i != 0`, else the upper bound (rounded down). For `i != 0` the two
/// bounds are consistent, which [`KChoice`] callers may assert.
pub fn choose_k(i: usize, rank: usize, delta: i64) -> KChoice {
    let d = delta as f64;
    let r = rank as f64;
    let base = (64.0 * r * d).ln();
    let pow_i = (8.0 * d).powi(i as i32);
    let pow_next = (8.0 * d).powi(i as i32 + 1);
    let lower = if i == 0 {
        0.0
    } else {
        (pow_i + 1.0) * base * 1.5 * std::f64::consts::PI * d * r.sqrt()
    };
    let upper = (pow_next - pow_i - 1.0) * base * std::f64::consts::PI * r.sqrt() / 4.0;
    let k = if i == 0 { upper.floor() } else { lower.ceil() } as u64;
    KChoice { k, lower, upper }
}

/// Draws one rectangle from the half-space intersection distribution.
///
/// Returns positions into the factorization's row/column lists (the view it
/// was built from); `k = 0` yields the full rectangle, and an empty result is
/// a valid outcome.
pub fn sample_rectangle(
    f: &BalancedFactorization,
    k: u64,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Rectangle {
    let n_rows = f.u_vectors.len();
    let n_cols = f.v_vectors.len();
    let mut row_in = vec![true; n_rows];
    let mut col_in = vec![true; n_cols];
    for _ in 0..k {
        let g = rng::gaussian_vector(rng, f.dim);
        for (a, keep) in row_in.iter_mut().enumerate() {
            if *keep {
                let d: f64 = f.u_vectors[a].iter().zip(&g).map(|(x, y)| x * y).sum();
                *keep = d >= 0.0;
            }
        }
        for (b, keep) in col_in.iter_mut().enumerate() {
            if *keep {
                let d: f64 = f.v_vectors[b].iter().zip(&g).map(|(x, y)| x * y).sum();
                *keep = d >= 0.0;
            }
        }
    }
    let rows: Vec<usize> = (0..n_rows).filter(|&a| row_in[a]).collect();
    let cols: Vec<usize> = (0..n_cols).filter(|&b| col_in[b]).collect();
    if rows.is_empty() || cols.is_empty() {
        Rectangle::empty()
    } else {
        Rectangle::new(rows, cols).expect("filtered indices stay sorted")
    }
}

/// Exact integer score `|E_i ∩ R| - 16 r * sum over j != i of |E_j ∩ R|`.
pub fn score(m: &IntegralMatrix, rect: &Rectangle, target_color: i64, rank: usize) -> Result<i64> {
    m.check_rectangle(rect)?;
    if rect.is_empty() {
        return Ok(0);
    }
    let mut on_color = 0i64;
    let mut off_color = 0i64;
    for &r in rect.rows() {
        for &c in rect.cols() {
            if m.entry(r, c) == target_color {
                on_color += 1;
            } else {
                off_color += 1;
            }
        }
    }
    Ok(on_color - 16 * rank as i64 * off_color)
}

/// A scored rectangle produced by the finder.
#[derive(Debug, Clone)]
pub struct CandidateRectangle {
    /// Root-coordinate rectangle.
    pub rect: Rectangle,
    /// Majority color of the rectangle; scoring target.
    pub target_color: i64,
    pub score: i64,
    pub mono_fraction: f64,
    /// Whether the non-majority fraction is at most `1/(16 rank)`, checked
    /// in exact integer arithmetic.
    pub qualified: bool,
    /// Draw index for deterministic tie-breaking (`u64::MAX` for fallbacks).
    pub draw_index: u64,
}

impl CandidateRectangle {
    pub fn area(&self) -> usize {
        self.rect.area()
    }
}

/// How the finder obtained its result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FinderStrategy {
    /// Rank 0 view: the whole rectangle is monochromatic, nothing sampled.
    Degenerate,
    Sampled,
    Greedy,
    BruteForce,
}

/// Configuration for [`find_almost_mono`].
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Draws per `k` value; at least 1.
    pub samples: usize,
    pub seed: u64,
    /// Fixed `k`; overrides the sweep when set.
    pub k: Option<u64>,
    /// Inclusive sweep range used when `k` is unset.
    pub k_sweep: (u64, u64),
    /// Use the analytic `k` from [`choose_k`] instead of the sweep.
    pub analytic_k: bool,
    /// Factorization tolerance.
    pub tol: f64,
}

impl SamplerConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            samples: 64,
            seed,
            k: None,
            k_sweep: (0, 8),
            analytic_k: false,
            tol: gamma2::DEFAULT_TOL,
        }
    }
}

/// Finder result with sampling statistics.
#[derive(Debug, Clone)]
pub struct FinderOutcome {
    pub best: CandidateRectangle,
    pub strategy: FinderStrategy,
    /// Total draws attempted.
    pub attempts: u64,
    /// Draws that produced a qualifying candidate.
    pub qualifying_hits: u64,
    /// The norm budget was missed and sampling proceeded with a larger
    /// common norm (changes per-entry survival probabilities).
    pub budget_miss: bool,
    /// The `k` values tried.
    pub k_values: Vec<u64>,
}

fn qualifies(on_majority: usize, total: usize, rank: usize) -> bool {
    // fraction >= 1 - 1/(16 rank), exactly.
    16 * rank * (total - on_majority) <= total
}

/// Candidate ordering: qualifying candidates first by area then score;
/// non-qualifying by score then area; everything ties to the lower draw
/// index so parallel reductions stay deterministic.
fn better(a: &CandidateRectangle, b: &CandidateRectangle) -> bool {
    if a.qualified != b.qualified {
        return a.qualified;
    }
    let key_a = if a.qualified {
        (a.area() as i64, a.score)
    } else {
        (a.score, a.area() as i64)
    };
    let key_b = if b.qualified {
        (b.area() as i64, b.score)
    } else {
        (b.score, b.area() as i64)
    };
    key_a > key_b || (key_a == key_b && a.draw_index < b.draw_index)
}

fn candidate_from_rect(
    m: &IntegralMatrix,
    rect: Rectangle,
    rank: usize,
    draw_index: u64,
) -> Result<CandidateRectangle> {
    let stats = mono_stats(m, &rect)?;
    let score = score(m, &rect, stats.color, rank)?;
    Ok(CandidateRectangle {
        qualified: qualifies(stats.count, stats.total, rank),
        target_color: stats.color,
        mono_fraction: stats.fraction(),
        score,
        rect,
        draw_index,
    })
}

/// Searches the rectangle view of `m` for a large almost-monochromatic
/// rectangle: sampling first, then a deterministic greedy trim, then
/// exhaustive search on small views. `rank` must be the exact rank of the
/// view. The result always covers at least one entry and, thanks to the
/// fallbacks, always qualifies.
pub fn find_almost_mono(
    m: &IntegralMatrix,
    view: &Rectangle,
    rank: usize,
    config: &SamplerConfig,
) -> Result<FinderOutcome> {
    m.check_rectangle(view)?;
    if view.is_empty() {
        return Err(Error::EmptyRectangle);
    }
    if rank == 0 {
        // All-zero view: monochromatic as a whole, no sampling possible
        // (the normalized entry value 0/0 is undefined).
        return Ok(FinderOutcome {
            best: candidate_from_rect(m, view.clone(), 1, 0)?,
            strategy: FinderStrategy::Degenerate,
            attempts: 0,
            qualifying_hits: 0,
            budget_miss: false,
            k_values: Vec::new(),
        });
    }

    let (factorization, budget_miss) =
        match gamma2::factorize_bounded(m, view, rank, config.tol) {
            Ok(f) => (f, false),
            Err(Error::BudgetMiss { factorization, .. }) => (*factorization, true),
            Err(e) => return Err(e),
        };
    let s = gamma2::required_norm(m.delta(), rank).max(factorization.s * (1.0 + 1e-12));
    let padded = gamma2::pad_to_equal_norm(&factorization, s)?;

    let k_values: Vec<u64> = if config.analytic_k {
        let partition = ColorPartition::compute(m, view)?;
        let weights = color_weights_log(rank, m.delta().max(1));
        let target = select_target_color(&partition, &weights)?;
        vec![choose_k(target, rank, m.delta().max(1)).k]
    } else if let Some(k) = config.k {
        vec![k]
    } else {
        (config.k_sweep.0..=config.k_sweep.1).collect()
    };

    let samples = config.samples.max(1) as u64;
    let draws: Vec<u64> = (0..k_values.len() as u64 * samples).collect();
    let sampled: Vec<CandidateRectangle> = draws
        .par_iter()
        .filter_map(|&idx| {
            let k = k_values[(idx / samples) as usize];
            let mut rng = rng::stream(config.seed, idx);
            let local = sample_rectangle(&padded, k, &mut rng);
            if local.is_empty() {
                return None;
            }
            let rows: Vec<usize> = local.rows().iter().map(|&i| view.rows()[i]).collect();
            let cols: Vec<usize> = local.cols().iter().map(|&j| view.cols()[j]).collect();
            let rect = Rectangle::new(rows, cols).ok()?;
            candidate_from_rect(m, rect, rank, idx).ok()
        })
        .collect();

    let attempts = draws.len() as u64;
    let qualifying_hits = sampled.iter().filter(|c| c.qualified).count() as u64;
    let best_sampled = sampled.into_iter().reduce(|a, b| if better(&b, &a) { b } else { a });

    if let Some(best) = &best_sampled {
        if best.qualified {
            return Ok(FinderOutcome {
                best: best.clone(),
                strategy: FinderStrategy::Sampled,
                attempts,
                qualifying_hits,
                budget_miss,
                k_values,
            });
        }
    }

    // Fallback ladder: greedy trim always reaches a qualifying rectangle
    // (a single entry qualifies), exhaustive search upgrades tiny results.
    let greedy_rect = greedy_trim(m, view, rank)?;
    let mut best = candidate_from_rect(m, greedy_rect, rank, u64::MAX)?;
    let mut strategy = FinderStrategy::Greedy;
    if best.area() <= 1 && view.rows().len().min(view.cols().len()) <= 10 {
        let sub = m.extract(view)?;
        let budget = OracleBudget::default();
        let (local, _color) = oracle::brute_max_mono_rect(&sub, None, &budget)?;
        if !local.is_empty() && local.area() > best.area() {
            let rows: Vec<usize> = local.rows().iter().map(|&i| view.rows()[i]).collect();
            let cols: Vec<usize> = local.cols().iter().map(|&j| view.cols()[j]).collect();
            best = candidate_from_rect(m, Rectangle::new(rows, cols)?, rank, u64::MAX)?;
            strategy = FinderStrategy::BruteForce;
        }
    }
    debug_assert!(best.qualified);
    Ok(FinderOutcome {
        best,
        strategy,
        attempts,
        qualifying_hits,
        budget_miss,
        k_values,
    })
}

/// Deletes the row or column with the most non-majority entries until the
/// view qualifies. Terminates: a 1x1 rectangle is monochromatic.
fn greedy_trim(m: &IntegralMatrix, view: &Rectangle, rank: usize) -> Result<Rectangle> {
    let mut rows = view.rows().to_vec();
    let mut cols = view.cols().to_vec();
    loop {
        let rect = Rectangle::new(rows.clone(), cols.clone())?;
        let stats = mono_stats(m, &rect)?;
        if qualifies(stats.count, stats.total, rank) {
            return Ok(rect);
        }
        let majority = stats.color;
        let (worst_row_off, worst_row) = rows
            .iter()
            .enumerate()
            .map(|(i, &r)| (cols.iter().filter(|&&c| m.entry(r, c) != majority).count(), i))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .expect("rows nonempty");
        let (worst_col_off, worst_col) = cols
            .iter()
            .enumerate()
            .map(|(j, &c)| (rows.iter().filter(|&&r| m.entry(r, c) != majority).count(), j))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .expect("cols nonempty");
        // Rows win ties; never empty a side.
        if (worst_row_off >= worst_col_off && rows.len() > 1) || cols.len() <= 1 {
            rows.remove(worst_row);
        } else {
            cols.remove(worst_col);
        }
    }
}

/// Trims an almost-monochromatic rectangle to an exactly monochromatic one
/// of area at least an eighth of the input.
///
/// With majority color `a`: drop columns carrying at least a `1/(8 rank)`
/// fraction of off-color entries, take a maximal independent set of the
/// remaining good columns, keep the rows that are all-majority on that set,
/// then keep the good columns that are all-majority on those rows. Linear
/// dependence forces each surviving column to be constant, and counting
/// shows the result keeps at least an eighth of the area.
pub fn extract_mono(m: &IntegralMatrix, rect: &Rectangle, rank: usize) -> Result<Rectangle> {
    m.check_rectangle(rect)?;
    if rect.is_empty() {
        return Err(Error::EmptyRectangle);
    }
    if rank == 0 {
        return Err(Error::PremiseViolation("rank parameter must be at least 1".into()));
    }
    let stats = mono_stats(m, rect)?;
    let majority = stats.color;
    if !qualifies(stats.count, stats.total, rank) {
        return Err(Error::PremiseViolation(format!(
            "rectangle is only {:.4}-monochromatic, below 1 - 1/(16 * {rank})",
            stats.fraction()
        )));
    }
    let n_rows = rect.rows().len();

    // Good columns: fewer than |rows| / (8 rank) off-color entries.
    let good_cols: Vec<usize> = rect
        .cols()
        .iter()
        .filter(|&&c| {
            let off = rect.rows().iter().filter(|&&r| m.entry(r, c) != majority).count();
            8 * rank * off < n_rows
        })
        .copied()
        .collect();
    debug_assert!(!good_cols.is_empty(), "at most half the columns can be bad");

    // Maximal independent set among the good columns.
    let good_rect = Rectangle::new(rect.rows().to_vec(), good_cols.clone())?;
    let cert = exact_rank(m, &good_rect)?;
    let independent = cert.pivot_cols;
    debug_assert!(independent.len() <= rank);

    // Rows all-majority on the independent columns.
    let kept_rows: Vec<usize> = rect
        .rows()
        .iter()
        .filter(|&&r| independent.iter().all(|&c| m.entry(r, c) == majority))
        .copied()
        .collect();

    // Good columns all-majority on the kept rows. Every good column is a
    // linear combination of the independent ones, hence constant here.
    let kept_cols: Vec<usize> = good_cols
        .into_iter()
        .filter(|&c| kept_rows.iter().all(|&r| m.entry(r, c) == majority))
        .collect();

    if kept_rows.is_empty() || kept_cols.is_empty() {
        return Err(Error::PremiseViolation(
            "extraction emptied the rectangle; counting bound violated".into(),
        ));
    }
    let out = Rectangle::new(kept_rows, kept_cols)?;
    assert!(
        out.area() * 8 >= rect.area(),
        "extraction produced area {} from {}, below an eighth",
        out.area(),
        rect.area()
    );
    debug_assert!(mono_stats(m, &out)?.is_monochromatic());
    Ok(out)
}
