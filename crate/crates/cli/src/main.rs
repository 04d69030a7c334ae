//! Batch experiments over bounded integral matrices: exact rank, rectangle
//! search, protocol construction and verification, nonnegative
//! factorizations, slack matrices, and sandwich lifts.
//!
//! Reports are JSON on stdout (one document per run) with a short summary on
//! stderr; `--format text` prints the summary on stdout instead. Runs are
//! reproducible byte for byte given the same inputs, flags, and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use logrank::extension::{self, PolytopePair};
use logrank::matrix::{self, exact_rank_full, mono_stats, IntegralMatrix};
use logrank::oracle::{self, OracleBudget};
use logrank::protocol::{build_protocol, verify_all, BuildLimits, SamplingFinder};
use logrank::rect::{self, SamplerConfig};
use logrank::rng;
use logrank::Error;

/// Exit codes: 0 success, 2 load/input errors, 3 verification or witness
/// failures, 4 budget or cap exhaustion, 1 anything else.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::EmptyMatrix
        | Error::EntryOutOfRange { .. }
        | Error::InvalidRectangle(_)
        | Error::EmptyRectangle
        | Error::IndexOutOfRange { .. }
        | Error::ShapeMismatch(_)
        | Error::InvalidInstance(_)
        | Error::ZeroVector
        | Error::Parse(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::BadSlack { .. }
        | Error::VertexOutsideOuter { .. } => 2,
        Error::VerifyMismatch { .. }
        | Error::LeafCover { .. }
        | Error::LiftWitness { .. }
        | Error::PremiseViolation(_)
        | Error::HDomain(_) => 3,
        Error::BuildLimits { .. }
        | Error::EnumerationCap { .. }
        | Error::BudgetMiss { .. }
        | Error::PadBelowNorm { .. } => 4,
        Error::ExactOverflow => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Parser)]
#[command(name = "logrank", version, about)]
struct Cli {
    /// Report format: json on stdout with a stderr summary, or plain text.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads for sampling and verification (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact rank and distinct row/column counts of a matrix.
    Rank {
        /// Matrix file: CSV lines of integers, or JSON {"delta", "rows"}.
        #[arg(long)]
        input: PathBuf,
    },
    /// Sample a large almost-monochromatic rectangle and extract an exactly
    /// monochromatic one.
    FindRect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Fixed number of half-space intersections (overrides the sweep).
        #[arg(long)]
        k: Option<u64>,
        /// Inclusive sweep range "lo:hi".
        #[arg(long, value_parser = parse_sweep)]
        k_sweep: Option<(u64, u64)>,
        /// Use the analytic k for the weighted target color.
        #[arg(long)]
        analytic_k: bool,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Build the recursive protocol, verify it on every input pair, and
    /// report cost statistics.
    Protocol {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, value_parser = parse_sweep)]
        k_sweep: Option<(u64, u64)>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Node budget for the build.
        #[arg(long)]
        budget: Option<usize>,
        /// Write the protocol tree as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the bit-level transcript for one input pair "a,b".
        #[arg(long, value_parser = parse_pair)]
        trace: Option<(usize, usize)>,
    },
    /// Exact nonnegative factorization from a verified protocol tree.
    Nnmf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the factorization as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partial slack matrix of a polytope pair.
    Slack {
        /// Pair file: JSON {"n", "vertices", "A", "b"}.
        #[arg(long)]
        pair: PathBuf,
        /// Write the slack matrix (CSV for .csv, JSON otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a set-packing polytope pair.
    KspGen {
        /// Number of ground elements.
        #[arg(long)]
        elements: usize,
        /// Per-element multiplicity cap.
        #[arg(long)]
        k: i64,
        /// Sets as "1,2;2,3;;1" (semicolon-separated, may be empty).
        #[arg(long)]
        sets: Option<String>,
        /// Generate this many random sets instead (requires --seed).
        #[arg(long)]
        random_sets: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the pair as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: slack matrix, protocol, factorization, lift, and
    /// witness checks.
    Xc {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Independent brute-force references.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact maximum monochromatic rectangle by row-subset enumeration.
    MaxMono {
        #[arg(long)]
        input: PathBuf,
        /// Restrict to one color.
        #[arg(long)]
        color: Option<i64>,
        #[arg(long, default_value_t = 10)]
        cap: usize,
    },
    /// Rank by rational elimination (independent of the fraction-free path).
    Rank {
        #[arg(long)]
        input: PathBuf,
    },
    /// Monte-Carlo estimate of the two-sided Gaussian quadrant probability.
    Sheppard {
        /// Comma-separated vector, e.g. "1,0,2".
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
    },
}

fn parse_pair(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| format!("expected a,b, got `{text}`"))?;
    Ok((
        a.trim().parse::<usize>().map_err(|e| e.to_string())?,
        b.trim().parse::<usize>().map_err(|e| e.to_string())?,
    ))
}

fn parse_sweep(text: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got `{text}`"))?;
    let lo = lo.trim().parse::<u64>().map_err(|e| e.to_string())?;
    let hi = hi.trim().parse::<u64>().map_err(|e| e.to_string())?;
    if lo > hi {
        return Err(format!("empty sweep {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn load_matrix(path: &Path) -> logrank::Result<IntegralMatrix> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        IntegralMatrix::from_json_str(&text)
    } else {
        IntegralMatrix::from_csv_str(&text)
    }
}

fn load_pair(path: &Path) -> logrank::Result<PolytopePair> {
    PolytopePair::from_json_str(&fs::read_to_string(path)?)
}

fn parse_vector(text: &str) -> logrank::Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad vector component `{t}`: {e}")))
        })
        .collect()
}

fn parse_sets(text: &str) -> Vec<Vec<usize>> {
    text.split(';')
        .map(|set| {
            set.split(',')
                .filter_map(|t| t.trim().parse::<usize>().ok())
                .collect()
        })
        .collect()
}

fn sampler_config(
    seed: u64,
    samples: usize,
    k: Option<u64>,
    k_sweep: Option<(u64, u64)>,
    analytic_k: bool,
    tol: f64,
) -> SamplerConfig {
    let mut config = SamplerConfig::new(seed);
    config.samples = samples;
    config.k = k;
    if let Some(sweep) = k_sweep {
        config.k_sweep = sweep;
    }
    config.analytic_k = analytic_k;
    config.tol = tol;
    config
}

struct Report {
    json: Value,
    summary: String,
}

fn emit(report: &Report, format: Format) {
    match format {
        Format::Json => {
            println!("{}", report.json);
            eprintln!("{}", report.summary);
        }
        Format::Text => println!("{}", report.summary),
    }
}

fn rectangle_json(m: &IntegralMatrix, rect: &logrank::Rectangle, rank: usize) -> Value {
    if rect.is_empty() {
        return json!({ "rows": [], "cols": [], "area": 0 });
    }
    let stats = mono_stats(m, rect).expect("rectangle was produced for this matrix");
    let score = rect::score(m, rect, stats.color, rank.max(1)).expect("score is total");
    json!({
        "rows": rect.rows(),
        "cols": rect.cols(),
        "color": stats.color,
        "score": score,
        "area": rect.area(),
        "fraction": stats.fraction(),
    })
}

fn cmd_rank(input: &Path) -> logrank::Result<Report> {
    let m = load_matrix(input)?;
    let cert = exact_rank_full(&m)?;
    let (reduced, _, _) = matrix::deduplicate(&m)?;
    let bound_ok = matrix::distinct_bound_check(&m, cert.rank)?;
    let bound = (m.delta() as u128 + 1).checked_pow(cert.rank as u32);
    let json = json!({
        "n_rows": m.n_rows(),
        "n_cols": m.n_cols(),
        "delta": m.delta(),
        "rank": cert.rank,
        "pivot_rows": cert.pivot_rows,
        "pivot_cols": cert.pivot_cols,
        "distinct_rows": reduced.n_rows(),
        "distinct_cols": reduced.n_cols(),
        "distinct_bound": bound.map(|b| b.to_string()),
        "distinct_bound_ok": bound_ok,
    });
    let summary = format!(
        "rank {} ({}x{}, delta {}); {} distinct rows, {} distinct cols, bound {}",
        cert.rank,
        m.n_rows(),
        m.n_cols(),
        m.delta(),
        reduced.n_rows(),
        reduced.n_cols(),
        if bound_ok { "holds" } else { "VIOLATED" },
    );
    Ok(Report { json, summary })
}

fn cmd_find_rect(input: &Path, config: &SamplerConfig) -> logrank::Result<Report> {
    let m = load_matrix(input)?;
    let rank = exact_rank_full(&m)?.rank;
    let view = m.full_rectangle();
    let outcome = rect::find_almost_mono(&m, &view, rank, config)?;
    let extracted = rect::extract_mono(&m, &outcome.best.rect, rank.max(1))?;
    let json = json!({
        "seed": config.seed,
        "samples": config.samples,
        "k": outcome.k_values,
        "rank": rank,
        "strategy": outcome.strategy,
        "attempts": outcome.attempts,
        "qualifying_hits": outcome.qualifying_hits,
        "budget_miss": outcome.budget_miss,
        "best": rectangle_json(&m, &outcome.best.rect, rank),
        "extracted": rectangle_json(&m, &extracted, rank),
    });
    let summary = format!(
        "best rectangle {}x{} (fraction {:.4}), extracted monochromatic {}x{}",
        outcome.best.rect.rows().len(),
        outcome.best.rect.cols().len(),
        outcome.best.mono_fraction,
        extracted.rows().len(),
        extracted.cols().len(),
    );
    Ok(Report { json, summary })
}

fn protocol_report(
    m: &IntegralMatrix,
    config: &SamplerConfig,
    budget: Option<usize>,
) -> logrank::Result<(logrank::protocol::ProtocolTree, Value, String)> {
    let finder = SamplingFinder::new(config.clone());
    let mut limits = BuildLimits::default();
    if let Some(nodes) = budget {
        limits.max_nodes = nodes;
    }
    let tree = build_protocol(m, &finder, limits)?;
    let stats = verify_all(&tree, m)?;
    let json = json!({
        "n_rows": m.n_rows(),
        "n_cols": m.n_cols(),
        "delta": m.delta(),
        "rank": tree.root.rank,
        "seed": config.seed,
        "samples": config.samples,
        "verified_pairs": m.n_rows() * m.n_cols(),
        "leaves": stats.leaves,
        "internal_nodes": stats.internal_nodes,
        "depth": stats.depth,
        "max_bits": stats.max_bits,
        "rank_trajectory": stats.rank_trajectory,
        "empirical_delta": stats.empirical_delta,
    });
    let summary = format!(
        "protocol verified on {} pairs: {} leaves, depth {}, max {} bits",
        m.n_rows() * m.n_cols(),
        stats.leaves,
        stats.depth,
        stats.max_bits,
    );
    Ok((tree, json, summary))
}

fn cmd_protocol(
    input: &Path,
    config: &SamplerConfig,
    budget: Option<usize>,
    out: Option<&Path>,
    trace: Option<(usize, usize)>,
) -> logrank::Result<Report> {
    let m = load_matrix(input)?;
    let (tree, mut json, summary) = protocol_report(&m, config, budget)?;
    if let Some(path) = out {
        fs::write(path, tree.to_json_string())?;
    }
    if let Some((a, b)) = trace {
        let transcript = logrank::protocol::run(&tree, &m, a, b)?;
        json["trace"] = transcript.to_json();
    }
    Ok(Report { json, summary })
}

fn cmd_nnmf(input: &Path, config: &SamplerConfig, out: Option<&Path>) -> logrank::Result<Report> {
    let m = load_matrix(input)?;
    let (tree, _, _) = protocol_report(&m, config, None)?;
    let nnmf = extension::nnmf_from_protocol(&m, &tree)?;
    let reproduces = nnmf.reproduces(&m);
    if let Some(path) = out {
        fs::write(path, nnmf.to_json_string())?;
    }
    let json = json!({
        "inner_dim": nnmf.inner_dim,
        "exact": nnmf.exact,
        "leaves": tree.leaves().len(),
        "reproduces": reproduces,
        "u": nnmf.u,
        "v": nnmf.v,
    });
    let summary = format!(
        "nonnegative factorization with inner dimension {} from {} leaves (exact: {})",
        nnmf.inner_dim,
        tree.leaves().len(),
        reproduces,
    );
    Ok(Report { json, summary })
}

fn cmd_slack(pair_path: &Path, out: Option<&Path>) -> logrank::Result<Report> {
    let pair = load_pair(pair_path)?;
    let slack = extension::slack_matrix(&pair)?;
    let rank = exact_rank_full(&slack)?.rank;
    if let Some(path) = out {
        if path.extension().is_some_and(|e| e == "csv") {
            fs::write(path, slack.to_csv_string())?;
        } else {
            fs::write(path, slack.to_json_string())?;
        }
    }
    let json = json!({
        "n_facets": slack.n_rows(),
        "n_vertices": slack.n_cols(),
        "delta": slack.delta(),
        "rank": rank,
        "dim": pair.dim,
        "rank_at_dim_plus_one": rank == pair.dim + 1,
        "rows": (0..slack.n_rows()).map(|r| slack.row(r).to_vec()).collect::<Vec<_>>(),
    });
    let summary = format!(
        "slack matrix {}x{} with entries in [0, {}], rank {}",
        slack.n_rows(),
        slack.n_cols(),
        slack.delta(),
        rank,
    );
    Ok(Report { json, summary })
}

fn cmd_ksp_gen(
    elements: usize,
    k: i64,
    sets: Option<&str>,
    random_sets: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> logrank::Result<Report> {
    let sets: Vec<Vec<usize>> = match (sets, random_sets) {
        (Some(text), None) => parse_sets(text),
        (None, Some(count)) => {
            let seed = seed.ok_or_else(|| {
                Error::InvalidInstance("--random-sets requires --seed".into())
            })?;
            let mut rng = rng::stream(seed, 0);
            (0..count)
                .map(|_| {
                    use rand::Rng;
                    (1..=elements).filter(|_| rng.random_range(0..3) == 0).collect()
                })
                .collect()
        }
        _ => {
            return Err(Error::InvalidInstance(
                "give exactly one of --sets or --random-sets".into(),
            ))
        }
    };
    let pair = extension::ksp_instance(elements, k, &sets)?;
    if let Some(path) = out {
        fs::write(path, pair.to_json_string())?;
    }
    let json = json!({
        "n_sets": sets.len(),
        "elements": elements,
        "k": k,
        "sets": sets,
        "n_vertices": pair.n_vertices(),
        "n_facets": pair.n_facets(),
        "pair": pair.to_json(),
    });
    let summary = format!(
        "set-packing pair: {} sets over {} elements, k = {}; {} vertices, {} inequalities",
        sets.len(),
        elements,
        k,
        pair.n_vertices(),
        pair.n_facets(),
    );
    Ok(Report { json, summary })
}

fn cmd_xc(pair_path: &Path, config: &SamplerConfig) -> logrank::Result<Report> {
    let pair = load_pair(pair_path)?;
    let slack = extension::slack_matrix(&pair)?;
    let (tree, protocol_json, _) = protocol_report(&slack, config, None)?;
    let nnmf = extension::nnmf_from_protocol(&slack, &tree)?;
    let lifted = extension::lift(&pair, &nnmf)?;
    let report = extension::xc_report(&pair, &slack, tree.leaves().len(), &nnmf, &lifted)?;
    let json = json!({
        "xc": report,
        "witnesses_checked": pair.n_vertices(),
        "protocol": protocol_json,
    });
    let summary = format!(
        "lift verified on {} vertex witnesses: slack rank {}, {} leaves, inner dimension {}, \
         lifted dimension {}",
        pair.n_vertices(),
        report.slack_rank,
        report.leaves,
        report.inner_dim,
        report.ambient_dim,
    );
    Ok(Report { json, summary })
}

fn cmd_oracle(command: &OracleCommand) -> logrank::Result<Report> {
    match command {
        OracleCommand::MaxMono { input, color, cap } => {
            let m = load_matrix(input)?;
            let budget = OracleBudget { max_rows_for_enumeration: *cap, ..Default::default() };
            let (rect, best_color) = oracle::brute_max_mono_rect(&m, *color, &budget)?;
            let json = json!({
                "rows": rect.rows(),
                "cols": rect.cols(),
                "area": rect.area(),
                "color": best_color,
            });
            let summary = format!(
                "maximum monochromatic rectangle: area {} with color {}",
                rect.area(),
                best_color
            );
            Ok(Report { json, summary })
        }
        OracleCommand::Rank { input } => {
            let m = load_matrix(input)?;
            let rank = oracle::brute_rank(&m, &m.full_rectangle())?;
            Ok(Report {
                json: json!({ "rank": rank }),
                summary: format!("rank {rank} by rational elimination"),
            })
        }
        OracleCommand::Sheppard { u, v, trials, seed } => {
            let u = parse_vector(u)?;
            let v = parse_vector(v)?;
            let est = oracle::monte_carlo_sheppard(&u, &v, *trials, *seed)?;
            let norm_u = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let norm_v = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let alpha = u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / (norm_u * norm_v);
            let expected = rect::sheppard_h(alpha)?;
            let json = json!({
                "estimate": est.estimate,
                "std_error": est.std_error,
                "trials": est.trials,
                "alpha": alpha,
                "expected": expected,
            });
            let summary = format!(
                "estimate {:.5} +- {:.5} vs closed form {:.5}",
                est.estimate, est.std_error, expected
            );
            Ok(Report { json, summary })
        }
    }
}

fn dispatch(cli: &Cli) -> logrank::Result<Report> {
    match &cli.command {
        Command::Rank { input } => cmd_rank(input),
        Command::FindRect { input, seed, samples, k, k_sweep, analytic_k, tol } => {
            let config = sampler_config(*seed, *samples, *k, *k_sweep, *analytic_k, *tol);
            cmd_find_rect(input, &config)
        }
        Command::Protocol { input, seed, samples, k_sweep, tol, budget, out, trace } => {
            let config = sampler_config(*seed, *samples, None, *k_sweep, false, *tol);
            cmd_protocol(input, &config, *budget, out.as_deref(), *trace)
        }
        Command::Nnmf { input, seed, samples, tol, out } => {
            let config = sampler_config(*seed, *samples, None, None, false, *tol);
            cmd_nnmf(input, &config, out.as_deref())
        }
        Command::Slack { pair, out } => cmd_slack(pair, out.as_deref()),
        Command::KspGen { elements, k, sets, random_sets, seed, out } => {
            cmd_ksp_gen(*elements, *k, sets.as_deref(), *random_sets, *seed, out.as_deref())
        }
        Command::Xc { pair, seed, samples, tol } => {
            let config = sampler_config(*seed, *samples, None, None, false, *tol);
            cmd_xc(pair, &config)
        }
        Command::Oracle { command } => cmd_oracle(command),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("thread pool is configured once at startup");
    }
    match dispatch(&cli) {
        Ok(report) => {
            emit(&report, cli.format);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
