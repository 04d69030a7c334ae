//! Deterministic communication protocols for bounded integral matrices.
//!
//! The crate is organized around an exact integer core and a confined
//! floating-point layer:
//!
//! * [`matrix`] — bounded integral matrices, rectangles, exact rank over the
//!   rationals, deduplication.
//! * [`gamma2`] — balanced factorizations `M[a][b] = <u_a, v_b>` with all
//!   vector norms equal, within the `delta * sqrt(rank)` norm budget.
//! * [`rect`] — Gaussian half-space rectangle sampling, scoring, and
//!   extraction of exactly monochromatic rectangles.
//! * [`protocol`] — recursive two-party protocol trees, bit-level simulation,
//!   and exhaustive verification.
//! * [`extension`] — slack matrices, nonnegative factorizations from protocol
//!   leaves, sandwich lifts, and set-packing instances.
//! * [`oracle`] — independent brute-force and Monte-Carlo references used by
//!   tests and experiments.
//!
//! Protocol decisions (rank comparisons, case splits, leaf reconstruction)
//! are exact; floats appear only in the factorization solver, the sampler,
//! and reporting.
//!
//! ```
//! use logrank::matrix::{exact_rank_full, IntegralMatrix};
//! use logrank::protocol::{build_protocol, verify_all, BuildLimits, SamplingFinder};
//! use logrank::rect::SamplerConfig;
//!
//! let m = IntegralMatrix::from_csv_str("1,0,2\n0,1,1\n2,1,0\n")?;
//! assert_eq!(exact_rank_full(&m)?.rank, 3);
//!
//! let finder = SamplingFinder::new(SamplerConfig::new(42));
//! let tree = build_protocol(&m, &finder, BuildLimits::default())?;
//! let stats = verify_all(&tree, &m)?; // runs all 9 input pairs
//! assert!(stats.leaves >= 1);
//! # Ok::<(), logrank::Error>(())
//! ```

pub mod error;
pub mod extension;
pub mod gamma2;
pub mod matrix;
pub mod oracle;
pub mod protocol;
pub mod rat;
pub mod rect;
pub mod rng;

pub use error::Error;
pub use matrix::{IntegralMatrix, MonoStats, RankCertificate, Rectangle};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
