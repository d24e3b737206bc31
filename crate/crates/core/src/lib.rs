//! Numerics for resonance-method extreme-value scans of quadratic Dirichlet
//! L-functions.
//!
//! The crate is organized bottom-up:
//!
//! * [`primes`] — prime sieves, Mertens-type log sums, prime constants, and
//!   the Euler–Mascheroni constant, all with explicit tail bounds.
//! * [`characters`] — Kronecker symbols and fundamental discriminants
//!   (`chi_d(n) = (d/n)`), including ordered enumeration of discriminants.
//! * [`lfun`] — truncated logarithmic derivatives `-L'/L(sigma, chi_d)` over
//!   prime powers, with an audit cutoff that bounds the truncation error
//!   empirically.
//! * [`resonator`] — multiplicative resonator coefficients, log-scale
//!   resonator values, a direct smooth-sum oracle for the Euler-product
//!   identity, and the first-moment main terms and thresholds they predict.
//! * [`experiments`] — deterministic, block-parallel sweeps over fundamental
//!   discriminants: resonance ratios, extreme-value scans, threshold
//!   distribution counts, and character-sum sanity checks.
//!
//! All floating-point reductions run in a fixed order (Kahan-compensated,
//! block-combined by increasing `|d|`), so results are bit-identical for any
//! worker count.

pub mod characters;
pub mod error;
pub mod experiments;
pub mod lfun;
pub mod primes;
pub mod resonator;
pub mod sum;

pub use characters::{
    enum_fundamental, is_fundamental, is_squarefree, kronecker, FundamentalDiscriminant,
};
pub use error::{Error, MemoryBudget, Result};
pub use experiments::{
    charsum_verify, distribution_counts, extreme_scan, extreme_scan_with_rows, ratio_experiment,
    CharSumReport, DistributionReport, Histogram, RatioReport, ScanReport, ScanRow, TopEntry,
};
pub use lfun::{
    neg_log_deriv_truncated, prime_power_table, truncation_audit, LogDerivEvaluator,
    PrimePowerEntry, PrimePowerTable, TruncationPolicy,
};
pub use primes::{
    chebyshev_theta, euler_gamma, mertens_log_sum, prime_constant, sieve_primes, PrimeConstant,
    PrimeConstantKind,
};
pub use resonator::{
    build_spec, closed_form_constants, main_term, resonator_coeff, resonator_value,
    smooth_sum_oracle, smooth_sum_stabilized, threshold_j, unit_n_for_cutoff, ClosedFormConstants,
    ResonatorSpec, ResonatorVariant, SmoothSumStabilized, Thresholds, SMOOTH_NODE_BUDGET,
    SMOOTH_TERM_BUDGET, THRESHOLD_PRIME_CUTOFF,
};
pub use sum::KahanSum;

/// Version string embedded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
