//! Resonator families, resonator values, main terms, closed-form constants,
//! and detection thresholds.
//!
//! A resonator attaches a completely multiplicative weight `r(n) >= 0`
//! supported on X-smooth numbers to each discriminant through
//!
//! ```text
//! R_d = prod_{p <= X} (1 - r(p) chi_d(p))^(-1)
//!     = sum_{n X-smooth} r(n) chi_d(n)
//! ```
//!
//! `R_d^2` later serves as the weight that tilts averages of `-L'/L` toward
//! discriminants with large values. Three coefficient families are
//! supported, differing in how `r(p)` decays up to the cutoff
//! `X = c * ln N * ln ln N`.
//!
//! Everything numeric happens in log-space ([`resonator_value`] returns
//! `ln R_d`), and the Euler-product identity is checked against
//! [`smooth_sum_oracle`], a direct enumeration of the series.

use crate::characters::FundamentalDiscriminant;
use crate::error::{Error, MemoryBudget, Result};
use crate::primes::{euler_gamma, prime_constant, PrimeConstant, PrimeConstantKind};
use crate::sum::KahanSum;

/// Coefficient family of a resonator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ResonatorVariant {
    /// `r(p) = 1 - p/X`, `X = (1/4 - delta) ln N ln ln N`, weights at the
    /// central point `sigma = 1`.
    Unit { delta: f64 },
    /// `r(p) = 1 - X^(sigma_A - 1)` (flat), `sigma_A = 1 - a / ln ln N`,
    /// `X = kappa ln N ln ln N`.
    NearOne { a: f64, kappa: f64 },
    /// `r(p) = 1 - (p/X)^sigma` at fixed `sigma in (1/2, 1)`,
    /// `X = eta ln N ln ln N`.
    FixedSigma { sigma: f64, eta: f64 },
}

impl ResonatorVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ResonatorVariant::Unit { .. } => "unit",
            ResonatorVariant::NearOne { .. } => "near-one",
            ResonatorVariant::FixedSigma { .. } => "fixed-sigma",
        }
    }
}

/// A fully derived resonator: variant, scale `N`, cutoff `X`, effective
/// exponent, and the per-prime coefficients.
///
/// Construct through [`build_spec`]; the constructor enforces every
/// parameter range and precomputes `r(p)` for all primes `p <= X`.
#[derive(Debug, Clone)]
pub struct ResonatorSpec {
    variant: ResonatorVariant,
    n: u64,
    x: f64,
    sigma_eff: f64,
    /// `(p, r(p))` for primes `p <= X`, ascending; `r` may be 0 at `p = X`.
    coeffs: Vec<(u64, f64)>,
}

impl ResonatorSpec {
    pub fn variant(&self) -> &ResonatorVariant {
        &self.variant
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Smoothness cutoff `X`.
    pub fn x(&self) -> f64 {
        self.x
    }

    /// Exponent at which the main term weights primes: 1 for `Unit`,
    /// `sigma_A` for `NearOne`, `sigma` for `FixedSigma`.
    pub fn sigma_eff(&self) -> f64 {
        self.sigma_eff
    }

    /// `B = 1/4 - delta` for `Unit` specs.
    pub fn b(&self) -> Option<f64> {
        match self.variant {
            ResonatorVariant::Unit { delta } => Some(0.25 - delta),
            _ => None,
        }
    }

    #[cfg(test)]
    pub(crate) fn coeffs(&self) -> &[(u64, f64)] {
        &self.coeffs
    }
}

fn coeff_formula(variant: &ResonatorVariant, x: f64, sigma_eff: f64, p: u64) -> f64 {
    let pf = p as f64;
    if pf > x {
        return 0.0;
    }
    match variant {
        ResonatorVariant::Unit { .. } => 1.0 - pf / x,
        ResonatorVariant::NearOne { .. } => 1.0 - x.powf(sigma_eff - 1.0),
        ResonatorVariant::FixedSigma { sigma, .. } => 1.0 - (pf / x).powf(*sigma),
    }
}

/// Build a resonator for scale `N >= 16` (so `ln ln N > 1`), validating the
/// variant's parameter ranges and deriving `X` and `sigma_eff`.
pub fn build_spec(variant: ResonatorVariant, n: u64) -> Result<ResonatorSpec> {
    if n < 16 {
        return Err(Error::domain(format!(
            "resonator scale N must be at least 16, got {n}"
        )));
    }
    let ln_n = (n as f64).ln();
    let lln_n = ln_n.ln();
    let (x, sigma_eff) = match variant {
        ResonatorVariant::Unit { delta } => {
            if !(delta > 0.0 && delta < 0.25) {
                return Err(Error::domain(format!(
                    "delta must lie in (0, 1/4), got {delta}"
                )));
            }
            ((0.25 - delta) * ln_n * lln_n, 1.0)
        }
        ResonatorVariant::NearOne { a, kappa } => {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(Error::domain(format!(
                    "kappa must be positive, got {kappa}"
                )));
            }
            let sigma_a = 1.0 - a / lln_n;
            if !(sigma_a > 0.5 && sigma_a < 1.0) {
                return Err(Error::domain(format!(
                    "NearOne requires sigma_A = 1 - A/ln ln N in (1/2, 1); \
                     A = {a}, ln ln N = {lln_n} give sigma_A = {sigma_a}"
                )));
            }
            (kappa * ln_n * lln_n, sigma_a)
        }
        ResonatorVariant::FixedSigma { sigma, eta } => {
            if !(sigma > 0.5 && sigma < 1.0) {
                return Err(Error::domain(format!(
                    "FixedSigma requires sigma in (1/2, 1), got {sigma}"
                )));
            }
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::domain(format!("eta must be positive, got {eta}")));
            }
            (eta * ln_n * lln_n, sigma)
        }
    };

    let coeffs = if x < 2.0 {
        Vec::new()
    } else {
        let primes =
            crate::primes::sieve_primes_with_budget(x.floor() as u64, &MemoryBudget::from_env())?;
        primes
            .into_iter()
            .filter(|&p| (p as f64) <= x)
            .map(|p| {
                let r = coeff_formula(&variant, x, sigma_eff, p);
                debug_assert!((0.0..1.0).contains(&r), "r({p}) = {r} out of [0, 1)");
                (p, r)
            })
            .collect()
    };

    Ok(ResonatorSpec {
        variant,
        n,
        x,
        sigma_eff,
        coeffs,
    })
}

/// Invert the `Unit` cutoff formula: the scale `N` whose derived cutoff
/// `(1/4 - delta) ln N ln ln N` is closest to `target_x`.
///
/// Useful for cutoff-targeted studies where `X`, not `N`, is the knob; the
/// achieved cutoff differs from `target_x` only by the integer quantization
/// of `N` (relative error well under 1e-6 for `target_x >= 6`).
pub fn unit_n_for_cutoff(delta: f64, target_x: f64) -> Result<u64> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::domain(format!(
            "delta must lie in (0, 1/4), got {delta}"
        )));
    }
    if !(target_x.is_finite() && target_x > 0.0) {
        return Err(Error::domain(format!(
            "target cutoff must be positive, got {target_x}"
        )));
    }
    let b = 0.25 - delta;
    let v = target_x / b;
    // Solve t ln t = v for t = ln N by damped fixed-point iteration.
    let mut t = (v / v.ln().max(1.1)).max(std::f64::consts::E);
    for _ in 0..64 {
        t = (v + t) / (1.0 + t.ln());
    }
    let n_real = t.exp();
    if !(n_real.is_finite() && n_real < 9.0e15) {
        return Err(Error::domain(format!(
            "target cutoff {target_x} needs N ~ {n_real:.3e}, beyond exact integer range"
        )));
    }
    let center = n_real.round().max(16.0) as u64;
    let cutoff_err = |n: u64| {
        let ln_n = (n as f64).ln();
        (b * ln_n * ln_n.ln() - target_x).abs()
    };
    let best = (center.saturating_sub(2)..=center + 2)
        .filter(|&n| n >= 16)
        .min_by(|&a, &c| cutoff_err(a).total_cmp(&cutoff_err(c)))
        .expect("candidate window is never empty");
    if cutoff_err(best) > 0.01 * target_x {
        return Err(Error::domain(format!(
            "no scale N >= 16 reaches cutoff {target_x} with delta = {delta}"
        )));
    }
    Ok(best)
}

/// Coefficient `r(p)` of a built resonator at a prime `p`; 0 for `p > X`.
pub fn resonator_coeff(spec: &ResonatorSpec, p: u64) -> f64 {
    debug_assert!(
        {
            let mut q = 2u64;
            let mut prime = p >= 2;
            while q * q <= p {
                if p % q == 0 {
                    prime = false;
                    break;
                }
                q += 1;
            }
            prime
        },
        "{p} is not prime"
    );
    coeff_formula(&spec.variant, spec.x, spec.sigma_eff, p)
}

/// `ln R_d = sum_{p <= X} -ln(1 - r(p) chi_d(p))`.
///
/// Each factor lies in `[1/2, X/p]` (never singular since `r(p) < 1`), so
/// the log-sum is always finite. Returns 0 for `X < 2` (empty product).
pub fn resonator_value(spec: &ResonatorSpec, d: FundamentalDiscriminant) -> f64 {
    let mut acc = KahanSum::new();
    for &(p, r) in &spec.coeffs {
        let s = d.chi(p);
        if s == 0 || r == 0.0 {
            continue;
        }
        let factor = if s > 0 { 1.0 - r } else { 1.0 + r };
        acc.add(-factor.ln());
    }
    acc.value()
}

/// Default cap on the number of series terms [`smooth_sum_oracle`] will
/// enumerate before reporting a capacity error.
pub const SMOOTH_TERM_BUDGET: u64 = 100_000_000;

/// Direct enumeration of `sum_{n <= M, n X-smooth} r(n) chi_d(n)` — the
/// independent series oracle for [`resonator_value`]. Requires `M >= 1`.
pub fn smooth_sum_oracle(spec: &ResonatorSpec, d: FundamentalDiscriminant, m: u64) -> Result<f64> {
    smooth_sum_oracle_with_budget(spec, d, m, SMOOTH_TERM_BUDGET)
}

/// [`smooth_sum_oracle`] with an explicit term budget.
pub fn smooth_sum_oracle_with_budget(
    spec: &ResonatorSpec,
    d: FundamentalDiscriminant,
    m: u64,
    budget: u64,
) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain(format!("M must be at least 1, got {m}")));
    }
    // (p, r(p), chi_d(p)) for primes that can contribute a nonzero term.
    let items: Vec<(u64, f64, f64)> = spec
        .coeffs
        .iter()
        .filter(|&&(p, r)| r > 0.0 && d.chi(p) != 0)
        .map(|&(p, r)| (p, r, f64::from(d.chi(p))))
        .collect();
    let mut acc = KahanSum::new();
    let mut left = budget;
    dfs_terms(&items, 0, 1, m, 1.0, &mut acc, &mut left)?;
    Ok(acc.value())
}

/// Depth-first enumeration over exponent vectors, lexicographic in the
/// prime list with exponents ascending — a fixed, deterministic term order.
fn dfs_terms(
    items: &[(u64, f64, f64)],
    idx: usize,
    n: u64,
    cap: u64,
    val: f64,
    acc: &mut KahanSum,
    budget: &mut u64,
) -> Result<()> {
    if idx == items.len() {
        if *budget == 0 {
            return Err(Error::capacity(
                "smooth-sum enumeration",
                format!("more than the budgeted terms up to M = {cap}"),
                "term budget exhausted",
            ));
        }
        *budget -= 1;
        acc.add(val);
        return Ok(());
    }
    dfs_terms(items, idx + 1, n, cap, val, acc, budget)?;
    let (p, r, s) = items[idx];
    let mut n = n;
    let mut val = val;
    while let Some(next) = n.checked_mul(p) {
        if next > cap {
            break;
        }
        n = next;
        val *= r * s;
        dfs_terms(items, idx + 1, n, cap, val, acc, budget)?;
    }
    Ok(())
}

/// Default cap on enumeration nodes for [`smooth_sum_stabilized`].
pub const SMOOTH_NODE_BUDGET: u64 = 30_000_000;

/// Outcome of the doubling stop rule on the smooth-sum series.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SmoothSumStabilized {
    /// `M* = 2^log2_m_star`, the first cap after every per-doubling
    /// increment of magnitude `>= tol` (verified quiet for 8 further
    /// doublings inside the enumerated horizon).
    pub log2_m_star: u32,
    /// `S(M*)`.
    pub value: f64,
    /// Horizon (in doublings) actually enumerated.
    pub horizon_log2: u32,
    /// Series terms visited.
    pub nodes: u64,
}

/// Run the doubling stop rule: enumerate the X-smooth series bucketed by
/// `ceil(log2 n)` and find the cap `M*` past the last doubling that moved
/// the partial sum by at least `tol`.
///
/// The per-doubling increment from `M = 2^(k-1)` to `2^k` is exactly the
/// bucket sum `b_k`, so `M* = 2^(k*+1)` with `k* = max{k : |b_k| >= tol}`
/// (`k* = 0` when no doubling ever moves the sum that much). A naive
/// "stop at the first small move" rule would mistake a zero increment —
/// routine for even `d`, where `chi_d(2) = 0` silences every power-of-two
/// bucket — for convergence; requiring the *last* large move plus eight
/// further quiet doublings makes the rule robust.
///
/// The work needed grows combinatorially in `X` (the slowest coefficient
/// decays like `r(p)^(k / log2 p)` per doubling); the predicted horizon is
/// costed before enumeration and a capacity error is returned when it
/// cannot fit the node budget.
pub fn smooth_sum_stabilized(
    spec: &ResonatorSpec,
    d: FundamentalDiscriminant,
    tol: f64,
    node_budget: u64,
) -> Result<SmoothSumStabilized> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain(format!("tol must lie in (0, 1), got {tol}")));
    }
    let items: Vec<(u64, f64, f64)> = spec
        .coeffs
        .iter()
        .filter(|&&(p, r)| r > 0.0 && d.chi(p) != 0)
        .map(|&(p, r)| (p, r, f64::from(d.chi(p))))
        .collect();
    if items.is_empty() {
        // Only n = 1 contributes: the series is the constant 1.
        return Ok(SmoothSumStabilized {
            log2_m_star: 0,
            value: 1.0,
            horizon_log2: 0,
            nodes: 1,
        });
    }

    // Slowest per-doubling decay rate across primes.
    let rho = items
        .iter()
        .map(|&(p, r, _)| -r.ln() / (p as f64).log2())
        .fold(f64::INFINITY, f64::min);
    let k_pred = (1.0 / tol).ln() / rho;
    let horizon = ((k_pred * 1.5).ceil() as u32 + 16).clamp(24, 126);

    // A-priori cost: upper bound on the number of X-smooth n <= 2^horizon.
    let ln_cap = horizon as f64 * std::f64::consts::LN_2;
    let est: f64 = items
        .iter()
        .map(|&(p, _, _)| ln_cap / (p as f64).ln() + 1.0)
        .product();
    if est > node_budget as f64 {
        return Err(Error::capacity(
            format!(
                "smooth-sum stop rule at X = {:.4} (predicted horizon 2^{horizon})",
                spec.x
            ),
            format!("~{est:.2e} series terms"),
            format!("{node_budget} terms"),
        ));
    }

    let mut buckets = vec![KahanSum::new(); horizon as usize + 1];
    let mut nodes = 0u64;
    dfs_buckets(
        &items,
        0,
        1u128,
        1u128 << horizon,
        1.0,
        &mut buckets,
        &mut nodes,
        node_budget,
    )?;

    let last_move = (1..=horizon as usize)
        .rev()
        .find(|&k| buckets[k].value().abs() >= tol)
        .unwrap_or(0) as u32;
    if last_move + 8 > horizon {
        return Err(Error::capacity(
            format!("smooth-sum stop rule at X = {:.4}", spec.x),
            format!("horizon beyond 2^{horizon} (last big increment at 2^{last_move})"),
            format!("{node_budget} terms"),
        ));
    }
    let k_star = last_move + 1;
    let mut total = KahanSum::new();
    for b in &buckets[..=k_star as usize] {
        total.add(b.value());
    }
    Ok(SmoothSumStabilized {
        log2_m_star: k_star,
        value: total.value(),
        horizon_log2: horizon,
        nodes,
    })
}

#[allow(clippy::too_many_arguments)]
fn dfs_buckets(
    items: &[(u64, f64, f64)],
    idx: usize,
    n: u128,
    cap: u128,
    val: f64,
    buckets: &mut [KahanSum],
    nodes: &mut u64,
    budget: u64,
) -> Result<()> {
    if idx == items.len() {
        if *nodes >= budget {
            return Err(Error::capacity(
                "smooth-sum enumeration",
                "more terms than budgeted",
                format!("{budget} terms"),
            ));
        }
        *nodes += 1;
        // Bucket by ceil(log2 n): n = 1 -> 0, (2^(k-1), 2^k] -> k.
        let k = if n == 1 {
            0
        } else {
            128 - (n - 1).leading_zeros()
        };
        buckets[k as usize].add(val);
        return Ok(());
    }
    dfs_buckets(items, idx + 1, n, cap, val, buckets, nodes, budget)?;
    let (p, r, s) = items[idx];
    let p = p as u128;
    let mut n = n;
    let mut val = val;
    while let Some(next) = n.checked_mul(p) {
        if next > cap {
            break;
        }
        n = next;
        val *= r * s;
        dfs_buckets(items, idx + 1, n, cap, val, buckets, nodes, budget)?;
    }
    Ok(())
}

/// The variant's first-moment main term, by direct prime summation (never a
/// closed form):
///
/// ```text
/// sum_{p <= X} (ln p / p^sigma_eff) r(p) p/(p+1)
/// ```
///
/// which reduces to `sum (ln p / (p+1)) r(p)` for `Unit` (`sigma_eff = 1`).
pub fn main_term(spec: &ResonatorSpec) -> f64 {
    let mut acc = KahanSum::new();
    let sigma = spec.sigma_eff;
    for &(p, r) in &spec.coeffs {
        if r == 0.0 {
            continue;
        }
        let pf = p as f64;
        let weight = if sigma == 1.0 {
            1.0 / pf
        } else {
            pf.powf(-sigma)
        };
        acc.add(pf.ln() * weight * r * pf / (pf + 1.0));
    }
    acc.value()
}

/// The two candidate closed-form constants for the `Unit` main term, both
/// reported — the artifact measures, it does not adjudicate between them.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ClosedFormConstants {
    pub delta: f64,
    /// `ln(1/4 - delta) - gamma - 1 - sum_p ln p/(p^2 - 1)`.
    #[serde(rename = "C_paper")]
    pub c_paper: f64,
    /// Same with the prime sum doubled (the alternative that a termwise
    /// re-expansion of the main term suggests).
    #[serde(rename = "C_alt")]
    pub c_alt: f64,
    pub gamma: f64,
    /// The truncated prime sum both constants are built from.
    pub base: PrimeConstant,
}

/// Compute both closed-form constants at prime cutoff `p_cutoff >= 10^3`.
pub fn closed_form_constants(delta: f64, p_cutoff: u64) -> Result<ClosedFormConstants> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::domain(format!(
            "delta must lie in (0, 1/4), got {delta}"
        )));
    }
    if p_cutoff < 1_000 {
        return Err(Error::domain(format!(
            "prime cutoff must be at least 10^3, got {p_cutoff}"
        )));
    }
    let base = prime_constant(PrimeConstantKind::LogOverP2Minus1, p_cutoff)?;
    let gamma = euler_gamma();
    let head = (0.25 - delta).ln() - gamma - 1.0;
    Ok(ClosedFormConstants {
        delta,
        c_paper: head - base.value,
        c_alt: head - 2.0 * base.value,
        gamma,
        base,
    })
}

/// Prime cutoff used internally when thresholds need the closed-form
/// constant; its tail bound (3e-5) is far below every threshold tolerance.
pub const THRESHOLD_PRIME_CUTOFF: u64 = 1_000_000;

/// Detection thresholds for the distribution experiment.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Thresholds {
    /// `J = ln ln N + ln ln ln N + C_paper - x + trunc_err + e` with
    /// `e = exp(-(ln ln N)^(1/3)) / 2`.
    pub j: f64,
    /// `J - e`, the relaxed threshold actually compared against.
    pub j_tilde: f64,
}

/// Thresholds at scale `N >= 16`, shift `x >= 0`, with the measured
/// truncation error folded in.
pub fn threshold_j(n: u64, x: f64, delta: f64, trunc_err: f64) -> Result<Thresholds> {
    if n < 16 {
        return Err(Error::domain(format!(
            "threshold scale N must be at least 16, got {n}"
        )));
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::domain(format!(
            "threshold shift x must be >= 0, got {x}"
        )));
    }
    if !(trunc_err.is_finite() && trunc_err >= 0.0) {
        return Err(Error::domain(format!(
            "truncation error must be >= 0, got {trunc_err}"
        )));
    }
    let constants = closed_form_constants(delta, THRESHOLD_PRIME_CUTOFF)?;
    let lln = (n as f64).ln().ln();
    let e = 0.5 * (-lln.cbrt()).exp();
    let j = lln + lln.ln() + constants.c_paper - x + trunc_err + e;
    Ok(Thresholds { j, j_tilde: j - e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::FundamentalDiscriminant;

    fn fd(d: i64) -> FundamentalDiscriminant {
        FundamentalDiscriminant::new(d).unwrap()
    }

    /// Unit spec whose cutoff is within quantization error of `target_x`.
    fn unit_spec_at_x(target_x: f64) -> ResonatorSpec {
        let n = unit_n_for_cutoff(0.01, target_x).unwrap();
        let spec = build_spec(ResonatorVariant::Unit { delta: 0.01 }, n).unwrap();
        assert!(
            (spec.x() - target_x).abs() < 1e-5 * target_x,
            "cutoff solver missed: wanted {target_x}, got {}",
            spec.x()
        );
        spec
    }

    #[test]
    fn build_spec_derives_unit_cutoff() {
        let spec = build_spec(ResonatorVariant::Unit { delta: 0.01 }, 1_000_000).unwrap();
        // X = 0.24 * ln(1e6) * ln ln(1e6), frozen from direct arithmetic.
        assert!((spec.x() - 8.706397420190532).abs() < 1e-12);
        assert_eq!(spec.sigma_eff(), 1.0);
        assert_eq!(spec.b(), Some(0.24));
        // Primes up to 8.7: {2, 3, 5, 7}.
        let ps: Vec<u64> = spec.coeffs().iter().map(|c| c.0).collect();
        assert_eq!(ps, vec![2, 3, 5, 7]);
    }

    #[test]
    fn build_spec_near_one_sigma_eff() {
        let spec = build_spec(ResonatorVariant::NearOne { a: 1.0, kappa: 0.1 }, 1_000_000).unwrap();
        assert!((spec.sigma_eff() - 0.6191625107507597).abs() < 1e-12);
        // A = 3 drives sigma_A below 1/2.
        let err = build_spec(ResonatorVariant::NearOne { a: 3.0, kappa: 0.1 }, 1_000_000);
        match err {
            Err(Error::Domain(msg)) => assert!(msg.contains("sigma_A"), "{msg}"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn build_spec_rejects_bad_parameters() {
        assert!(build_spec(ResonatorVariant::Unit { delta: 0.01 }, 15).is_err());
        assert!(build_spec(ResonatorVariant::Unit { delta: 0.0 }, 100).is_err());
        assert!(build_spec(ResonatorVariant::Unit { delta: 0.25 }, 100).is_err());
        assert!(build_spec(ResonatorVariant::Unit { delta: f64::NAN }, 100).is_err());
        assert!(build_spec(
            ResonatorVariant::FixedSigma {
                sigma: 0.5,
                eta: 1.0
            },
            100
        )
        .is_err());
        assert!(build_spec(
            ResonatorVariant::FixedSigma {
                sigma: 1.0,
                eta: 1.0
            },
            100
        )
        .is_err());
        assert!(build_spec(
            ResonatorVariant::FixedSigma {
                sigma: 0.75,
                eta: -1.0
            },
            100
        )
        .is_err());
        assert!(build_spec(ResonatorVariant::NearOne { a: 1.0, kappa: 0.0 }, 1_000_000).is_err());
    }

    #[test]
    fn coeff_values_match_hand_arithmetic() {
        let spec = unit_spec_at_x(10.0);
        assert!((resonator_coeff(&spec, 2) - 0.8).abs() < 1e-6);
        assert!((resonator_coeff(&spec, 7) - 0.3).abs() < 1e-6);
        assert_eq!(resonator_coeff(&spec, 11), 0.0);
        assert_eq!(resonator_coeff(&spec, 10_007), 0.0);
    }

    #[test]
    fn fixed_sigma_coeff_frozen() {
        // 1 - (2/16)^0.75 checked against the independent route
        // 1 - exp(0.75 ln(1/8)) = 0.7897758961865714.
        let n = 1_000_000u64;
        let ln_n = (n as f64).ln();
        let eta = 16.0 / (ln_n * ln_n.ln());
        let spec = build_spec(ResonatorVariant::FixedSigma { sigma: 0.75, eta }, n).unwrap();
        assert!((spec.x() - 16.0).abs() < 1e-9);
        let r2 = resonator_coeff(&spec, 2);
        assert!((r2 - 0.7897758961865714).abs() < 1e-9, "r(2) = {r2}");
        let independent = 1.0 - (0.75 * (1.0f64 / 8.0).ln()).exp();
        assert!((r2 - independent).abs() < 1e-9);
    }

    #[test]
    fn coeffs_stay_in_unit_interval() {
        for spec in [
            unit_spec_at_x(10.0),
            unit_spec_at_x(30.0),
            build_spec(ResonatorVariant::NearOne { a: 1.0, kappa: 0.1 }, 1_000_000).unwrap(),
            build_spec(
                ResonatorVariant::FixedSigma {
                    sigma: 0.75,
                    eta: 0.3,
                },
                1_000_000,
            )
            .unwrap(),
        ] {
            for &(p, r) in spec.coeffs() {
                assert!(
                    (0.0..1.0).contains(&r),
                    "r({p}) = {r} in {:?}",
                    spec.variant()
                );
            }
        }
    }

    #[test]
    fn resonator_value_hand_product() {
        // X = 10, d = 5: chi_5 = -1 at 2, 3, 7 and 0 at 5, so
        // R_5 = 1/(1.8 * 1.7 * 1.3).
        let spec = unit_spec_at_x(10.0);
        let ln_r5 = resonator_value(&spec, fd(5));
        let expect = -(1.8f64 * 1.7 * 1.3).ln();
        assert!((ln_r5 - expect).abs() < 1e-6, "{ln_r5} vs {expect}");
        assert!((ln_r5.exp() - 0.25138).abs() < 1e-4);
    }

    #[test]
    fn empty_product_below_two() {
        let n = unit_n_for_cutoff(0.24999, 1.5).unwrap_or(16);
        let spec = build_spec(ResonatorVariant::Unit { delta: 0.24999 }, n).unwrap();
        assert!(spec.x() < 2.0);
        assert_eq!(resonator_value(&spec, fd(5)), 0.0);
        assert_eq!(main_term(&spec), 0.0);
        assert_eq!(smooth_sum_oracle(&spec, fd(5), 1_000_000).unwrap(), 1.0);
    }

    #[test]
    fn smooth_sum_tiny_cases() {
        let spec = unit_spec_at_x(10.0);
        // M = 1: only n = 1 contributes r(1) = 1.
        assert_eq!(smooth_sum_oracle(&spec, fd(5), 1).unwrap(), 1.0);
        assert!(smooth_sum_oracle(&spec, fd(5), 0).is_err());
        // M = 6, d = 5: 1 + r(2)chi(2) + r(3)chi(3) + r(4)chi(4) + r(5)chi(5)
        //             + r(6)chi(6) with chi_5(2) = chi_5(3) = -1.
        let (r2, r3) = (resonator_coeff(&spec, 2), resonator_coeff(&spec, 3));
        let expect = 1.0 - r2 - r3 + r2 * r2 + 0.0 + r2 * r3;
        let got = smooth_sum_oracle(&spec, fd(5), 6).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn smooth_sum_frozen_at_million() {
        // Frozen from the independent python enumeration; note this cap is
        // NOT yet inside the stop rule's quiet zone (|R - S| ~ 3.7e-3).
        let spec = unit_spec_at_x(10.0);
        let s = smooth_sum_oracle(&spec, fd(5), 1_000_000).unwrap();
        assert!((s - 0.2550781905658521).abs() < 1e-6, "S(1e6) = {s}");
    }

    #[test]
    fn smooth_sum_budget_trips() {
        let spec = unit_spec_at_x(10.0);
        match smooth_sum_oracle_with_budget(&spec, fd(5), 1_000_000, 10) {
            Err(Error::Capacity { .. }) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn stop_rule_reaches_product_value() {
        // The doubling stop rule must land within 1e-3 of the Euler
        // product for every fundamental |d| <= 200 at X ~ 6 and 10.
        for target_x in [6.0, 10.0] {
            let spec = unit_spec_at_x(target_x);
            let mut worst = (0.0f64, 0i64);
            for f in crate::characters::enum_fundamental(0, 200).unwrap() {
                let product = resonator_value(&spec, f).exp();
                let st = smooth_sum_stabilized(&spec, f, 1e-4, SMOOTH_NODE_BUDGET).unwrap();
                let gap = (product - st.value).abs();
                if gap > worst.0 {
                    worst = (gap, f.get());
                }
                assert!(
                    gap < 1e-3,
                    "X = {target_x}, d = {}: |product - series| = {gap} (M* = 2^{})",
                    f.get(),
                    st.log2_m_star
                );
            }
            println!(
                "X = {target_x}: worst |product - series| = {:.3e} at d = {}",
                worst.0, worst.1
            );
        }
    }

    #[test]
    fn stop_rule_value_matches_plain_oracle() {
        // For caps small enough to enumerate directly, the bucketed value
        // at M* must equal the plain oracle at the same cap.
        let spec = unit_spec_at_x(6.0);
        for d in [-3i64, 5, 8, -120, 197] {
            let st = smooth_sum_stabilized(&spec, fd(d), 1e-4, SMOOTH_NODE_BUDGET).unwrap();
            assert!(st.log2_m_star < 63, "cap too large to cross-check");
            let direct = smooth_sum_oracle(&spec, fd(d), 1u64 << st.log2_m_star).unwrap();
            assert!(
                (st.value - direct).abs() < 1e-9,
                "d = {d}: bucketed {} vs direct {direct}",
                st.value
            );
        }
    }

    #[test]
    fn stop_rule_survives_silent_even_buckets() {
        // Even d silence every power-of-two bucket; the rule must keep
        // going and still match the product.
        let spec = unit_spec_at_x(6.0);
        let st = smooth_sum_stabilized(&spec, fd(8), 1e-4, SMOOTH_NODE_BUDGET).unwrap();
        assert!(
            st.log2_m_star > 4,
            "stopped absurdly early: 2^{}",
            st.log2_m_star
        );
        let product = resonator_value(&spec, fd(8)).exp();
        assert!((product - st.value).abs() < 1e-3);
    }

    #[test]
    fn stop_rule_costs_big_cutoffs_before_enumerating() {
        // X = 30 needs ~2^135 horizons: must fail fast with capacity.
        let spec = unit_spec_at_x(30.0);
        let t0 = std::time::Instant::now();
        match smooth_sum_stabilized(&spec, fd(5), 1e-4, SMOOTH_NODE_BUDGET) {
            Err(Error::Capacity { .. }) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
        assert!(
            t0.elapsed().as_millis() < 100,
            "capacity check must be a-priori"
        );
    }

    #[test]
    fn log_value_never_exceeds_all_plus_one_bound() {
        // ln R_d <= sum_p -ln(1 - r(p)), attained when chi_d = 1 everywhere.
        for target_x in [6.0, 10.0, 30.0] {
            let spec = unit_spec_at_x(target_x);
            let mut bound = KahanSum::new();
            for &(_, r) in spec.coeffs() {
                bound.add(-(1.0 - r).ln());
            }
            for f in crate::characters::enum_fundamental(0, 300).unwrap() {
                let v = resonator_value(&spec, f);
                assert!(
                    v <= bound.value() + 1e-12,
                    "d = {}: ln R = {v} > bound {}",
                    f.get(),
                    bound.value()
                );
            }
        }
    }

    #[test]
    fn main_term_unit_hand_sum() {
        // X = 10: sum ln p/(p+1) (1 - p/10) over p in {2, 3, 5, 7}.
        let spec = unit_spec_at_x(10.0);
        let expect = 2f64.ln() / 3.0 * 0.8
            + 3f64.ln() / 4.0 * 0.7
            + 5f64.ln() / 6.0 * 0.5
            + 7f64.ln() / 8.0 * 0.3;
        let got = main_term(&spec);
        assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
        assert!((got - 0.5842).abs() < 1e-4);
    }

    #[test]
    fn main_term_fixed_sigma_tracks_asymptote() {
        // A2(X) ~ (sigma/(1-sigma)) X^(1-sigma) within 25% at X = 10^4.
        let n = 1_000_000u64;
        let ln_n = (n as f64).ln();
        let eta = 1.0e4 / (ln_n * ln_n.ln());
        let spec = build_spec(ResonatorVariant::FixedSigma { sigma: 0.75, eta }, n).unwrap();
        let asymptote = 3.0 * 10.0; // (0.75/0.25) * (1e4)^0.25
        let got = main_term(&spec);
        assert!(
            (got / asymptote - 1.0).abs() < 0.25,
            "A2 = {got}, asymptote = {asymptote}"
        );
    }

    #[test]
    fn main_term_minus_ln_x_is_cauchy() {
        // A(N) - ln X settles down: successive gaps shrink over decades.
        let f = |n: u64| {
            let spec = build_spec(ResonatorVariant::Unit { delta: 0.01 }, n).unwrap();
            main_term(&spec) - spec.x().ln()
        };
        let (a, b, c) = (f(10_000), f(1_000_000), f(100_000_000));
        let (d1, d2) = ((b - a).abs(), (c - b).abs());
        println!("A(N) - ln X: {a:.6}, {b:.6}, {c:.6}; gaps {d1:.6}, {d2:.6}");
        assert!(d2 < d1, "gaps must shrink: {d1} then {d2}");
    }

    #[test]
    fn size_bound_trend() {
        // 2 ln R_d / ln N over sampled d stays below 2B + 0.2 and the
        // margin tightens as N grows.
        let mut ratios = Vec::new();
        for n in [10_000u64, 100_000, 1_000_000] {
            let spec = build_spec(ResonatorVariant::Unit { delta: 0.01 }, n).unwrap();
            let bound = 2.0 * spec.b().unwrap() + 0.2;
            let mut max_ratio = f64::MIN;
            for f in crate::characters::enum_fundamental(n, n + 5_000).unwrap() {
                let ratio = 2.0 * resonator_value(&spec, f) / (n as f64).ln();
                max_ratio = max_ratio.max(ratio);
            }
            println!("N = {n}: max 2 ln R / ln N = {max_ratio:.4} (bound {bound:.4})");
            assert!(max_ratio < bound, "N = {n}: {max_ratio} >= {bound}");
            ratios.push(bound - max_ratio);
        }
        assert!(
            ratios[2] < ratios[0],
            "margin should shrink from N=1e4 ({}) to N=1e6 ({})",
            ratios[0],
            ratios[2]
        );
    }

    #[test]
    fn closed_form_constants_frozen() {
        // At P = 10^5: C_paper = ln 0.24 - gamma - 1 - 0.56995...
        let c = closed_form_constants(0.01, 100_000).unwrap();
        assert!((c.c_paper - (-3.5742830306634903)).abs() < 1e-9);
        assert!((c.c_alt - (-4.144234040785301)).abs() < 1e-9);
        assert!((c.c_paper - (-3.5743)).abs() < 1e-3);
        assert!((c.c_alt - (-4.1443)).abs() < 1e-3);
        // C_alt = C_paper - (prime sum).
        assert!((c.c_alt - (c.c_paper - c.base.value)).abs() < 1e-12);

        let c6 = closed_form_constants(0.01, 1_000_000).unwrap();
        assert!((c6.c_paper - (-3.5742920136060063)).abs() < 1e-9);
        assert!((c6.c_alt - (-4.144252006670334)).abs() < 1e-9);
    }

    #[test]
    fn closed_form_constants_monotone_in_delta() {
        let mut prev = f64::INFINITY;
        for delta in [0.01, 0.05, 0.1, 0.2, 0.24, 0.249] {
            let c = closed_form_constants(delta, 1_000).unwrap();
            assert!(c.c_paper < prev, "C_paper must fall as delta -> 1/4");
            assert!(c.c_alt < c.c_paper);
            prev = c.c_paper;
        }
        assert!(closed_form_constants(0.3, 1_000).is_err());
        assert!(closed_form_constants(0.01, 999).is_err());
    }

    #[test]
    fn thresholds_frozen_at_million() {
        let t = threshold_j(1_000_000, 0.0, 0.01, 0.0).unwrap();
        assert!((t.j - 0.14272193554370063).abs() < 1e-9, "J = {}", t.j);
        assert!((t.j_tilde - 0.016882433121963025).abs() < 1e-9);
        // J - J_tilde = e exactly.
        let lln = 1e6f64.ln().ln();
        let e = 0.5 * (-lln.cbrt()).exp();
        assert!((t.j - t.j_tilde - e).abs() < 1e-15);
    }

    #[test]
    fn thresholds_strictly_decrease_in_x() {
        let mut prev = f64::INFINITY;
        for x in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let t = threshold_j(1_000_000, x, 0.01, 0.0).unwrap();
            assert!(t.j < prev);
            prev = t.j;
        }
        assert!(threshold_j(15, 0.0, 0.01, 0.0).is_err());
        assert!(threshold_j(1_000_000, -0.5, 0.01, 0.0).is_err());
    }

    #[test]
    fn cutoff_solver_covers_study_targets() {
        for x in [6.0, 10.0, 20.0, 30.0] {
            let n = unit_n_for_cutoff(0.01, x).unwrap();
            let spec = build_spec(ResonatorVariant::Unit { delta: 0.01 }, n).unwrap();
            assert!(
                (spec.x() - x).abs() < 1e-5 * x,
                "X({n}) = {} vs target {x}",
                spec.x()
            );
        }
    }
}
