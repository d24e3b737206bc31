//! Prime sieves and prime sums with explicit tail bounds.
//!
//! Everything here is deterministic and budget-checked: allocations that
//! scale with a sieve limit go through [`MemoryBudget`] and fail with a
//! capacity error instead of aborting.

use crate::error::{Error, MemoryBudget, Result};
use crate::sum::KahanSum;

/// Estimate of the number of primes below `limit`, used only to size
/// allocations (slight overestimate of pi(limit) for limit >= 17).
fn estimate_prime_count(limit: u64) -> u64 {
    if limit < 17 {
        return 8;
    }
    let x = limit as f64;
    (1.26 * x / x.ln()) as u64 + 8
}

/// All primes `<= limit`, ascending, via an odd-only sieve of Eratosthenes.
///
/// Memory is budgeted from the environment (`RES_SCOPE_MEM_MB`); see
/// [`sieve_primes_with_budget`] for an explicit budget.
pub fn sieve_primes(limit: u64) -> Result<Vec<u64>> {
    sieve_primes_with_budget(limit, &MemoryBudget::from_env())
}

/// All primes `<= limit` with an explicit memory budget.
pub fn sieve_primes_with_budget(limit: u64, budget: &MemoryBudget) -> Result<Vec<u64>> {
    if limit < 2 {
        return Ok(Vec::new());
    }
    // Bitmap over odd numbers (1 bit per odd) plus the output vector.
    let bitmap_bytes = limit / 16 + 16;
    let output_bytes = estimate_prime_count(limit) * 8;
    budget.check("prime sieve", bitmap_bytes + output_bytes)?;

    let mut primes = Vec::with_capacity(estimate_prime_count(limit) as usize);
    primes.push(2);
    if limit < 3 {
        return Ok(primes);
    }

    // Index i represents the odd number 2i + 3.
    let n_odds = ((limit - 1) / 2) as usize;
    let mut composite = vec![0u64; (n_odds + 63) / 64];
    let mut i = 0usize;
    loop {
        let p = 2 * i as u64 + 3;
        if p * p > limit {
            break;
        }
        if composite[i >> 6] & (1 << (i & 63)) == 0 {
            let mut j = ((p * p - 3) / 2) as usize;
            while j < n_odds {
                composite[j >> 6] |= 1 << (j & 63);
                j += p as usize;
            }
        }
        i += 1;
    }
    for i in 0..n_odds {
        if composite[i >> 6] & (1 << (i & 63)) == 0 {
            primes.push(2 * i as u64 + 3);
        }
    }
    Ok(primes)
}

fn require_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {x}")))
    }
}

/// Mertens-type sum `sum_{p <= x} ln(p) / p`.
///
/// Grows like `ln x - gamma - sum_p ln(p)/(p(p-1)) + o(1)`; the consistency
/// of those pieces is pinned in the tests. Returns 0 for `x < 2`.
pub fn mertens_log_sum(x: f64) -> Result<f64> {
    require_finite("x", x)?;
    if x < 2.0 {
        return Ok(0.0);
    }
    let primes = sieve_primes(x as u64)?;
    let k: KahanSum = primes.iter().map(|&p| (p as f64).ln() / p as f64).collect();
    Ok(k.value())
}

/// Chebyshev function `theta(x) = sum_{p <= x} ln(p)`.
///
/// Asymptotically `x` by the prime number theorem. Returns 0 for `x < 2`.
pub fn chebyshev_theta(x: f64) -> Result<f64> {
    require_finite("x", x)?;
    if x < 2.0 {
        return Ok(0.0);
    }
    let primes = sieve_primes(x as u64)?;
    let k: KahanSum = primes.iter().map(|&p| (p as f64).ln()).collect();
    Ok(k.value())
}

/// Which convergent prime sum to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PrimeConstantKind {
    /// `sum_p ln(p) / (p^2 - 1)`
    LogOverP2Minus1,
    /// `sum_p ln(p) / (p (p + 1))`
    LogOverPPPlus1,
    /// `sum_p ln(p) / (p (p - 1))`
    LogOverPPMinus1,
}

impl PrimeConstantKind {
    fn term(self, p: f64) -> f64 {
        let lp = p.ln();
        match self {
            PrimeConstantKind::LogOverP2Minus1 => lp / (p * p - 1.0),
            PrimeConstantKind::LogOverPPPlus1 => lp / (p * (p + 1.0)),
            PrimeConstantKind::LogOverPPMinus1 => lp / (p * (p - 1.0)),
        }
    }
}

/// A partial prime sum together with a rigorous bound on what was cut off.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PrimeConstant {
    pub kind: PrimeConstantKind,
    pub cutoff: u64,
    /// `sum_{p <= cutoff}` of the kind's term.
    pub value: f64,
    /// Upper bound on `sum_{p > cutoff}`; the full constant lies in
    /// `[value, value + tail_bound]`.
    pub tail_bound: f64,
}

/// Evaluate one of the convergent prime sums up to `cutoff`, with a tail
/// bound.
///
/// Tail bound: each term is at most `2 ln(n) / n^2` for `n >= 2` (the
/// `p(p-1)` denominator is the smallest of the three and still at least
/// `p^2 / 2`), and `sum_{n > P} 2 ln(n)/n^2 <= 2 (ln P + 1) / P` by the
/// integral test. Requires `cutoff >= 2`.
pub fn prime_constant(kind: PrimeConstantKind, cutoff: u64) -> Result<PrimeConstant> {
    if cutoff < 2 {
        return Err(Error::domain(format!(
            "prime_constant cutoff must be at least 2, got {cutoff}"
        )));
    }
    let primes = sieve_primes(cutoff)?;
    let k: KahanSum = primes.iter().map(|&p| kind.term(p as f64)).collect();
    let pf = cutoff as f64;
    Ok(PrimeConstant {
        kind,
        cutoff,
        value: k.value(),
        tail_bound: 2.0 * (pf.ln() + 1.0) / pf,
    })
}

/// Euler–Mascheroni constant by Euler–Maclaurin at `n = 100`:
/// `gamma = H_n - ln n - 1/(2n) + 1/(12 n^2) - 1/(120 n^4) + 1/(252 n^6)`.
/// The first omitted term is ~`1/(240 n^8) = 1e-18`, below one ulp.
pub fn euler_gamma() -> f64 {
    const N: u64 = 100;
    let mut h = KahanSum::new();
    for k in (1..=N).rev() {
        h.add(1.0 / k as f64);
    }
    let n = N as f64;
    let n2 = n * n;
    h.value() - n.ln() - 1.0 / (2.0 * n) + 1.0 / (12.0 * n2) - 1.0 / (120.0 * n2 * n2)
        + 1.0 / (252.0 * n2 * n2 * n2)
}
