//! Truncated logarithmic derivatives of quadratic L-functions.
//!
//! The central quantity is the prime-power sum
//!
//! ```text
//! V(d; sigma, Y) = sum_{n <= Y} Lambda(n) chi_d(n) / n^sigma
//! ```
//!
//! which is `-L'/L(sigma, chi_d)` truncated at `Y`. Truncation error is
//! never estimated analytically here; instead every policy carries a second
//! cutoff `Y_audit >= Y` and the *audit* is the measured difference between
//! the two partial sums.

use crate::characters::FundamentalDiscriminant;
use crate::error::{Error, MemoryBudget, Result};
use crate::sum::KahanSum;

/// One row of the von Mangoldt support table: `n = base^exponent <= limit`,
/// `lambda = ln(base)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PrimePowerEntry {
    pub n: u64,
    pub base: u64,
    pub exponent: u32,
    pub lambda: f64,
}

/// All prime powers up to a limit, ascending by `n`.
#[derive(Debug, Clone)]
pub struct PrimePowerTable {
    limit: u64,
    entries: Vec<PrimePowerEntry>,
}

impl PrimePowerTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn entries(&self) -> &[PrimePowerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Build the prime-power table for `n <= limit` (the support of the von
/// Mangoldt function), sorted ascending by `n`.
pub fn prime_power_table(limit: u64) -> Result<PrimePowerTable> {
    prime_power_table_with_budget(limit, &MemoryBudget::from_env())
}

pub fn prime_power_table_with_budget(limit: u64, budget: &MemoryBudget) -> Result<PrimePowerTable> {
    let primes = crate::primes::sieve_primes_with_budget(limit, budget)?;
    let mut entries = Vec::with_capacity(primes.len() + 64);
    for &p in &primes {
        let lambda = (p as f64).ln();
        let mut n = p;
        let mut exponent = 1u32;
        loop {
            entries.push(PrimePowerEntry {
                n,
                base: p,
                exponent,
                lambda,
            });
            match n.checked_mul(p) {
                Some(next) if next <= limit => {
                    n = next;
                    exponent += 1;
                }
                _ => break,
            }
        }
    }
    entries.sort_unstable_by_key(|e| e.n);
    Ok(PrimePowerTable { limit, entries })
}

/// Evaluation policy: exponent `sigma` in `(1/2, 1]`, main cutoff `y`, and
/// audit cutoff `y_audit >= y`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TruncationPolicy {
    sigma: f64,
    y: u64,
    y_audit: u64,
}

impl TruncationPolicy {
    pub fn new(sigma: f64, y: u64, y_audit: u64) -> Result<Self> {
        if !(sigma > 0.5 && sigma <= 1.0) {
            return Err(Error::domain(format!(
                "sigma must lie in (1/2, 1], got {sigma}"
            )));
        }
        if y < 1 {
            return Err(Error::domain("truncation cutoff Y must be at least 1"));
        }
        if y_audit < y {
            return Err(Error::domain(format!(
                "audit cutoff must be >= Y, got Y = {y}, Y_audit = {y_audit}"
            )));
        }
        Ok(TruncationPolicy { sigma, y, y_audit })
    }

    /// Default policy for a sweep up to `|d| ~ n`:
    /// `Y = max(10^4, ceil(ln(n)^3))`, `Y_audit = 2 Y`.
    pub fn default_for(n: u64, sigma: f64) -> Result<Self> {
        let ln_n = (n.max(16) as f64).ln();
        let y = (ln_n.powi(3)).ceil().max(10_000.0) as u64;
        TruncationPolicy::new(sigma, y, 2 * y)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn y(&self) -> u64 {
        self.y
    }

    pub fn y_audit(&self) -> u64 {
        self.y_audit
    }
}

/// `n^(-sigma)` with the exact reciprocal at `sigma = 1`.
fn power_weight(n: u64, sigma: f64) -> f64 {
    if sigma == 1.0 {
        1.0 / n as f64
    } else {
        (n as f64).powf(-sigma)
    }
}

#[derive(Debug, Clone, Copy)]
struct PowerTerm {
    /// `Lambda(n) / n^sigma`, sign applied at evaluation time.
    weight: f64,
    /// Whether `chi(base^k) = chi(base)` (odd k) rather than `chi(base)^2`.
    odd_exponent: bool,
    /// Whether `n <= y` (contributes to the main sum, not just the audit).
    within_y: bool,
}

/// Reusable evaluator of `V(d)` at fixed policy.
///
/// The prime-power table is grouped by base prime so each discriminant costs
/// exactly one Kronecker symbol per prime `<= Y_audit`; higher powers reuse
/// the sign. Accumulation is Kahan-compensated over bases in ascending
/// order, so results are deterministic.
#[derive(Debug, Clone)]
pub struct LogDerivEvaluator {
    policy: TruncationPolicy,
    bases: Vec<u64>,
    spans: Vec<(u32, u32)>,
    powers: Vec<PowerTerm>,
    /// Number of leading bases that are `<= y`.
    main_bases: usize,
    entry_count: usize,
}

impl LogDerivEvaluator {
    pub fn new(policy: TruncationPolicy) -> Result<Self> {
        Self::with_budget(policy, &MemoryBudget::from_env())
    }

    pub fn with_budget(policy: TruncationPolicy, budget: &MemoryBudget) -> Result<Self> {
        let table = prime_power_table_with_budget(policy.y_audit(), budget)?;
        let sigma = policy.sigma();
        let mut bases = Vec::new();
        let mut spans = Vec::new();
        let mut powers: Vec<PowerTerm> = Vec::with_capacity(table.len());

        // Group by base prime: entries sorted by base, then exponent.
        let mut by_base: Vec<&PrimePowerEntry> = table.entries().iter().collect();
        by_base.sort_unstable_by_key(|e| (e.base, e.exponent));
        let mut i = 0;
        while i < by_base.len() {
            let base = by_base[i].base;
            let start = powers.len() as u32;
            while i < by_base.len() && by_base[i].base == base {
                let e = by_base[i];
                powers.push(PowerTerm {
                    weight: e.lambda * power_weight(e.n, sigma),
                    odd_exponent: e.exponent % 2 == 1,
                    within_y: e.n <= policy.y(),
                });
                i += 1;
            }
            bases.push(base);
            spans.push((start, powers.len() as u32));
        }
        let main_bases = bases.partition_point(|&b| b <= policy.y());
        Ok(LogDerivEvaluator {
            policy,
            bases,
            spans,
            powers,
            main_bases,
            entry_count: table.len(),
        })
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    /// Number of prime-power terms in scope at the audit cutoff.
    pub fn term_count(&self) -> usize {
        self.entry_count
    }

    /// `V(d)` at the main cutoff only (skips audit-only primes).
    pub fn eval(&self, d: FundamentalDiscriminant) -> f64 {
        let mut acc = KahanSum::new();
        for (i, &base) in self.bases[..self.main_bases].iter().enumerate() {
            let s = d.chi(base);
            if s == 0 {
                continue;
            }
            let (a, b) = self.spans[i];
            for t in &self.powers[a as usize..b as usize] {
                if !t.within_y {
                    continue;
                }
                let signed = if t.odd_exponent && s < 0 {
                    -t.weight
                } else {
                    t.weight
                };
                acc.add(signed);
            }
        }
        acc.value()
    }

    /// `(V(d) at Y, V(d) at Y_audit)` in one pass.
    pub fn eval_pair(&self, d: FundamentalDiscriminant) -> (f64, f64) {
        let mut main = KahanSum::new();
        let mut audit = KahanSum::new();
        for (i, &base) in self.bases.iter().enumerate() {
            let s = d.chi(base);
            if s == 0 {
                continue;
            }
            let (a, b) = self.spans[i];
            for t in &self.powers[a as usize..b as usize] {
                let signed = if t.odd_exponent && s < 0 {
                    -t.weight
                } else {
                    t.weight
                };
                audit.add(signed);
                if t.within_y {
                    main.add(signed);
                }
            }
        }
        (main.value(), audit.value())
    }
}

/// `V(d; sigma, Y)`: the truncated `-L'/L` sum at the policy's main cutoff.
pub fn neg_log_deriv_truncated(
    d: FundamentalDiscriminant,
    policy: &TruncationPolicy,
) -> Result<f64> {
    Ok(LogDerivEvaluator::new(*policy)?.eval(d))
}

/// Measured truncation error `|V(d; Y_audit) - V(d; Y)|`.
pub fn truncation_audit(d: FundamentalDiscriminant, policy: &TruncationPolicy) -> Result<f64> {
    let (main, audit) = LogDerivEvaluator::new(*policy)?.eval_pair(d);
    Ok((audit - main).abs())
}

/// Soft sanity bound `|V| <= 5 ln(|d| + 2)`; a violation is a finding worth
/// reporting, not a hard failure (the bound is heuristic).
pub fn exceeds_sanity_bound(d: FundamentalDiscriminant, value: f64) -> bool {
    value.abs() > 5.0 * ((d.abs() + 2) as f64).ln()
}
