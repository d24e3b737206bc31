//! Deterministic block-parallel sweeps over fundamental discriminants.
//!
//! Every experiment walks the discriminants `lo < |d| <= hi` in canonical
//! order (|d| ascending, positive first), sharded into blocks of `2^16`
//! consecutive `|d|`. Blocks are processed independently (possibly in
//! parallel) and combined sequentially in block order with fixed-order
//! Kahan accumulation, so every reported number is bit-identical for any
//! worker count.
//!
//! Weighted sums `S1 = sum R_d^2` and `S2 = sum V(d) R_d^2` are combined in
//! log-scaled form: each block records its own maximum of `2 ln R_d` and
//! scaled partial sums, and the final pass rescales by the global maximum —
//! no intermediate `exp` can overflow even when the resonator weights span
//! hundreds of orders of magnitude.

use rayon::prelude::*;

use crate::characters::fundamental_in_block;
use crate::error::{Error, MemoryBudget, Result};
use crate::lfun::{exceeds_sanity_bound, LogDerivEvaluator, TruncationPolicy};
use crate::resonator::{main_term, resonator_value, threshold_j, ResonatorSpec, ResonatorVariant};
use crate::sum::KahanSum;

/// |d|-width of a parallel work block.
const BLOCK_BITS: u32 = 16;

/// Fixed-width histogram of truncated `-L'/L` values: 120 bins of width
/// 0.05 covering `[-3, 3)`, with explicit under/overflow counters.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub bins: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    fn new() -> Self {
        Histogram {
            lo: -3.0,
            width: 0.05,
            bins: vec![0; 120],
            underflow: 0,
            overflow: 0,
        }
    }

    fn record(&mut self, v: f64) {
        let t = (v - self.lo) / self.width;
        if t < 0.0 {
            self.underflow += 1;
        } else if (t as usize) < self.bins.len() {
            self.bins[t as usize] += 1;
        } else {
            self.overflow += 1;
        }
    }

    fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn total(&self) -> u64 {
        self.underflow + self.overflow + self.bins.iter().sum::<u64>()
    }
}

/// One scan record: a discriminant, its truncated `-L'/L` value, and (when
/// a resonator is attached) `ln R_d`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScanRow {
    pub d: i64,
    pub value: f64,
    pub log_resonator: Option<f64>,
}

/// Entry of the extreme-value leaderboard.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TopEntry {
    pub d: i64,
    pub value: f64,
}

/// Leaderboard order: value descending, then `|d|` ascending, then positive
/// before negative.
fn top_order(a: &TopEntry, b: &TopEntry) -> std::cmp::Ordering {
    b.value
        .total_cmp(&a.value)
        .then_with(|| a.d.unsigned_abs().cmp(&b.d.unsigned_abs()))
        .then_with(|| b.d.signum().cmp(&a.d.signum()))
}

/// Resonator parameters echoed into reports.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SpecSummary {
    #[serde(flatten)]
    pub variant: ResonatorVariant,
    pub n: u64,
    pub x: f64,
    pub sigma_eff: f64,
}

impl SpecSummary {
    fn of(spec: &ResonatorSpec) -> Self {
        SpecSummary {
            variant: *spec.variant(),
            n: spec.n(),
            x: spec.x(),
            sigma_eff: spec.sigma_eff(),
        }
    }
}

/// Resonance-ratio experiment: `S2/S1` against the predicted main term.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RatioReport {
    pub lo: u64,
    pub hi: u64,
    /// Reporting scale for the range (the convention is `N = lo`; the
    /// sweep covers `(N, hi]`).
    pub n: u64,
    pub spec: SpecSummary,
    pub policy: TruncationPolicy,
    /// `sum R_d^2`, rescaled back from log space.
    pub s1: f64,
    /// `sum V(d) R_d^2`, rescaled back from log space.
    pub s2: f64,
    /// `S2/S1` (computed on the scaled sums, so it is exact even when the
    /// rescaled `s1`/`s2` saturate).
    pub ratio: f64,
    /// The resonator's first-moment prediction for the ratio.
    pub main_term: f64,
    pub discriminant_count: u64,
    /// Unweighted mean of `V(d)` over the same range, for the resonance
    /// direction check.
    pub unweighted_mean: f64,
    pub value_min: f64,
    pub value_max: f64,
    /// Discriminants whose `|V|` exceeded the soft sanity bound.
    pub sanity_violations: u64,
}

/// Extreme-value scan: leaderboard, maximum, and value histogram.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanReport {
    pub lo: u64,
    pub hi: u64,
    /// Reporting scale (`N = lo`).
    pub n: u64,
    pub policy: TruncationPolicy,
    pub top: Vec<TopEntry>,
    pub max_d: i64,
    pub max_value: f64,
    pub histogram: Histogram,
    pub discriminant_count: u64,
    pub sanity_violations: u64,
}

/// One threshold row of the distribution experiment.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ThresholdCount {
    pub x: f64,
    pub j: f64,
    pub j_tilde: f64,
    /// Discriminants with `V(d) >= j_tilde`.
    pub count: u64,
    /// `ln(count) / ln N` (absent when the count is zero).
    pub measured_exponent: Option<f64>,
    /// `(1 - measured_exponent) e^x`, the constant the tail model
    /// `count ~ N^(1 - C' e^-x)` would need.
    pub fitted_c_prime: Option<f64>,
}

/// Threshold-exceedance counts across a shift ladder.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DistributionReport {
    pub lo: u64,
    pub hi: u64,
    /// Scale used in thresholds and exponents; the convention for a
    /// distribution sweep over `(lo, hi]` is `N = hi/2`.
    pub n: u64,
    pub n_convention: &'static str,
    pub delta: f64,
    pub policy: TruncationPolicy,
    /// Largest observed `|V(Y_audit) - V(Y)|` over the range; folded into
    /// every threshold.
    pub trunc_err: f64,
    pub thresholds: Vec<ThresholdCount>,
    pub discriminant_count: u64,
    pub value_min: f64,
    pub value_max: f64,
}

/// Character-sum sanity check for one modulus-like argument `n`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CharSumReport {
    pub n: u64,
    /// Squarefree part: `n = n0 * n1^2`.
    pub n0: u64,
    pub n1: u64,
    /// Sweep bound: `d` ranges over `0 < |d| <= N`.
    #[serde(rename = "N")]
    pub n_limit: u64,
    pub is_square: bool,
    /// `sum chi_d(n)` (an exact integer, rendered as a real).
    pub empirical: f64,
    /// `N/zeta(2) * prod_{p | n} p/(p+1)` when `n` is a perfect square,
    /// else 0.
    pub main: f64,
    /// `exp((ln n0)^0.9)`.
    pub f_n0: f64,
    /// `sum_{m | n1, m squarefree} 1/m^0.6`.
    pub g_n1: f64,
    /// `|empirical - main| / N^0.6`.
    pub normalized_error: f64,
    /// Slack exponent in the reported bound.
    pub epsilon: f64,
    /// Whether `|empirical - main| <= f_n0 g_n1 N^(0.6 + epsilon)`.
    pub within_bound: bool,
    pub discriminant_count: u64,
}

fn run_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::domain("worker count must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if lo >= hi {
        return Err(Error::EmptyRange { lo, hi });
    }
    if hi > i64::MAX as u64 {
        return Err(Error::domain(format!("hi = {hi} exceeds the i64 range")));
    }
    Ok(())
}

struct SweepOpts<'a> {
    evaluator: &'a LogDerivEvaluator,
    spec: Option<&'a ResonatorSpec>,
    want_audit: bool,
    want_values: bool,
    want_rows: bool,
    top_k: usize,
}

struct BlockOut {
    count: u64,
    /// Block maximum of `2 ln R_d` (negative infinity when empty).
    m_max: f64,
    /// `sum exp(2 ln R_d - m_max)` over the block.
    w1: f64,
    /// `sum V(d) exp(2 ln R_d - m_max)` over the block.
    w2: f64,
    vsum: f64,
    vmin: f64,
    vmax: f64,
    audit_max: f64,
    sanity: u64,
    top: Vec<TopEntry>,
    values: Vec<f64>,
    rows: Vec<ScanRow>,
    hist: Histogram,
}

fn process_block(blo: u64, bhi: u64, sqrt_primes: &[u64], opts: &SweepOpts) -> BlockOut {
    let ds = fundamental_in_block(blo, bhi, sqrt_primes);
    let mut out = BlockOut {
        count: ds.len() as u64,
        m_max: f64::NEG_INFINITY,
        w1: 0.0,
        w2: 0.0,
        vsum: 0.0,
        vmin: f64::INFINITY,
        vmax: f64::NEG_INFINITY,
        audit_max: 0.0,
        sanity: 0,
        top: Vec::new(),
        values: Vec::with_capacity(if opts.want_values { ds.len() } else { 0 }),
        rows: Vec::with_capacity(if opts.want_rows { ds.len() } else { 0 }),
        hist: Histogram::new(),
    };
    // First pass: evaluate everything, remembering (V, 2 ln R) so the
    // weighted sums can be accumulated against the block maximum.
    let mut pairs: Vec<(f64, f64)> =
        Vec::with_capacity(if opts.spec.is_some() { ds.len() } else { 0 });
    let mut vsum = KahanSum::new();
    for &f in &ds {
        let v = if opts.want_audit {
            let (v, v_audit) = opts.evaluator.eval_pair(f);
            out.audit_max = out.audit_max.max((v_audit - v).abs());
            v
        } else {
            opts.evaluator.eval(f)
        };
        vsum.add(v);
        out.vmin = out.vmin.min(v);
        out.vmax = out.vmax.max(v);
        out.hist.record(v);
        if exceeds_sanity_bound(f, v) {
            out.sanity += 1;
        }
        if opts.want_values {
            out.values.push(v);
        }
        if let Some(spec) = opts.spec {
            let two_ln_r = 2.0 * resonator_value(spec, f);
            out.m_max = out.m_max.max(two_ln_r);
            pairs.push((v, two_ln_r));
            if opts.want_rows {
                out.rows.push(ScanRow {
                    d: f.get(),
                    value: v,
                    log_resonator: Some(two_ln_r / 2.0),
                });
            }
        } else if opts.want_rows {
            out.rows.push(ScanRow {
                d: f.get(),
                value: v,
                log_resonator: None,
            });
        }
        if opts.top_k > 0 {
            out.top.push(TopEntry {
                d: f.get(),
                value: v,
            });
        }
    }
    out.vsum = vsum.value();
    if opts.spec.is_some() && !pairs.is_empty() {
        let (mut w1, mut w2) = (KahanSum::new(), KahanSum::new());
        for &(v, two_ln_r) in &pairs {
            let w = (two_ln_r - out.m_max).exp();
            w1.add(w);
            w2.add(v * w);
        }
        out.w1 = w1.value();
        out.w2 = w2.value();
    }
    if opts.top_k > 0 {
        out.top.sort_unstable_by(top_order);
        out.top.truncate(opts.top_k);
    }
    out
}

struct SweepResult {
    count: u64,
    s1_scaled: f64,
    s2_scaled: f64,
    /// Global maximum of `2 ln R_d` (the log of the rescaling factor).
    m: f64,
    vsum: f64,
    vmin: f64,
    vmax: f64,
    audit_max: f64,
    sanity: u64,
    top: Vec<TopEntry>,
    values: Vec<f64>,
    rows: Vec<ScanRow>,
    hist: Histogram,
}

fn sweep(lo: u64, hi: u64, workers: usize, opts: &SweepOpts) -> Result<SweepResult> {
    check_range(lo, hi)?;
    let budget = MemoryBudget::from_env();
    let est_count = (hi - lo).saturating_mul(10) / 8 + 64;
    let mut per_entry = 0u64;
    if opts.want_values {
        per_entry += 8;
    }
    if opts.want_rows {
        per_entry += 32;
    }
    if opts.spec.is_some() {
        per_entry += 16; // transient (V, 2 ln R) pairs, one block at a time
    }
    budget.check("experiment sweep", est_count.saturating_mul(per_entry + 1))?;

    let sqrt_primes =
        crate::primes::sieve_primes_with_budget((hi as f64).sqrt() as u64 + 2, &budget)?;

    let lo_block = lo >> BLOCK_BITS;
    let hi_block = (hi - 1) >> BLOCK_BITS;
    let blocks: Vec<u64> = (lo_block..=hi_block).collect();
    let outs: Vec<BlockOut> = run_pool(workers, || {
        blocks
            .par_iter()
            .map(|&b| {
                let blo = lo.max(b << BLOCK_BITS);
                let bhi = hi.min((b + 1) << BLOCK_BITS);
                process_block(blo, bhi, &sqrt_primes, opts)
            })
            .collect()
    })?;

    // Sequential combine in block order: deterministic for any worker count.
    let mut res = SweepResult {
        count: 0,
        s1_scaled: 0.0,
        s2_scaled: 0.0,
        m: f64::NEG_INFINITY,
        vsum: 0.0,
        vmin: f64::INFINITY,
        vmax: f64::NEG_INFINITY,
        audit_max: 0.0,
        sanity: 0,
        top: Vec::new(),
        values: Vec::new(),
        rows: Vec::new(),
        hist: Histogram::new(),
    };
    for out in &outs {
        res.m = res.m.max(out.m_max);
    }
    let (mut s1, mut s2, mut vsum) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    for mut out in outs {
        res.count += out.count;
        vsum.add(out.vsum);
        res.vmin = res.vmin.min(out.vmin);
        res.vmax = res.vmax.max(out.vmax);
        res.audit_max = res.audit_max.max(out.audit_max);
        res.sanity += out.sanity;
        if out.count > 0 && opts.spec.is_some() {
            let rescale = (out.m_max - res.m).exp();
            s1.add(rescale * out.w1);
            s2.add(rescale * out.w2);
        }
        res.top.append(&mut out.top);
        res.values.append(&mut out.values);
        res.rows.append(&mut out.rows);
        res.hist.merge(&out.hist);
    }
    if res.count == 0 {
        return Err(Error::EmptyRange { lo, hi });
    }
    res.s1_scaled = s1.value();
    res.s2_scaled = s2.value();
    res.vsum = vsum.value();
    res.top.sort_unstable_by(top_order);
    res.top.truncate(opts.top_k);
    Ok(res)
}

/// Weighted-average experiment over `lo < |d| <= hi`:
/// `ratio = sum V(d) R_d^2 / sum R_d^2`, reported against the resonator's
/// main-term prediction.
pub fn ratio_experiment(
    lo: u64,
    hi: u64,
    spec: &ResonatorSpec,
    policy: TruncationPolicy,
    workers: usize,
) -> Result<RatioReport> {
    let evaluator = LogDerivEvaluator::new(policy)?;
    let opts = SweepOpts {
        evaluator: &evaluator,
        spec: Some(spec),
        want_audit: false,
        want_values: false,
        want_rows: false,
        top_k: 0,
    };
    let res = sweep(lo, hi, workers, &opts)?;
    let scale = res.m.exp();
    Ok(RatioReport {
        lo,
        hi,
        n: lo,
        spec: SpecSummary::of(spec),
        policy,
        s1: res.s1_scaled * scale,
        s2: res.s2_scaled * scale,
        ratio: res.s2_scaled / res.s1_scaled,
        main_term: main_term(spec),
        discriminant_count: res.count,
        unweighted_mean: res.vsum / res.count as f64,
        value_min: res.vmin,
        value_max: res.vmax,
        sanity_violations: res.sanity,
    })
}

/// Extreme-value scan over `lo < |d| <= hi`: the `k` largest truncated
/// values with the value histogram.
pub fn extreme_scan(
    lo: u64,
    hi: u64,
    policy: TruncationPolicy,
    k: usize,
    workers: usize,
) -> Result<ScanReport> {
    let (report, _) = scan_impl(lo, hi, policy, k, None, false, workers)?;
    Ok(report)
}

/// [`extreme_scan`] that also returns one [`ScanRow`] per discriminant (for
/// CSV export); when a resonator spec is supplied its `ln R_d` is attached
/// to each row.
pub fn extreme_scan_with_rows(
    lo: u64,
    hi: u64,
    policy: TruncationPolicy,
    k: usize,
    spec: Option<&ResonatorSpec>,
    workers: usize,
) -> Result<(ScanReport, Vec<ScanRow>)> {
    scan_impl(lo, hi, policy, k, spec, true, workers)
}

fn scan_impl(
    lo: u64,
    hi: u64,
    policy: TruncationPolicy,
    k: usize,
    spec: Option<&ResonatorSpec>,
    want_rows: bool,
    workers: usize,
) -> Result<(ScanReport, Vec<ScanRow>)> {
    if k == 0 {
        return Err(Error::domain("scan needs k >= 1 leaderboard slots"));
    }
    let evaluator = LogDerivEvaluator::new(policy)?;
    let opts = SweepOpts {
        evaluator: &evaluator,
        spec,
        want_audit: false,
        want_values: false,
        want_rows,
        top_k: k,
    };
    let res = sweep(lo, hi, workers, &opts)?;
    let best = res.top[0];
    Ok((
        ScanReport {
            lo,
            hi,
            n: lo,
            policy,
            max_d: best.d,
            max_value: best.value,
            top: res.top,
            histogram: res.hist,
            discriminant_count: res.count,
            sanity_violations: res.sanity,
        },
        res.rows,
    ))
}

/// Count discriminants whose value clears each threshold of a shift ladder.
///
/// The scale convention for a sweep over `(lo, hi]` is `N = hi/2` (the
/// range is typically `(N, 2N]`); thresholds fold in the measured
/// truncation error, the largest audit gap observed anywhere in the range.
pub fn distribution_counts(
    lo: u64,
    hi: u64,
    policy: TruncationPolicy,
    delta: f64,
    xs: &[f64],
    workers: usize,
) -> Result<DistributionReport> {
    check_range(lo, hi)?;
    let n = hi / 2;
    if n < 16 {
        return Err(Error::domain(format!(
            "distribution scale N = hi/2 must be at least 16, got hi = {hi}"
        )));
    }
    if xs.is_empty() {
        return Err(Error::domain("distribution needs at least one shift x"));
    }
    for &x in xs {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::domain(format!("shift x must be >= 0, got {x}")));
        }
    }
    let evaluator = LogDerivEvaluator::new(policy)?;
    let opts = SweepOpts {
        evaluator: &evaluator,
        spec: None,
        want_audit: true,
        want_values: true,
        want_rows: false,
        top_k: 0,
    };
    let res = sweep(lo, hi, workers, &opts)?;
    let ln_n = (n as f64).ln();
    let thresholds = xs
        .iter()
        .map(|&x| {
            let t = threshold_j(n, x, delta, res.audit_max)?;
            let count = count_at_least(&res.values, t.j_tilde);
            let measured_exponent = if count > 0 {
                Some((count as f64).ln() / ln_n)
            } else {
                None
            };
            Ok(ThresholdCount {
                x,
                j: t.j,
                j_tilde: t.j_tilde,
                count,
                measured_exponent,
                fitted_c_prime: measured_exponent.map(|ex| (1.0 - ex) * x.exp()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistributionReport {
        lo,
        hi,
        n,
        n_convention: "hi/2",
        delta,
        policy,
        trunc_err: res.audit_max,
        thresholds,
        discriminant_count: res.count,
        value_min: res.vmin,
        value_max: res.vmax,
    })
}

fn count_at_least(values: &[f64], threshold: f64) -> u64 {
    values.iter().filter(|&&v| v >= threshold).count() as u64
}

/// Split `n = n0 * n1^2` with `n0` squarefree, returning
/// `(n0, n1, distinct primes of n)`.
fn squarefree_split(n: u64) -> (u64, u64, Vec<u64>) {
    let (mut n0, mut n1) = (1u64, 1u64);
    let mut primes = Vec::new();
    let mut rest = n;
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            let mut e = 0u32;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            primes.push(p);
            if e % 2 == 1 {
                n0 *= p;
            }
            n1 *= p.pow(e / 2);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        primes.push(rest);
        n0 *= rest;
    }
    (n0, n1, primes)
}

/// Character-sum sanity check: the exact `sum_{0 < |d| <= N} chi_d(n)`
/// against the square/non-square main-term dichotomy.
pub fn charsum_verify(n: u64, n_limit: u64, workers: usize) -> Result<CharSumReport> {
    if n == 0 {
        return Err(Error::domain("character argument n must be >= 1"));
    }
    check_range(0, n_limit)?;
    let budget = MemoryBudget::from_env();
    let sqrt_primes =
        crate::primes::sieve_primes_with_budget((n_limit as f64).sqrt() as u64 + 2, &budget)?;
    let hi_block = (n_limit - 1) >> BLOCK_BITS;
    let blocks: Vec<u64> = (0..=hi_block).collect();
    // Per-block exact integer sums: order-independent, so no log-scale
    // machinery is needed for determinism here.
    let partials: Vec<(i64, u64)> = run_pool(workers, || {
        blocks
            .par_iter()
            .map(|&b| {
                let blo = b << BLOCK_BITS;
                let bhi = n_limit.min((b + 1) << BLOCK_BITS);
                let ds = fundamental_in_block(blo, bhi, &sqrt_primes);
                let sum: i64 = ds.iter().map(|f| i64::from(f.chi(n))).sum();
                (sum, ds.len() as u64)
            })
            .collect()
    })?;
    let empirical: i64 = partials.iter().map(|p| p.0).sum();
    let count: u64 = partials.iter().map(|p| p.1).sum();
    if count == 0 {
        return Err(Error::EmptyRange { lo: 0, hi: n_limit });
    }

    let (n0, n1, primes) = squarefree_split(n);
    let is_square = n0 == 1;
    let zeta2 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    let main = if is_square {
        let mut product = n_limit as f64 / zeta2;
        for &p in &primes {
            product *= p as f64 / (p as f64 + 1.0);
        }
        product
    } else {
        0.0
    };
    let f_n0 = (n0 as f64).ln().powf(0.9).exp();
    // Squarefree divisors of n1 are exactly the products of subsets of its
    // distinct primes.
    let n1_primes: Vec<u64> = primes.iter().copied().filter(|p| n1 % p == 0).collect();
    let mut g_n1 = 0.0;
    for mask in 0u32..(1 << n1_primes.len()) {
        let m: u64 = n1_primes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .product();
        g_n1 += (m as f64).powf(-0.6);
    }
    let epsilon = 0.1;
    let deviation = (empirical as f64 - main).abs();
    Ok(CharSumReport {
        n,
        n0,
        n1,
        n_limit,
        is_square,
        empirical: empirical as f64,
        main,
        f_n0,
        g_n1,
        normalized_error: deviation / (n_limit as f64).powf(0.6),
        epsilon,
        within_bound: deviation <= f_n0 * g_n1 * (n_limit as f64).powf(0.6 + epsilon),
        discriminant_count: count,
    })
}
