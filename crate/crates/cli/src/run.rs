//! Command dispatch: run the configured experiment, assemble the envelope,
//! and write the requested artifacts.

use std::collections::BTreeMap;
use std::time::Instant;

use res_scope_core::{
    build_spec, charsum_verify, closed_form_constants, distribution_counts, extreme_scan_with_rows,
    main_term, ratio_experiment, ResonatorVariant, Result,
};
use serde_json::{json, Value};

use crate::config::{CommandKind, RunConfig};
use crate::emit;

/// Everything a finished run wants to tell the user.
pub struct RunOutput {
    pub envelope: Value,
    /// One-line human summary for stdout.
    pub summary: String,
}

/// Execute the run and write any `--out-json` / `--out-csv` / `--plot`
/// artifacts.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let (parameters, results, bounds, summary) = dispatch(config)?;
    let envelope = emit::envelope(
        config,
        parameters,
        results,
        bounds,
        started.elapsed().as_millis(),
    );
    if let Some(path) = &config.out_json {
        emit::write_json(path, &envelope)?;
    }
    if config.plot {
        if let Some(csv) = &config.out_csv {
            emit::write_plot_script(csv, config.command.name())?;
        }
    }
    Ok(RunOutput { envelope, summary })
}

type Dispatched = (BTreeMap<&'static str, Value>, Value, Value, String);

fn dispatch(config: &RunConfig) -> Result<Dispatched> {
    match config.command {
        CommandKind::Scan => run_scan(config),
        CommandKind::Ratio => run_ratio(config),
        CommandKind::Dist => run_dist(config),
        CommandKind::Charsum => run_charsum(config),
        CommandKind::Constants => run_constants(config),
        CommandKind::NearOne => run_near_one(config),
        CommandKind::Sigma => run_sigma(config),
    }
}

fn range_parameters(config: &RunConfig) -> BTreeMap<&'static str, Value> {
    BTreeMap::from([
        ("lo", json!(config.lo)),
        ("hi", json!(config.hi)),
        ("sigma", json!(config.sigma)),
        ("Y", json!(config.y)),
        ("Y_audit", json!(config.y_audit)),
    ])
}

fn truncation_bounds(config: &RunConfig) -> Value {
    json!({
        "truncation_y": config.y,
        "truncation_y_audit": config.y_audit,
    })
}

fn run_scan(config: &RunConfig) -> Result<Dispatched> {
    let policy = config.policy()?;
    // The CSV's resonator column uses the Unit spec at the range's scale
    // N = lo; below the minimum scale the column stays empty.
    let spec = if config.out_csv.is_some() && config.lo >= 16 {
        Some(build_spec(
            ResonatorVariant::Unit {
                delta: config.delta,
            },
            config.lo,
        )?)
    } else {
        None
    };
    let (report, rows) = extreme_scan_with_rows(
        config.lo,
        config.hi,
        policy,
        config.top,
        spec.as_ref(),
        config.workers,
    )?;
    if let Some(path) = &config.out_csv {
        emit::write_scan_csv(path, &rows)?;
    }
    let mut parameters = range_parameters(config);
    parameters.insert("top", json!(config.top));
    if spec.is_some() {
        parameters.insert("delta", json!(config.delta));
    }
    let summary = format!(
        "scan ({}, {}]: {} discriminants, max V = {} at d = {}",
        config.lo,
        config.hi,
        report.discriminant_count,
        emit::fmt12(report.max_value),
        report.max_d
    );
    Ok((
        parameters,
        json!(report),
        truncation_bounds(config),
        summary,
    ))
}

fn run_ratio(config: &RunConfig) -> Result<Dispatched> {
    let policy = config.policy()?;
    let spec = build_spec(
        ResonatorVariant::Unit {
            delta: config.delta,
        },
        config.lo,
    )?;
    let report = ratio_experiment(config.lo, config.hi, &spec, policy, config.workers)?;
    let mut parameters = range_parameters(config);
    parameters.insert("delta", json!(config.delta));
    let summary = format!(
        "ratio ({}, {}]: S2/S1 = {} vs main term {}",
        config.lo,
        config.hi,
        emit::fmt12(report.ratio),
        emit::fmt12(report.main_term)
    );
    Ok((
        parameters,
        json!(report),
        truncation_bounds(config),
        summary,
    ))
}

fn run_dist(config: &RunConfig) -> Result<Dispatched> {
    let policy = config.policy()?;
    let report = distribution_counts(
        config.lo,
        config.hi,
        policy,
        config.delta,
        &config.xs,
        config.workers,
    )?;
    if let Some(path) = &config.out_csv {
        emit::write_dist_csv(path, &report)?;
    }
    let mut parameters = range_parameters(config);
    parameters.insert("delta", json!(config.delta));
    parameters.insert("xs", json!(config.xs));
    let bounds = json!({
        "truncation_y": config.y,
        "truncation_y_audit": config.y_audit,
        "trunc_err": report.trunc_err,
    });
    let counts: Vec<u64> = report.thresholds.iter().map(|t| t.count).collect();
    let summary = format!(
        "dist ({}, {}] at N = {}: counts {:?} of {}",
        config.lo, config.hi, report.n, counts, report.discriminant_count
    );
    Ok((parameters, json!(report), bounds, summary))
}

fn run_charsum(config: &RunConfig) -> Result<Dispatched> {
    let reports = config
        .ns
        .iter()
        .map(|&n| charsum_verify(n, config.hi, config.workers))
        .collect::<Result<Vec<_>>>()?;
    if let Some(path) = &config.out_csv {
        emit::write_charsum_csv(path, &reports)?;
    }
    let parameters = BTreeMap::from([("hi", json!(config.hi)), ("n", json!(config.ns))]);
    let worst = reports
        .iter()
        .map(|r| r.normalized_error)
        .fold(0.0f64, f64::max);
    let all_within = reports.iter().all(|r| r.within_bound);
    let bounds = json!({
        "max_normalized_error": worst,
        "all_within_bound": all_within,
    });
    let summary = format!(
        "charsum |d| <= {}: {} argument(s), worst normalized error {}",
        config.hi,
        reports.len(),
        emit::fmt12(worst)
    );
    Ok((parameters, json!(reports), bounds, summary))
}

fn run_constants(config: &RunConfig) -> Result<Dispatched> {
    let constants = closed_form_constants(config.delta, config.prime_cutoff)?;
    let parameters = BTreeMap::from([
        ("delta", json!(config.delta)),
        ("prime_cutoff", json!(config.prime_cutoff)),
    ]);
    let bounds = json!({ "prime_tail_bound": constants.base.tail_bound });
    let summary = format!(
        "constants at delta = {}: C_paper = {}, C_alt = {}",
        config.delta,
        emit::fmt12(constants.c_paper),
        emit::fmt12(constants.c_alt)
    );
    Ok((parameters, json!(constants), bounds, summary))
}

fn run_near_one(config: &RunConfig) -> Result<Dispatched> {
    let spec = build_spec(
        ResonatorVariant::NearOne {
            a: config.a,
            kappa: config.kappa,
        },
        config.hi,
    )?;
    let main = main_term(&spec);
    let lln = (config.hi as f64).ln().ln();
    // The candidate limit of main/ln ln N suggested by replacing the prime
    // sum with its smooth model.
    let reference = (config.a.exp() - 1.0) / config.a;
    let results = json!({
        "n": config.hi,
        "A": config.a,
        "kappa": config.kappa,
        "sigma_eff": spec.sigma_eff(),
        "x": spec.x(),
        "main_term": main,
        "main_over_loglog": main / lln,
        "reference_ratio": reference,
    });
    let parameters = BTreeMap::from([
        ("hi", json!(config.hi)),
        ("A", json!(config.a)),
        ("kappa", json!(config.kappa)),
    ]);
    let summary = format!(
        "near-one at N = {}: main/ln ln N = {} vs (e^A - 1)/A = {}",
        config.hi,
        emit::fmt12(main / lln),
        emit::fmt12(reference)
    );
    Ok((parameters, results, json!({}), summary))
}

fn run_sigma(config: &RunConfig) -> Result<Dispatched> {
    let spec = build_spec(
        ResonatorVariant::FixedSigma {
            sigma: config.sigma,
            eta: config.eta,
        },
        config.hi,
    )?;
    let main = main_term(&spec);
    let x = spec.x();
    let asymptote = config.sigma / (1.0 - config.sigma) * x.powf(1.0 - config.sigma);
    let results = json!({
        "n": config.hi,
        "sigma": config.sigma,
        "eta": config.eta,
        "x": x,
        "main_term": main,
        "asymptote": asymptote,
        "ratio": main / asymptote,
    });
    let parameters = BTreeMap::from([
        ("hi", json!(config.hi)),
        ("sigma", json!(config.sigma)),
        ("eta", json!(config.eta)),
    ]);
    let summary = format!(
        "sigma = {} at X = {}: main/asymptote = {}",
        config.sigma,
        emit::fmt12(x),
        emit::fmt12(main / asymptote)
    );
    Ok((parameters, results, json!({}), summary))
}
