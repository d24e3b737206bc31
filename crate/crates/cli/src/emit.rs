//! Report emission: 12-significant-digit JSON envelopes, CSV files, and
//! gnuplot scripts.
//!
//! Every real number in an emitted artifact is rounded to 12 significant
//! digits before serialization, so byte-level golden comparisons survive
//! platform-dependent last-ulp noise while keeping far more precision than
//! any documented tolerance.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use res_scope_core::experiments::{CharSumReport, DistributionReport, ScanRow};
use res_scope_core::{Error, Result};
use serde_json::{json, Value};

use crate::config::RunConfig;

/// Round to 12 significant decimal digits (the nearest f64 thereto).
pub fn round12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    format!("{x:.11e}").parse().expect("rounded float reparses")
}

/// Shortest string that reads back as the 12-significant-digit rounding of
/// `x`. Rust's shortest-round-trip display never needs more mantissa
/// digits than the 12 the rounded value was built from; magnitudes outside
/// a readable window switch to scientific notation (plain `Display` would
/// happily print 300 zeros).
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    let a = r.abs();
    if r != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        r.to_string()
    }
}

/// Recursively round every fractional number in a JSON tree.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if !n.is_u64() && !n.is_i64() {
                if let Some(x) = n.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round12(x)) {
                        *n = rounded;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Wrap a command's results in the standard envelope. Everything except
/// the `runtime` block is a pure function of the run configuration.
pub fn envelope(
    config: &RunConfig,
    parameters: BTreeMap<&'static str, Value>,
    results: Value,
    bounds: Value,
    wall_time_ms: u128,
) -> Value {
    let mut results = results;
    round_json(&mut results);
    let mut bounds = bounds;
    round_json(&mut bounds);
    let mut parameters = json!(parameters);
    round_json(&mut parameters);
    json!({
        "command": config.command.name(),
        "parameters": parameters,
        "results": results,
        "bounds": bounds,
        "tool_version": res_scope_core::VERSION,
        "runtime": {
            "workers": config.workers,
            "wall_time_ms": wall_time_ms as u64,
        },
    })
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_lines(path: &Path, lines: Vec<String>) -> Result<()> {
    // RFC-4180-style CSV, UTF-8, LF endings. No field ever contains a
    // comma, quote, or newline (they are all plain numerals), so no
    // quoting is required.
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_scan_csv(path: &Path, rows: &[ScanRow]) -> Result<()> {
    let mut lines = Vec::with_capacity(rows.len() + 1);
    lines.push("d,value,log_resonator".to_string());
    for row in rows {
        let lnr = row.log_resonator.map(fmt12).unwrap_or_default();
        lines.push(format!("{},{},{}", row.d, fmt12(row.value), lnr));
    }
    write_lines(path, lines)
}

pub fn write_dist_csv(path: &Path, report: &DistributionReport) -> Result<()> {
    let mut lines = Vec::with_capacity(report.thresholds.len() + 1);
    lines.push("x,j,j_tilde,count,measured_exponent,fitted_c_prime".to_string());
    for t in &report.thresholds {
        lines.push(format!(
            "{},{},{},{},{},{}",
            fmt12(t.x),
            fmt12(t.j),
            fmt12(t.j_tilde),
            t.count,
            t.measured_exponent.map(fmt12).unwrap_or_default(),
            t.fitted_c_prime.map(fmt12).unwrap_or_default(),
        ));
    }
    write_lines(path, lines)
}

pub fn write_charsum_csv(path: &Path, reports: &[CharSumReport]) -> Result<()> {
    let mut lines = Vec::with_capacity(reports.len() + 1);
    lines.push("n,n0,n1,N,empirical,main,f_n0,g_n1,normalized_error,within_bound".to_string());
    for r in reports {
        lines.push(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.n0,
            r.n1,
            r.n_limit,
            fmt12(r.empirical),
            fmt12(r.main),
            fmt12(r.f_n0),
            fmt12(r.g_n1),
            fmt12(r.normalized_error),
            r.within_bound,
        ));
    }
    write_lines(path, lines)
}

/// Companion gnuplot script path for a CSV: same stem, `.gp` extension.
pub fn plot_path_for(csv: &Path) -> PathBuf {
    csv.with_extension("gp")
}

/// Emit a gnuplot script that renders the CSV the command just wrote.
pub fn write_plot_script(csv: &Path, command: &str) -> Result<PathBuf> {
    let gp = plot_path_for(csv);
    let csv_name = csv
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| csv.display().to_string());
    let body = match command {
        "scan" => format!(
            "set datafile separator \",\"\n\
             set key off\n\
             set xlabel \"d\"\n\
             set ylabel \"truncated -L'/L\"\n\
             set title \"extreme-value scan\"\n\
             plot \"{csv_name}\" skip 1 using 1:2 with points pt 7 ps 0.3\n"
        ),
        "dist" => format!(
            "set datafile separator \",\"\n\
             set key off\n\
             set xlabel \"shift x\"\n\
             set ylabel \"count above J~(x)\"\n\
             set title \"threshold distribution\"\n\
             plot \"{csv_name}\" skip 1 using 1:4 with linespoints pt 7\n"
        ),
        "charsum" => format!(
            "set datafile separator \",\"\n\
             set key off\n\
             set xlabel \"n\"\n\
             set ylabel \"|empirical - main| / N^0.6\"\n\
             set title \"character-sum deviation\"\n\
             plot \"{csv_name}\" skip 1 using 1:9 with points pt 7\n"
        ),
        other => {
            return Err(Error::usage(format!("no plot is defined for `{other}`")));
        }
    };
    std::fs::write(&gp, body).map_err(|e| Error::io(gp.display().to_string(), e))?;
    Ok(gp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round12_truncates_to_twelve_digits() {
        assert_eq!(round12(0.0), 0.0);
        assert_eq!(round12(-0.0), 0.0);
        assert_eq!(round12(1.0), 1.0);
        assert_eq!(round12(std::f64::consts::PI), 3.14159265359);
        assert_eq!(round12(-1.0 / 3.0), -0.333333333333);
        assert_eq!(round12(1.23456789012345e-7), 1.23456789012e-7);
        // Idempotent: a rounded value re-rounds to itself.
        let x = round12(0.577215664901532);
        assert_eq!(round12(x), x);
    }

    #[test]
    fn fmt12_is_short_and_reparses() {
        for x in [
            std::f64::consts::PI,
            -0.000123456789012345,
            8.242704993602437,
            1e300,
            -2.5e-300,
            607925.0,
        ] {
            let s = fmt12(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, round12(x), "{s}");
            let mantissa: String = s
                .split(['e', 'E'])
                .next()
                .unwrap()
                .chars()
                .filter(char::is_ascii_digit)
                .collect();
            let significant = mantissa.trim_start_matches('0').len();
            assert!(significant <= 12, "`{s}` carries too many digits");
        }
    }

    #[test]
    fn round_json_walks_everything() {
        let mut v = json!({
            "a": 1.0 / 3.0,
            "b": [2.0 / 3.0, {"c": 1.23456789012345e99}],
            "n": 607925u64,
            "s": "text",
            "z": null,
        });
        round_json(&mut v);
        assert_eq!(v["a"], json!(0.333333333333));
        assert_eq!(v["b"][0], json!(0.666666666667));
        assert_eq!(v["b"][1]["c"], json!(1.23456789012e99));
        assert_eq!(v["n"], json!(607925u64));
    }
}
