//! Argument parsing and configuration resolution.
//!
//! Every subcommand shares one flat flag set; values resolve in priority
//! order: explicit flag, then `--config` file entry, then the command's
//! default. The resolved [`RunConfig`] is fully concrete and round-trips
//! through its own key=value serialization: `parse(emit(config)) == config`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use res_scope_core::{Error, Result, TruncationPolicy};

#[derive(Parser, Debug)]
#[command(
    name = "res-scope",
    version = res_scope_core::VERSION,
    about = "Desk-scale numerics for resonance-method scans of quadratic Dirichlet L-functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Subcommand, Debug)]
pub enum CommandArgs {
    /// Extreme-value scan of truncated -L'/L over a discriminant range
    Scan(CommonArgs),
    /// Resonance ratio S2/S1 against its main-term prediction
    Ratio(CommonArgs),
    /// Distribution counts against the shifted thresholds J(x)
    Dist(CommonArgs),
    /// Character-sum check of the square-indicator main term
    Charsum(CommonArgs),
    /// Closed-form constants C_paper and C_alt with tail bounds
    Constants(CommonArgs),
    /// Near-one resonator main-term report
    NearOne(CommonArgs),
    /// Fixed-sigma main term against its asymptote
    Sigma(CommonArgs),
}

impl CommandArgs {
    fn split(self) -> (CommandKind, CommonArgs) {
        match self {
            CommandArgs::Scan(a) => (CommandKind::Scan, a),
            CommandArgs::Ratio(a) => (CommandKind::Ratio, a),
            CommandArgs::Dist(a) => (CommandKind::Dist, a),
            CommandArgs::Charsum(a) => (CommandKind::Charsum, a),
            CommandArgs::Constants(a) => (CommandKind::Constants, a),
            CommandArgs::NearOne(a) => (CommandKind::NearOne, a),
            CommandArgs::Sigma(a) => (CommandKind::Sigma, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Scan,
    Ratio,
    Dist,
    Charsum,
    Constants,
    NearOne,
    Sigma,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Scan => "scan",
            CommandKind::Ratio => "ratio",
            CommandKind::Dist => "dist",
            CommandKind::Charsum => "charsum",
            CommandKind::Constants => "constants",
            CommandKind::NearOne => "near-one",
            CommandKind::Sigma => "sigma",
        }
    }

    fn needs_hi(&self) -> bool {
        !matches!(self, CommandKind::Constants)
    }

    /// Commands that write per-row CSV (and hence can emit a plot script).
    fn has_csv(&self) -> bool {
        matches!(
            self,
            CommandKind::Scan | CommandKind::Dist | CommandKind::Charsum
        )
    }
}

/// The shared flag set. Flags irrelevant to a subcommand are accepted and
/// ignored, so one config file can drive several commands.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Lower end of the |d| range (exclusive); doubles as the resonator
    /// scale N for ratio/scan
    #[arg(long)]
    pub lo: Option<u64>,
    /// Upper end of the |d| range (inclusive); the scale N for range-free
    /// commands (charsum, near-one, sigma)
    #[arg(long)]
    pub hi: Option<u64>,
    /// Main truncation cutoff of -L'/L (default: max(10^4, ln(hi)^3))
    #[arg(long = "Y")]
    pub y: Option<u64>,
    /// Audit cutoff (default: 2Y)
    #[arg(long = "Y-audit")]
    pub y_audit: Option<u64>,
    /// Evaluation exponent sigma in (1/2, 1]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Unit-resonator parameter delta in (0, 1/4)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Near-one parameter A (sigma_A = 1 - A/ln ln N)
    #[arg(long = "A")]
    pub a: Option<f64>,
    /// Near-one cutoff coefficient kappa
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Fixed-sigma cutoff coefficient eta
    #[arg(long)]
    pub eta: Option<f64>,
    /// Comma-separated threshold shifts for dist
    #[arg(long, value_delimiter = ',')]
    pub xs: Option<Vec<f64>>,
    /// Comma-separated character arguments for charsum
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// Leaderboard size for scan
    #[arg(long)]
    pub top: Option<usize>,
    /// Prime cutoff for constants
    #[arg(long = "prime-cutoff")]
    pub prime_cutoff: Option<u64>,
    /// Worker threads (default: all cores); results are identical for any
    /// count
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write the JSON report here (otherwise it goes to stdout)
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Write per-row CSV here (scan, dist, charsum)
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV
    #[arg(long)]
    pub plot: bool,
    /// key=value file supplying defaults for any flag above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A fully resolved run: every knob concrete, every default applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub lo: u64,
    pub hi: u64,
    pub sigma: f64,
    pub y: u64,
    pub y_audit: u64,
    pub delta: f64,
    pub a: f64,
    pub kappa: f64,
    pub eta: f64,
    pub xs: Vec<f64>,
    pub ns: Vec<u64>,
    pub top: usize,
    pub prime_cutoff: u64,
    pub workers: usize,
    pub out_json: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub plot: bool,
}

impl RunConfig {
    pub fn policy(&self) -> Result<TruncationPolicy> {
        TruncationPolicy::new(self.sigma, self.y, self.y_audit)
    }

    /// Serialize as the flat key=value config format. [`parse_config`] on
    /// the result (plus the subcommand name) reproduces `self` exactly.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command.name());
        let _ = writeln!(s, "lo = {}", self.lo);
        let _ = writeln!(s, "hi = {}", self.hi);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "Y = {}", self.y);
        let _ = writeln!(s, "Y-audit = {}", self.y_audit);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "A = {}", self.a);
        let _ = writeln!(s, "kappa = {}", self.kappa);
        let _ = writeln!(s, "eta = {}", self.eta);
        let xs: Vec<String> = self.xs.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "xs = {}", xs.join(","));
        let ns: Vec<String> = self.ns.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "n = {}", ns.join(","));
        let _ = writeln!(s, "top = {}", self.top);
        let _ = writeln!(s, "prime-cutoff = {}", self.prime_cutoff);
        let _ = writeln!(s, "workers = {}", self.workers);
        if let Some(p) = &self.out_json {
            let _ = writeln!(s, "out-json = {}", p.display());
        }
        if let Some(p) = &self.out_csv {
            let _ = writeln!(s, "out-csv = {}", p.display());
        }
        let _ = writeln!(s, "plot = {}", self.plot);
        s
    }
}

const KNOWN_KEYS: &[&str] = &[
    "command",
    "lo",
    "hi",
    "sigma",
    "Y",
    "Y-audit",
    "delta",
    "A",
    "kappa",
    "eta",
    "xs",
    "n",
    "top",
    "prime-cutoff",
    "workers",
    "out-json",
    "out-csv",
    "plot",
];

fn read_kv_file(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::usage(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::usage(format!(
                "{}:{}: unknown config key `{key}`",
                path.display(),
                lineno + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn kv_parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::usage(format!("config key `{key}`: cannot parse `{raw}`"))),
    }
}

fn kv_parse_list<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<Vec<T>>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<T>()
                    .map_err(|_| Error::usage(format!("config key `{key}`: cannot parse `{part}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some),
    }
}

/// Resolve parsed arguments (plus any `--config` file) into a [`RunConfig`].
pub fn resolve(cli: Cli) -> Result<RunConfig> {
    let (kind, args) = cli.command.split();
    let file = match &args.config {
        Some(path) => read_kv_file(path)?,
        None => BTreeMap::new(),
    };
    if let Some(file_cmd) = file.get("command") {
        if file_cmd != kind.name() {
            return Err(Error::usage(format!(
                "config file is for `{file_cmd}` but the command line says `{}`",
                kind.name()
            )));
        }
    }

    let lo = args.lo.or(kv_parse(&file, "lo")?).unwrap_or(0);
    let hi = match args.hi.or(kv_parse(&file, "hi")?) {
        Some(hi) => hi,
        None if kind.needs_hi() => return Err(Error::usage(format!("{} needs --hi", kind.name()))),
        None => 0,
    };
    let sigma = args
        .sigma
        .or(kv_parse(&file, "sigma")?)
        .unwrap_or(match kind {
            CommandKind::Sigma => 0.75,
            _ => 1.0,
        });
    let y = match args.y.or(kv_parse(&file, "Y")?) {
        Some(y) => y,
        None => TruncationPolicy::default_for(hi, sigma.clamp(0.6, 1.0))?.y(),
    };
    let y_audit = args
        .y_audit
        .or(kv_parse(&file, "Y-audit")?)
        .unwrap_or(2 * y);
    let delta = args.delta.or(kv_parse(&file, "delta")?).unwrap_or(0.01);
    let a = args.a.or(kv_parse(&file, "A")?).unwrap_or(1.0);
    let kappa = args.kappa.or(kv_parse(&file, "kappa")?).unwrap_or(0.1);
    let eta = args.eta.or(kv_parse(&file, "eta")?).unwrap_or(1.0);
    let xs = args
        .xs
        .or(kv_parse_list(&file, "xs")?)
        .unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0, 4.0]);
    let ns = args
        .n
        .or(kv_parse_list(&file, "n")?)
        .unwrap_or_else(|| vec![1]);
    let top = args.top.or(kv_parse(&file, "top")?).unwrap_or(10);
    let prime_cutoff = args
        .prime_cutoff
        .or(kv_parse(&file, "prime-cutoff")?)
        .unwrap_or(1_000_000);
    let workers = match args.workers.or(kv_parse(&file, "workers")?) {
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out_json = args.out_json.or(kv_parse::<PathBuf>(&file, "out-json")?);
    let out_csv = args.out_csv.or(kv_parse::<PathBuf>(&file, "out-csv")?);
    let plot = if args.plot {
        true
    } else {
        kv_parse(&file, "plot")?.unwrap_or(false)
    };

    let config = RunConfig {
        command: kind,
        lo,
        hi,
        sigma,
        y,
        y_audit,
        delta,
        a,
        kappa,
        eta,
        xs,
        ns,
        top,
        prime_cutoff,
        workers,
        out_json,
        out_csv,
        plot,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<()> {
    let kind = config.command;
    if config.workers == 0 {
        return Err(Error::usage("--workers must be at least 1"));
    }
    if config.out_csv.is_some() && !kind.has_csv() {
        return Err(Error::usage(format!(
            "no CSV output is defined for `{}`",
            kind.name()
        )));
    }
    if config.plot {
        if !kind.has_csv() {
            return Err(Error::usage(format!(
                "no plot is defined for `{}`",
                kind.name()
            )));
        }
        if config.out_csv.is_none() {
            return Err(Error::usage("--plot needs --out-csv (it plots the CSV)"));
        }
    }
    if kind == CommandKind::Ratio && config.lo < 16 {
        return Err(Error::usage(
            "ratio needs --lo >= 16: the range is (lo, hi] and lo is the resonator scale N",
        ));
    }
    if kind == CommandKind::Charsum && config.ns.is_empty() {
        return Err(Error::usage("charsum needs at least one --n value"));
    }
    Ok(())
}

/// Parse a full command line (including argv[0]) into a resolved config.
pub fn parse_config<I, S>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::usage(e.to_string()))?;
    resolve(cli)
}
