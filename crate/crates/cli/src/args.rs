use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pingpong_qkd::ChannelMode;

#[derive(Debug, Parser)]
#[command(name = "ppqkd", version, about = "Finite-key rates for the high-dimensional two-way Ping-Pong QKD protocol")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key-length report for one parameter set.
    Keyrate(KeyrateArgs),
    /// Key rates along a one-dimensional parameter sweep, as CSV.
    Scan(ScanArgs),
    /// Monte Carlo run feeding the key-length computation.
    Simulate(SimulateArgs),
    /// Numerical certification suites.
    Verify(VerifyArgs),
    /// CSV data and gnuplot scripts for the standard figures.
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    #[value(alias = "dependent")]
    Dep,
    #[value(alias = "independent", alias = "ind")]
    Indep,
}

impl From<Mode> for ChannelMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Dep => ChannelMode::Dependent,
            Mode::Indep => ChannelMode::Independent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Devices {
    /// Lossy bound whenever the scenario has loss, ideal otherwise.
    Auto,
    Ideal,
    Lossy,
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    /// Qudit dimension.
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    /// Number of signals N (scientific notation allowed, e.g. 1e20).
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub signals: u128,
    /// Fraction of signals used as test rounds, in (0, 0.5].
    #[arg(long, default_value_t = 0.5)]
    pub test_fraction: f64,
    /// Explicit number of test rounds; overrides --test-fraction.
    #[arg(long, value_parser = parse_count)]
    pub test_size: Option<u128>,
    #[arg(long, default_value_t = 1e-36)]
    pub epsilon: f64,
    /// Charge log2 C(N, m) bits for communicating the test subset.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set, num_args = 0..=1, default_missing_value = "true")]
    pub subset_cost: bool,
    /// Error-correction efficiency factor (>= 1).
    #[arg(long, default_value_t = 1.2)]
    pub ec: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Depolarizing probability Q.
    #[arg(long = "Q", default_value_t = 0.1)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = Mode::Dep)]
    pub mode: Mode,
    /// Per-leg vacuum (loss) probability.
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Detector efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, value_enum, default_value_t = Devices::Auto)]
    pub devices: Devices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct KeyrateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Observed test error; defaults to its expected value.
    #[arg(long)]
    pub test_error: Option<f64>,
    /// Observed raw key error; defaults to its expected value.
    #[arg(long)]
    pub raw_error: Option<f64>,
    /// Observed number of key rounds decoded as vacuum.
    #[arg(long, value_parser = parse_count)]
    pub vac_count: Option<u128>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    #[value(name = "N")]
    N,
    #[value(name = "Q")]
    Q,
    #[value(name = "mu")]
    Mu,
    #[value(name = "raw_error")]
    RawError,
}

impl SweepVar {
    pub fn column(self) -> &'static str {
        match self {
            SweepVar::N => "N",
            SweepVar::Q => "Q",
            SweepVar::Mu => "mu",
            SweepVar::RawError => "raw_error",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum)]
    pub var: SweepVar,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    /// Logarithmic spacing (requires --from > 0).
    #[arg(long)]
    pub log: bool,
    /// Dimensions to sweep; overrides --d.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<u32>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Sampling,
    Dominance,
    Povm,
    Lemma1,
    Ballbound,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    #[value(name = "5")]
    Five,
    #[value(name = "6")]
    Six,
}

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    #[arg(long, value_enum)]
    pub which: Figure,
    #[arg(long, env = "PPQKD_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Depolarizing probability (figures 2, 3 and 6).
    #[arg(long = "Q")]
    pub q: Option<f64>,
    /// Signal count for fixed-N figures (5 and 6).
    #[arg(long, value_parser = parse_count)]
    pub signals: Option<u128>,
    #[arg(long, value_parser = parse_count)]
    pub n_min: Option<u128>,
    #[arg(long, value_parser = parse_count)]
    pub n_max: Option<u128>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub ec: Option<f64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

/// Parses a non-negative integer written plainly or in scientific notation
/// (`2e6`, `1.5E3`). Values with a fractional part are rejected.
pub fn parse_count(s: &str) -> Result<u128, String> {
    let s = s.trim().replace('_', "");
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|e| format!("bad exponent in {s:?}: {e}"))?),
        None => (s.as_str(), 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("not a non-negative count: {s:?}"));
    }
    let digits = format!("{int}{frac}");
    let scale = exp - frac.len() as i32;
    let (digits, scale) = if scale < 0 {
        let cut = (-scale) as usize;
        let keep = digits.len().saturating_sub(cut);
        if digits[keep..].chars().any(|c| c != '0') {
            return Err(format!("{s:?} is not an integer"));
        }
        (digits[..keep].to_string(), 0)
    } else {
        (digits, scale)
    };
    let overflow = || format!("{s:?} is too large");
    let base: u128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| overflow())? };
    let factor = 10u128.checked_pow(scale as u32).ok_or_else(overflow)?;
    base.checked_mul(factor).ok_or_else(overflow)
}

/// Reads `key = value` lines (blank lines and `#` comments ignored) into
/// `--key value` argument pairs.
pub fn config_args(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", no + 1))?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", no + 1));
        }
        out.push(format!("--{key}"));
        out.push(value.trim().to_string());
    }
    Ok(out)
}

/// Removes `--config PATH` from `argv` and splices the file's flags in right
/// after the subcommand, so flags given on the command line take precedence.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            path = Some(it.next().ok_or("--config needs a path")?);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let extra = config_args(&text)?;
    let sub = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 2).unwrap_or(rest.len());
    rest.splice(sub..sub, extra);
    Ok(rest)
}
