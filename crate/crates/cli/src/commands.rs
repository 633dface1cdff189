use std::fmt::Write as _;
use std::path::Path;

use pingpong_qkd::channels::{q_for_raw_error, ChannelScenario};
use pingpong_qkd::keyrate::{expected_keyrate, expected_observation, keyrate, DeviceModel, Observation, ProtocolParams};
use pingpong_qkd::simulator::{analyze, run_protocol, SimConfig};
use pingpong_qkd::{ChannelMode, Error as CoreError, KeyRateReport};
use rayon::prelude::*;

use crate::args::{ChannelArgs, Devices, KeyrateArgs, OutputFormat, ProtocolArgs, ScanArgs, SimulateArgs, SweepVar};

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or parameters, or a failed verification.
    Usage(String),
    /// The protocol aborts: no key can be extracted.
    Abort,
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Abort => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Fixed-width scientific notation used in every output file.
pub fn sci(x: f64) -> String {
    format!("{x:.10e}")
}

pub fn build_params(p: &ProtocolArgs, d: u32, signals: u128) -> CliResult<ProtocolParams<f64>> {
    let params = match p.test_size {
        Some(m) => ProtocolParams::new(d, signals, m, p.epsilon)?,
        None => ProtocolParams::with_test_fraction(d, signals, p.test_fraction, p.epsilon)?,
    };
    Ok(params.subset_cost(p.subset_cost).ec_factor(p.ec)?)
}

pub fn build_scenario(c: &ChannelArgs) -> CliResult<ChannelScenario<f64>> {
    Ok(ChannelScenario::new(c.q, c.mode.into(), c.mu, c.eta)?)
}

pub fn device_model(devices: Devices, scenario: &ChannelScenario<f64>) -> DeviceModel {
    match devices {
        Devices::Auto => DeviceModel::for_scenario(scenario),
        Devices::Ideal => DeviceModel::Ideal,
        Devices::Lossy => DeviceModel::Lossy,
    }
}

pub fn report_lines(report: &KeyRateReport<f64>) -> String {
    let mut s = String::new();
    let rows: [(&str, String); 12] = [
        ("delta", sci(report.delta)),
        ("entropy_bound_bits", sci(report.entropy_bound_bits)),
        ("leak_bits", sci(report.leak_bits)),
        ("subset_cost_bits", sci(report.subset_cost_bits)),
        ("security_cost_bits", sci(report.security_cost_bits)),
        ("margin_bits", sci(report.margin_bits)),
        ("ell_bits", report.ell_bits.to_string()),
        ("rate_per_signal", sci(report.rate_per_signal)),
        ("smooth_eps", sci(report.smooth_eps)),
        ("eps_pa", sci(report.eps_pa)),
        ("eps_fail", sci(report.eps_fail)),
        ("aborted", report.aborted.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

pub fn finish(report: &KeyRateReport<f64>) -> CliResult<()> {
    if report.aborted {
        Err(CliError::Abort)
    } else {
        Ok(())
    }
}

const KEYRATE_COLUMNS: [&str; 20] = [
    "d", "N", "m", "Q", "mode", "mu", "eta", "test_error", "raw_key_error", "vac_count", "delta", "entropy_bound", "leak",
    "subset_cost", "security_cost", "ell", "rate", "eps_pa", "eps_fail", "aborted",
];

pub fn cmd_keyrate(args: &KeyrateArgs) -> CliResult<String> {
    let params = build_params(&args.protocol, args.protocol.d, args.protocol.signals)?;
    let scenario = build_scenario(&args.channel)?;
    let devices = device_model(args.channel.devices, &scenario);
    let expected = expected_observation(&params, &scenario, devices)?;
    let obs = Observation::new(
        args.test_error.unwrap_or(expected.test_error),
        args.vac_count.unwrap_or(expected.vac_decode_count),
        params.key_size(),
        args.raw_error.unwrap_or(expected.raw_key_error),
    )?;
    let report = keyrate(&params, &obs, devices)?;
    let out = match args.format {
        OutputFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "d = {}", params.d);
            let _ = writeln!(s, "signals = {}", params.signals);
            let _ = writeln!(s, "test_size = {}", params.test_size);
            let _ = writeln!(s, "devices = {}", devices_name(devices));
            let _ = writeln!(s, "test_error = {}", sci(obs.test_error));
            let _ = writeln!(s, "raw_key_error = {}", sci(obs.raw_key_error));
            let _ = writeln!(s, "vac_count = {}", obs.vac_decode_count);
            s + &report_lines(&report)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(KEYRATE_COLUMNS)?;
            w.write_record([
                params.d.to_string(),
                params.signals.to_string(),
                params.test_size.to_string(),
                sci(scenario.q),
                scenario.mode.short_name().to_string(),
                sci(scenario.mu),
                sci(scenario.eta),
                sci(obs.test_error),
                sci(obs.raw_key_error),
                obs.vac_decode_count.to_string(),
                sci(report.delta),
                sci(report.entropy_bound_bits),
                sci(report.leak_bits),
                sci(report.subset_cost_bits),
                sci(report.security_cost_bits),
                report.ell_bits.to_string(),
                sci(report.rate_per_signal),
                sci(report.eps_pa),
                sci(report.eps_fail),
                report.aborted.to_string(),
            ])?;
            csv_string(w)?
        }
    };
    print!("{out}");
    finish(&report)?;
    Ok(out)
}

fn devices_name(d: DeviceModel) -> &'static str {
    match d {
        DeviceModel::Ideal => "ideal",
        DeviceModel::Lossy => "lossy",
    }
}

pub fn csv_string(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Grid of `points` values from `from` to `to`, endpoints exact.
pub fn grid(from: f64, to: f64, points: usize, log: bool) -> CliResult<Vec<f64>> {
    if points < 2 {
        return Err(CliError::Usage("a sweep needs at least 2 points".into()));
    }
    if !(from < to) || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Usage(format!("sweep range must satisfy from < to (got {from}, {to})")));
    }
    if log && from <= 0.0 {
        return Err(CliError::Usage("logarithmic sweep needs from > 0".into()));
    }
    let last = (points - 1) as f64;
    Ok((0..points)
        .map(|i| match i {
            0 => from,
            _ if i == points - 1 => to,
            _ if log => from * (to / from).powf(i as f64 / last),
            _ => from + (to - from) * i as f64 / last,
        })
        .collect())
}

/// Columns shared by every sweep row after the swept value.
pub const REPORT_COLUMNS: [&str; 6] = ["delta", "entropy_bound", "leak", "ell", "rate", "aborted"];

pub fn report_fields(report: &KeyRateReport<f64>) -> [String; 6] {
    [
        sci(report.delta),
        sci(report.entropy_bound_bits),
        sci(report.leak_bits),
        report.ell_bits.to_string(),
        sci(report.rate_per_signal),
        report.aborted.to_string(),
    ]
}

/// Sweep point with every derived parameter resolved.
pub struct SweepPoint {
    pub params: ProtocolParams<f64>,
    pub scenario: ChannelScenario<f64>,
    pub devices: DeviceModel,
}

pub fn sweep_point(
    var: SweepVar,
    value: f64,
    protocol: &ProtocolArgs,
    channel: &ChannelArgs,
    d: u32,
) -> CliResult<SweepPoint> {
    let mut scenario = build_scenario(channel)?;
    let mut signals = protocol.signals;
    match var {
        SweepVar::N => signals = value.round() as u128,
        SweepVar::Q => scenario = ChannelScenario::new(value, scenario.mode, scenario.mu, scenario.eta)?,
        SweepVar::Mu => scenario = scenario.with_vacuum(value)?,
        SweepVar::RawError => {
            let q = q_for_raw_error(d, scenario.mode, value)?;
            scenario = ChannelScenario::new(q, scenario.mode, scenario.mu, scenario.eta)?;
        }
    }
    let params = build_params(protocol, d, signals)?;
    let devices = match (var, channel.devices) {
        (SweepVar::Mu, Devices::Auto) => DeviceModel::Lossy,
        (_, devices) => device_model(devices, &scenario),
    };
    Ok(SweepPoint { params, scenario, devices })
}

pub fn format_value(var: SweepVar, value: f64) -> String {
    match var {
        SweepVar::N => (value.round() as u128).to_string(),
        _ => sci(value),
    }
}

pub fn cmd_scan(args: &ScanArgs) -> CliResult<String> {
    let values = grid(args.from, args.to, args.points, args.log)?;
    let dims = if args.dims.is_empty() { vec![args.protocol.d] } else { args.dims.clone() };
    let jobs: Vec<(u32, f64)> = dims.iter().flat_map(|&d| values.iter().map(move |&v| (d, v))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(d, v)| {
            let pt = sweep_point(args.var, v, &args.protocol, &args.channel, d)?;
            let report = expected_keyrate(&pt.params, &pt.scenario, pt.devices)?;
            let mut row = vec![d.to_string(), format_value(args.var, v)];
            row.extend(report_fields(&report));
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["d", args.var.column()];
    header.extend(REPORT_COLUMNS);
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let out = csv_string(w)?;
    match &args.out {
        Some(path) => std::fs::write(path, &out).map_err(|e| io_err(path, e))?,
        None => print!("{out}"),
    }
    Ok(out)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let params = build_params(&args.protocol, args.protocol.d, args.protocol.signals)?;
    let scenario = build_scenario(&args.channel)?;
    let mut config = SimConfig::new(params, scenario, args.seed);
    config.devices = device_model(args.channel.devices, &scenario);
    let result = run_protocol(&config)?;
    let report = analyze(&config, &result)?;
    let c = result.counts;
    let mut s = String::new();
    let _ = writeln!(s, "seed = {}", args.seed);
    let _ = writeln!(s, "d = {}", params.d);
    let _ = writeln!(s, "signals = {}", params.signals);
    let _ = writeln!(s, "mode = {}", ChannelMode::from(args.channel.mode));
    let _ = writeln!(s, "test_rounds = {}", c.test_rounds);
    let _ = writeln!(s, "test_errors = {}", c.test_errors);
    let _ = writeln!(s, "test_vacuum_rounds = {}", c.test_vacuum_rounds);
    let _ = writeln!(s, "key_rounds = {}", c.key_rounds);
    let _ = writeln!(s, "key_vacuum = {}", c.key_vacuum);
    let _ = writeln!(s, "key_kept = {}", c.key_kept);
    let _ = writeln!(s, "decode_errors = {}", c.decode_errors);
    let _ = writeln!(s, "empirical_test_error = {}", sci(result.empirical_test_error));
    let _ = writeln!(s, "empirical_decode_error = {}", sci(result.empirical_decode_error));
    let _ = writeln!(s, "empirical_vac_fraction = {}", sci(result.empirical_vac_fraction));
    let _ = writeln!(s, "devices = {}", devices_name(config.devices));
    s += &report_lines(&report);
    print!("{s}");
    finish(&report)?;
    Ok(s)
}
