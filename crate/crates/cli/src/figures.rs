//! Figure data: one CSV per curve plus a gnuplot script that draws them.

use std::fmt::Write as _;
use std::path::Path;

use pingpong_qkd::keyrate::{expected_keyrate, minimal_positive_signals, noise_tolerance, vacuum_tolerance};
use pingpong_qkd::{ChannelMode, Error as CoreError};
use rayon::prelude::*;

use crate::args::{ChannelArgs, Devices, Figure, FiguresArgs, Mode, ProtocolArgs, SweepVar};
use crate::commands::{
    build_params, build_scenario, csv_string, format_value, grid, io_err, report_fields, sci, sweep_point, CliResult,
    REPORT_COLUMNS,
};

const DIMS: [u32; 3] = [2, 4, 8];
const MODES: [Mode; 2] = [Mode::Dep, Mode::Indep];

/// Settings for one figure after applying overrides.
#[derive(Debug, Clone)]
struct Settings {
    q: f64,
    signals: u128,
    n_min: u128,
    n_max: u128,
    points: usize,
    epsilon: f64,
    ec: f64,
    test_fraction: f64,
    overrides: Vec<String>,
}

impl Settings {
    fn resolve(args: &FiguresArgs) -> Self {
        let (q, points) = match args.which {
            Figure::Two | Figure::Three => (0.1, 33),
            Figure::Five => (0.0, 61),
            Figure::Six => (0.05, 51),
        };
        let mut overrides = Vec::new();
        let mut pick = |name: &str, given: Option<String>| {
            if let Some(v) = &given {
                overrides.push(format!("{name}={v}"));
            }
            given
        };
        let q = pick("Q", args.q.map(sci)).map_or(q, |_| args.q.unwrap());
        let signals = pick("signals", args.signals.map(|n| n.to_string())).map_or(10u128.pow(20), |_| args.signals.unwrap());
        let n_min = pick("n_min", args.n_min.map(|n| n.to_string())).map_or(10_000, |_| args.n_min.unwrap());
        let n_max = pick("n_max", args.n_max.map(|n| n.to_string())).map_or(10u128.pow(12), |_| args.n_max.unwrap());
        let points = pick("points", args.points.map(|p| p.to_string())).map_or(points, |_| args.points.unwrap());
        let epsilon = pick("epsilon", args.epsilon.map(sci)).map_or(1e-36, |_| args.epsilon.unwrap());
        let ec = pick("ec", args.ec.map(sci)).map_or(1.2, |_| args.ec.unwrap());
        let test_fraction = pick("test_fraction", args.test_fraction.map(sci)).map_or(0.5, |_| args.test_fraction.unwrap());
        Self { q, signals, n_min, n_max, points, epsilon, ec, test_fraction, overrides }
    }

    fn protocol(&self, d: u32) -> ProtocolArgs {
        ProtocolArgs {
            d,
            signals: self.signals,
            test_fraction: self.test_fraction,
            test_size: None,
            epsilon: self.epsilon,
            subset_cost: false,
            ec: self.ec,
        }
    }

    fn channel(&self, mode: Mode) -> ChannelArgs {
        ChannelArgs { q: self.q, mode, mu: 0.0, eta: 1.0, devices: Devices::Auto }
    }

    fn overrides_line(&self) -> String {
        if self.overrides.is_empty() {
            "# overrides: none".into()
        } else {
            format!("# overrides: {}", self.overrides.join(" "))
        }
    }
}

struct Curve {
    file: String,
    label: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<String>,
}

struct Series {
    file: String,
    column: usize,
    title: String,
}

struct Panel {
    title: String,
    xlabel: &'static str,
    ylabel: &'static str,
    log_x: bool,
    series: Vec<Series>,
}

fn mode_name(mode: Mode) -> &'static str {
    ChannelMode::from(mode).short_name()
}

fn sweep_curve(
    var: SweepVar,
    values: &[f64],
    protocol: &ProtocolArgs,
    channel: &ChannelArgs,
) -> CliResult<Vec<Vec<String>>> {
    values
        .par_iter()
        .map(|&v| {
            let pt = sweep_point(var, v, protocol, channel, protocol.d)?;
            let report = expected_keyrate(&pt.params, &pt.scenario, pt.devices)?;
            let mut row = vec![format_value(var, v)];
            row.extend(report_fields(&report));
            Ok(row)
        })
        .collect()
}

fn columns(first: &str) -> Vec<String> {
    std::iter::once(first).chain(REPORT_COLUMNS).map(String::from).collect()
}

fn n_grid(s: &Settings) -> CliResult<Vec<f64>> {
    grid(s.n_min as f64, s.n_max as f64, s.points, true)
}

fn figure_two(s: &Settings) -> CliResult<(Vec<Curve>, Vec<Panel>, String)> {
    let values = n_grid(s)?;
    let mut curves = Vec::new();
    let mut panels = Vec::new();
    for mode in MODES {
        let mut series = Vec::new();
        for d in DIMS {
            let file = format!("fig2_{}_d{d}.csv", mode_name(mode));
            curves.push(Curve {
                file: file.clone(),
                label: format!("mode={} d={d}", mode_name(mode)),
                columns: columns("N"),
                rows: sweep_curve(SweepVar::N, &values, &s.protocol(d), &s.channel(mode))?,
                notes: vec![],
            });
            series.push(Series { file, column: 6, title: format!("d = {d}") });
        }
        panels.push(Panel {
            title: format!("{} channels, Q = {}", mode_name(mode), s.q),
            xlabel: "signals N",
            ylabel: "key rate (bits per signal)",
            log_x: true,
            series,
        });
    }
    let params = format!(
        "Q={} epsilon={} test_fraction={} ec={} N_min={} N_max={} points={} spacing=log",
        sci(s.q), sci(s.epsilon), sci(s.test_fraction), sci(s.ec), s.n_min, s.n_max, s.points
    );
    Ok((curves, panels, params))
}

fn threshold_note(s: &Settings, d: u32) -> CliResult<String> {
    let template = build_params(&s.protocol(d), d, 1_000_000)?;
    let scenario = build_scenario(&s.channel(Mode::Dep))?;
    let devices = crate::commands::device_model(Devices::Auto, &scenario);
    Ok(match minimal_positive_signals(&template, &scenario, devices)? {
        Some(n) => format!("# smallest N with positive key (d={d}): {n}"),
        None => format!("# smallest N with positive key (d={d}): none"),
    })
}

fn figure_three(s: &Settings) -> CliResult<(Vec<Curve>, Vec<Panel>, String)> {
    let values = n_grid(s)?;
    let channel = s.channel(Mode::Dep);
    let high = sweep_curve(SweepVar::N, &values, &s.protocol(4), &channel)?;
    let low = sweep_curve(SweepVar::N, &values, &s.protocol(2), &channel)?;
    let cols = ["N", "ell", "rate", "aborted"].map(String::from).to_vec();
    let pick = |row: &Vec<String>| vec![row[0].clone(), row[4].clone(), row[5].clone(), row[6].clone()];
    let doubled = low
        .iter()
        .map(|row| {
            let n: u128 = row[0].parse().expect("integer N");
            let ell = 2 * row[4].parse::<u128>().expect("integer ell");
            vec![row[0].clone(), ell.to_string(), sci(ell as f64 / n as f64), (ell == 0).to_string()]
        })
        .collect();
    let curves = vec![
        Curve {
            file: "fig3_d4.csv".into(),
            label: "mode=dep d=4".into(),
            columns: cols.clone(),
            rows: high.iter().map(pick).collect(),
            notes: vec![threshold_note(s, 4)?],
        },
        Curve {
            file: "fig3_2x_d2.csv".into(),
            label: "mode=dep two parallel d=2 runs, ell summed".into(),
            columns: cols,
            rows: doubled,
            notes: vec![threshold_note(s, 2)?],
        },
    ];
    let panels = vec![Panel {
        title: format!("dependent channels, Q = {}", s.q),
        xlabel: "signals N",
        ylabel: "key rate (bits per signal)",
        log_x: true,
        series: vec![
            Series { file: "fig3_d4.csv".into(), column: 3, title: "d = 4".into() },
            Series { file: "fig3_2x_d2.csv".into(), column: 3, title: "2 x (d = 2)".into() },
        ],
    }];
    let params = format!(
        "Q={} epsilon={} test_fraction={} ec={} N_min={} N_max={} points={} spacing=log",
        sci(s.q), sci(s.epsilon), sci(s.test_fraction), sci(s.ec), s.n_min, s.n_max, s.points
    );
    Ok((curves, panels, params))
}

fn figure_five(s: &Settings) -> CliResult<(Vec<Curve>, Vec<Panel>, String)> {
    let values = grid(0.0, 0.3, s.points, false)?;
    let mut curves = Vec::new();
    let mut series = Vec::new();
    for d in DIMS {
        let file = format!("fig5_d{d}.csv");
        let tolerance = noise_tolerance(d, ChannelMode::Dependent, s.ec, None)?;
        curves.push(Curve {
            file: file.clone(),
            label: format!("mode=dep d={d}"),
            columns: columns("raw_error"),
            rows: sweep_curve(SweepVar::RawError, &values, &s.protocol(d), &s.channel(Mode::Dep))?,
            notes: vec![format!("# asymptotic noise tolerance: {}", sci(tolerance))],
        });
        series.push(Series { file, column: 6, title: format!("d = {d}") });
    }
    let panels = vec![Panel {
        title: format!("dependent channels, N = {}", s.signals),
        xlabel: "raw key error",
        ylabel: "key rate (bits per signal)",
        log_x: false,
        series,
    }];
    let params = format!(
        "N={} epsilon={} test_fraction={} ec={} raw_error=[0,0.3] points={}",
        s.signals, sci(s.epsilon), sci(s.test_fraction), sci(s.ec), s.points
    );
    Ok((curves, panels, params))
}

fn figure_six(s: &Settings) -> CliResult<(Vec<Curve>, Vec<Panel>, String)> {
    let values = grid(0.0, 0.5, s.points, false)?;
    let mut curves = Vec::new();
    let mut panels = Vec::new();
    for mode in MODES {
        let mut series = Vec::new();
        for d in DIMS {
            let file = format!("fig6_{}_d{d}.csv", mode_name(mode));
            let channel = s.channel(mode);
            let params = build_params(&s.protocol(d), d, s.signals)?;
            let note = match vacuum_tolerance(&params, &build_scenario(&channel)?) {
                Ok(mu) => format!("# vacuum tolerance: {}", sci(mu)),
                Err(CoreError::NoRoot(_)) => "# vacuum tolerance: none".into(),
                Err(e) => return Err(e.into()),
            };
            curves.push(Curve {
                file: file.clone(),
                label: format!("mode={} d={d}", mode_name(mode)),
                columns: columns("mu"),
                rows: sweep_curve(SweepVar::Mu, &values, &s.protocol(d), &channel)?,
                notes: vec![note],
            });
            series.push(Series { file, column: 6, title: format!("d = {d}") });
        }
        panels.push(Panel {
            title: format!("{} channels, Q = {}", mode_name(mode), s.q),
            xlabel: "vacuum probability mu",
            ylabel: "key rate (bits per signal)",
            log_x: false,
            series,
        });
    }
    let params = format!(
        "Q={} N={} epsilon={} test_fraction={} ec={} mu=[0,0.5] points={}",
        sci(s.q), s.signals, sci(s.epsilon), sci(s.test_fraction), sci(s.ec), s.points
    );
    Ok((curves, panels, params))
}

fn script(name: &str, panels: &[Panel]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# generated by ppqkd figures --which {}", &name[3..]);
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile commentschars '#'");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size {},500", 600 * panels.len());
    let _ = writeln!(s, "set output '{name}.png'");
    if panels.len() > 1 {
        let _ = writeln!(s, "set multiplot layout 1,{}", panels.len());
    }
    for p in panels {
        let _ = writeln!(s, "{}", if p.log_x { "set logscale x" } else { "unset logscale x" });
        let _ = writeln!(s, "set title '{}'", p.title);
        let _ = writeln!(s, "set xlabel '{}'", p.xlabel);
        let _ = writeln!(s, "set ylabel '{}'", p.ylabel);
        let plots: Vec<String> = p
            .series
            .iter()
            .map(|x| format!("'{}' using 1:{} with lines title '{}'", x.file, x.column, x.title))
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    if panels.len() > 1 {
        let _ = writeln!(s, "unset multiplot");
    }
    s
}

/// File name and contents of every output of a figure.
pub fn render(args: &FiguresArgs) -> CliResult<Vec<(String, String)>> {
    let settings = Settings::resolve(args);
    let (name, (curves, panels, params)) = match args.which {
        Figure::Two => ("fig2", figure_two(&settings)?),
        Figure::Three => ("fig3", figure_three(&settings)?),
        Figure::Five => ("fig5", figure_five(&settings)?),
        Figure::Six => ("fig6", figure_six(&settings)?),
    };
    let mut files = Vec::new();
    for c in curves {
        let mut text = String::new();
        let _ = writeln!(text, "# ppqkd figures --which {}", &name[3..]);
        let _ = writeln!(text, "# curve: {}", c.label);
        let _ = writeln!(text, "# parameters: {params}");
        let _ = writeln!(text, "{}", settings.overrides_line());
        for note in &c.notes {
            let _ = writeln!(text, "{note}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&c.columns)?;
        for row in &c.rows {
            w.write_record(row)?;
        }
        text += &csv_string(w)?;
        files.push((c.file, text));
    }
    files.push((format!("{name}.gp"), script(name, &panels)));
    Ok(files)
}

pub fn cmd_figures(args: &FiguresArgs) -> CliResult<Vec<String>> {
    let files = render(args)?;
    let dir: &Path = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(&name);
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        println!("wrote {}", path.display());
        written.push(name);
    }
    Ok(written)
}
