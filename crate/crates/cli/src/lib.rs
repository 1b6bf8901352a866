//! Command-line front end: scenario loading, subcommands and output files.

pub mod builtins;
pub mod experiments;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use uam_core::airspace::horizontal_safe_separation;
use uam_core::ris::{dbm_to_watts, db_to_linear};
use uam_core::scenario::format_resolution;
use uam_core::sim::{run_with, RunOptions, SimOutput};
use uam_core::{RisMode, Scenario};

#[derive(Debug, Parser)]
#[command(name = "uam", version, about = "Layered UAM communication and flight-control simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its trace, metrics and series.
    Simulate(CommonArgs),
    /// Sweep the offered load and bound the delay of each transmission stack.
    DelayBounds(CommonArgs),
    /// Served capacity over time for each RIS phase resolution.
    PhaseSweep(CommonArgs),
    /// IPR against the duration threshold for several roster sizes.
    IprSweep(CommonArgs),
    /// Check a scenario against its invariants and the reference parameter table.
    Validate(CommonArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Scenario file, or the name of a builtin scenario.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override a scenario key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Resolve `--scenario`, then apply `--set` and `--seed` in that order.
pub fn load_scenario(args: &CommonArgs) -> anyhow::Result<Scenario> {
    let mut scenario = match &args.scenario {
        None => Scenario { name: "default".into(), ..Scenario::default() },
        Some(spec) => {
            let path = Path::new(spec);
            if path.exists() {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let mut s = Scenario::default();
                s.apply_text(&text, &path.display().to_string())?;
                if s.name == "default" {
                    s.name = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                }
                s
            } else {
                let name = spec.strip_prefix("builtin:").unwrap_or(spec);
                match builtins::builtin(name) {
                    Some(s) => s?,
                    None => bail!(
                        "scenario `{spec}` is neither a file nor a builtin (builtins: {})",
                        builtins::names().collect::<Vec<_>>().join(", ")
                    ),
                }
            }
        }
    };
    for o in &args.overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("override `{o}` is not KEY=VALUE"))?;
        scenario.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    Ok(scenario)
}

/// `key = value` document writer.
#[derive(Debug, Default)]
pub struct Metrics {
    text: String,
}

impl Metrics {
    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.put(key, format!("{value:.6}"));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Parse a metrics document back into ordered pairs.
pub fn parse_metrics(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once(" = ").with_context(|| format!("malformed metrics line `{l}`"))?;
            Ok((k.to_string(), v.to_string()))
        })
        .collect()
}

fn series_csv(points: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut s = String::from("x,y\n");
    for (x, y) in points {
        let _ = writeln!(s, "{x:.6},{y:.9}");
    }
    s
}

fn write(dir: &Path, name: &str, content: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
}

fn header(m: &mut Metrics, s: &Scenario) {
    m.put("scenario", &s.name);
    m.put("seed", s.seed);
}

pub fn simulation_metrics(s: &Scenario, out: &SimOutput) -> Metrics {
    let mut m = Metrics::default();
    header(&mut m, s);
    m.put("ris_mode", s.ris_mode.label());
    m.put("xi", format_resolution(s.xi));
    m.put("ticks", s.ticks());
    m.put("aircraft", out.trace.rows.iter().map(|r| r.id).max().map_or(0, |m| m + 1));
    m.put("conflicts", out.episodes.len());
    m.num("ipr_threshold", out.ipr_threshold());
    let steps = (s.sweep.t_dur_max / s.sweep.t_dur_step).round() as usize;
    for i in 0..=steps {
        let t = i as f64 * s.sweep.t_dur_step;
        m.num(&format!("ipr.t_dur_{t:.2}"), out.ipr(t));
    }
    m.put("ls_requests", out.ls_requests());
    m.put("switch_completions", out.switch_completions());
    let served: Vec<f64> = out.trace.rows.iter().filter(|r| r.active_ris.is_some()).map(|r| r.capacity_bps).collect();
    let mean = if served.is_empty() { 0.0 } else { served.iter().sum::<f64>() / served.len() as f64 };
    m.num(&format!("capacity_mean.{}", format_resolution(s.xi)), mean);
    m
}

pub fn simulate(args: &CommonArgs) -> anyhow::Result<()> {
    let s = load_scenario(args)?;
    let dir = &args.out;
    let out = match run_with(&s, &RunOptions::default()) {
        Ok(out) => out,
        Err(e) => {
            let mut m = Metrics::default();
            header(&mut m, &s);
            m.put("status", "aborted");
            m.put("error", &e);
            write(dir, "metrics.txt", m.as_str())?;
            return Err(e.into());
        }
    };
    write(dir, "trace.csv", &out.trace.to_csv())?;
    write(dir, "events.csv", &out.trace.events_csv())?;
    write(dir, "metrics.txt", simulation_metrics(&s, &out).as_str())?;
    let ids: std::collections::BTreeSet<u32> = out.trace.rows.iter().map(|r| r.id).collect();
    for id in ids {
        let rows: Vec<_> = out.trace.rows.iter().filter(|r| r.id == id).collect();
        write(dir, &format!("series/trajectory_{id}.csv"), &series_csv(rows.iter().map(|r| (r.x, r.h))))?;
        write(dir, &format!("series/velocity_x_{id}.csv"), &series_csv(rows.iter().map(|r| (r.t, r.vx))))?;
        write(dir, &format!("series/velocity_y_{id}.csv"), &series_csv(rows.iter().map(|r| (r.t, r.vy))))?;
    }
    write(dir, "series/field_total.csv", &series_csv(out.field_series.iter().map(|f| (f.t, f.potential))))?;
    write(dir, "series/force_total.csv", &series_csv(out.field_series.iter().map(|f| (f.t, f.force))))?;
    Ok(())
}

pub fn delay_bounds(args: &CommonArgs) -> anyhow::Result<()> {
    let s = load_scenario(args)?;
    let curves = experiments::delay_sweep(&s)?;
    let mut table = String::from("kind,load,t,failure_probability,delay_bound\n");
    let mut m = Metrics::default();
    header(&mut m, &s);
    m.num("deadline", s.netcalc.t);
    m.num("epsilon", s.netcalc.epsilon);
    for c in &curves {
        for ((l, f), b) in c.loads.iter().zip(&c.failure).zip(&c.delay_bound) {
            let bound = b.map(|v| format!("{v:.3}")).unwrap_or_else(|| "inf".into());
            let _ = writeln!(table, "{},{l:.3},{:.3},{f:.9},{bound}", c.kind.as_str(), s.netcalc.t);
        }
        write(&args.out, &format!("series/failure_{}.csv", c.kind.as_str()), &series_csv(c.loads.iter().copied().zip(c.failure.iter().copied())))?;
        let k = c.kind.as_str();
        match c.saturation_load(1e-3) {
            Some(v) => m.num(&format!("saturation_load.{k}"), v),
            None => m.put(&format!("saturation_load.{k}"), "none"),
        }
        match c.crossing(0.2) {
            Some(v) => m.num(&format!("crossing_0.2.{k}"), v),
            None => m.put(&format!("crossing_0.2.{k}"), "none"),
        }
    }
    write(&args.out, "delay_bounds.csv", &table)?;
    write(&args.out, "metrics.txt", m.as_str())?;
    Ok(())
}

pub fn phase_sweep(args: &CommonArgs) -> anyhow::Result<()> {
    let s = load_scenario(args)?;
    let sweep = experiments::phase_sweep(&s)?;
    let mut m = Metrics::default();
    header(&mut m, &s);
    m.put("flown_xi", format_resolution(s.xi));
    for (p, probe) in sweep.probes.iter().enumerate() {
        let label = probe.label().replace('/', "_");
        let pts = sweep.times.iter().copied().zip(sweep.series[p].iter().copied());
        write(&args.out, &format!("series/capacity_{label}.csv"), &series_csv(pts))?;
        m.num(&format!("capacity_mean.{}", probe.label()), sweep.mean(p));
    }
    write(&args.out, "metrics.txt", m.as_str())?;
    Ok(())
}

pub fn ipr_sweep(args: &CommonArgs) -> anyhow::Result<()> {
    let s = load_scenario(args)?;
    let curves = experiments::ipr_sweep(&s)?;
    let mut m = Metrics::default();
    header(&mut m, &s);
    m.put("seeds", s.sweep.seeds);
    for c in &curves {
        let label = c.label();
        write(&args.out, &format!("series/ipr_{label}.csv"), &series_csv(c.t_dur.iter().copied().zip(c.ipr.iter().copied())))?;
        m.num(&format!("threshold_mean.{label}"), c.mean_threshold());
        m.put(
            &format!("thresholds.{label}"),
            c.thresholds.iter().map(|t| format!("{t:.1}")).collect::<Vec<_>>().join(","),
        );
        m.put(&format!("conflicts.{label}"), c.conflicts.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    }
    write(&args.out, "metrics.txt", m.as_str())?;
    Ok(())
}

/// One ledger line.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Deliberate departure from the reference table.
    Note,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

pub fn validation_ledger(s: &Scenario) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut add = |name: &str, ok: bool, detail: String| {
        checks.push(Check { name: name.into(), status: if ok { CheckStatus::Pass } else { CheckStatus::Fail }, detail })
    };
    match s.validate() {
        Ok(()) => add("scenario invariants", true, "all hold".into()),
        Err(e) => add("scenario invariants", false, e.to_string()),
    }
    let p = &s.protocol;
    let c = &s.channel;
    let a = &s.airspace;
    add("control-plane rate (RTS/CTS/RTR) = 20", close(p.r_omni, 20.0), format!("{}", p.r_omni));
    add(
        "control message volume = 3",
        close(p.l_rts, 3.0) && close(p.l_cts, 3.0) && close(p.l_rtr, 3.0),
        format!("{}/{}/{}", p.l_rts, p.l_cts, p.l_rtr),
    );
    add(
        "RIS channel rate in [80, 100]",
        (80.0..=100.0).contains(&p.r_ris1) && (80.0..=100.0).contains(&p.r_ris2),
        format!("{}/{}", p.r_ris1, p.r_ris2),
    );
    add("direct channel rate = 40", close(p.r_direct, 40.0), format!("{}", p.r_direct));
    add("reference channel coefficient = -30 dB", close(c.beta_ref, db_to_linear(-30.0)), format!("{:e}", c.beta_ref));
    add("path loss BS-receiver = 2.5", close(c.alpha_bs_k, 2.5), format!("{}", c.alpha_bs_k));
    add("path loss BS-RIS = 2", close(c.alpha_bs_i, 2.0), format!("{}", c.alpha_bs_i));
    add("path loss RIS-receiver = 2.2", close(c.alpha_i_k, 2.2), format!("{}", c.alpha_i_k));
    add("noise power = -169 dBm", close(c.sigma2, dbm_to_watts(-169.0)), format!("{:e} W", c.sigma2));
    add("time step = 0.1 s", close(s.dt, 0.1), format!("{}", s.dt));
    add(
        "layer speeds = 30/45/60",
        a.expected_speed == [30.0, 45.0, 60.0],
        format!("{:?}", a.expected_speed),
    );
    add("large-time-scale multiple q = 5", s.q == 5, format!("{}", s.q));
    add("layer switching probability = 0.4", close(s.p_ls, 0.4), format!("{}", s.p_ls));
    add("interference power = 1 dBm", close(s.interferer.power, dbm_to_watts(1.0)), format!("{:e} W", s.interferer.power));
    add(
        "interference position = (800, 100)",
        s.interferer.pos.x == 800.0 && s.interferer.pos.y == 100.0,
        format!("({}, {})", s.interferer.pos.x, s.interferer.pos.y),
    );
    if let RisMode::StationaryRis(pos) = s.ris_mode {
        add(
            "stationary RIS position = (400, 100)",
            pos.x == 400.0 && pos.y == 100.0,
            format!("({}, {})", pos.x, pos.y),
        );
    }
    let sep = horizontal_safe_separation(a.reference_speed(1), a).unwrap_or(f64::NAN);
    add("low-layer safe separation is finite", sep.is_finite(), format!("{sep:.4} m"));
    checks.push(Check {
        name: "BS transmit power".into(),
        status: CheckStatus::Note,
        detail: format!(
            "{:.1} dBm configured; the reference table prints 300 dBm",
            10.0 * (c.p_bs * 1e3).log10()
        ),
    });
    checks
}

pub fn validate(args: &CommonArgs) -> anyhow::Result<bool> {
    let s = load_scenario(args)?;
    let ledger = validation_ledger(&s);
    let mut ok = true;
    for c in &ledger {
        let tag = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => {
                ok = false;
                "FAIL"
            }
            CheckStatus::Note => "NOTE",
        };
        println!("{tag:4}  {}: {}", c.name, c.detail);
    }
    Ok(ok)
}

pub fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::DelayBounds(a) => delay_bounds(a).map(|_| true),
        Command::PhaseSweep(a) => phase_sweep(a).map(|_| true),
        Command::IprSweep(a) => ipr_sweep(a).map(|_| true),
        Command::Validate(a) => validate(a),
    }
}
