//! Command-line front end: argument parsing, command dispatch and result
//! files. Exit codes: 0 success, 2 configuration or regime error, 3
//! numerical failure.

use crate::acceptance::{run_suite, AcceptOptions};
use crate::config::{load_config, ScenarioConfig};
use crate::dispersion::speed_report;
use crate::error::{Error, Result};
use crate::output::{
    append_results, fmt_num, read_probes, write_key_values, write_outcome, write_probes,
    write_snapshots, write_speeds, write_wave_profile, ResultRow,
};
use crate::pipeline::{
    classify_series, headline_verdict, prepare_speeds, run_simulation, run_sweep, run_wave,
};
use crate::sim::OutcomeReport;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "shiftwave",
    version,
    about = "Predator-prey dynamics in a shifting habitat"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (for `accept`: directory of acceptance scenarios).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for CSV outputs.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// `section.key=value`, applied after the file is read.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spreading speeds and their minimizing decay rates.
    Speeds(Common),
    /// Forced wave from upper and lower solutions.
    Wave(Common),
    /// Cauchy simulation with moving-frame probes.
    Simulate(Common),
    /// Verdicts per frame band from a probe file.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Probe file; defaults to `<out>/probes.csv`.
        #[arg(long)]
        probes: Option<PathBuf>,
    },
    /// Simulate and classify over a list of climate speeds.
    Sweep(Common),
    /// Run the acceptance suite.
    Accept(Common),
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Caps the worker pool at `SHIFTWAVE_THREADS` when set.
fn configure_threads() {
    if let Some(n) = std::env::var("SHIFTWAVE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Speeds(c) => cmd_speeds(&c),
        Command::Wave(c) => cmd_wave(&c),
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Classify { common, probes } => cmd_classify(&common, probes.as_deref()),
        Command::Sweep(c) => cmd_sweep(&c),
        Command::Accept(c) => cmd_accept(&c),
    }
}

fn load(c: &Common) -> Result<ScenarioConfig> {
    let cfg = load_config(&c.config, &c.overrides)?;
    for note in &cfg.model.notes {
        eprintln!("note: {note}");
    }
    Ok(cfg)
}

fn record(
    c: &Common,
    cfg: &ScenarioConfig,
    command: &str,
    outputs: Vec<(String, String)>,
    start: Instant,
) -> Result<()> {
    append_results(
        &c.out.join("results.csv"),
        &[ResultRow {
            scenario: cfg.scenario.id.clone(),
            command: command.to_string(),
            param_hash: cfg.param_hash(),
            outputs,
            wall_time_s: start.elapsed().as_secs_f64(),
        }],
    )
}

pub fn cmd_speeds(c: &Common) -> Result<i32> {
    let start = Instant::now();
    let cfg = load(c)?;
    let report = speed_report(&cfg.model)?;
    write_speeds(&c.out.join("speeds.csv"), &report)?;
    let mut outputs = Vec::new();
    for (name, v) in report.rows() {
        let shown = v.value().map_or("NA".to_string(), fmt_num);
        match v.reason() {
            Some(r) => println!("{name:<14} NA ({r})"),
            None => println!("{name:<14} {shown}"),
        }
        outputs.push((name.to_string(), shown));
    }
    record(c, &cfg, "speeds", outputs, start)?;
    Ok(0)
}

pub fn cmd_wave(c: &Common) -> Result<i32> {
    let start = Instant::now();
    let cfg = load(c)?;
    let run = run_wave(&cfg)?;
    let mut summary: Vec<(String, String)> = vec![
        (
            "wave_type".into(),
            format!("{:?}", run.wave_type).to_lowercase(),
        ),
        ("sandwich".into(), run.sandwich.kind.to_string()),
        ("supersub_pass".into(), run.supersub.pass.to_string()),
    ];
    for (name, v) in crate::wave::sandwich::INEQUALITY_NAMES
        .iter()
        .zip(run.supersub.slack)
    {
        summary.push((format!("slack_{name}"), fmt_num(v)));
    }
    for (k, v) in run.sandwich.params.entries() {
        summary.push((format!("param_{k}"), fmt_num(v)));
    }
    for sol in &run.solutions {
        let m = sol.method.to_string();
        let file = c.out.join(format!("wave_profile_{m}.csv"));
        write_wave_profile(&file, sol, &run.system)?;
        summary.push((format!("{m}_status"), sol.status.to_string()));
        summary.push((format!("{m}_iterations"), sol.iterations.to_string()));
        summary.push((format!("{m}_residual"), fmt_num(sol.residual)));
        summary.push((format!("{m}_gap"), fmt_num(sol.gap)));
        summary.push((format!("{m}_tail"), sol.tail.to_string()));
        println!(
            "method={m} status={} iterations={} residual={} tail={} sandwich={}",
            sol.status,
            sol.iterations,
            fmt_num(sol.residual),
            sol.tail,
            run.sandwich.kind
        );
    }
    if !run.supersub.pass {
        eprintln!(
            "warning: sandwich inequalities not verified: {:?}",
            run.supersub.slack
        );
    }
    write_key_values(&c.out.join("wave_summary.csv"), &summary)?;
    let ok = run.success();
    summary.push(("success".into(), ok.to_string()));
    record(c, &cfg, "wave", summary, start)?;
    Ok(if ok { 0 } else { 3 })
}

pub fn cmd_simulate(c: &Common) -> Result<i32> {
    let start = Instant::now();
    let cfg = load(c)?;
    let out = run_simulation(&cfg, &cfg.model)?;
    write_probes(&c.out.join("probes.csv"), &out.probes)?;
    if !out.snapshots.is_empty() {
        write_snapshots(&c.out.join("snapshots.csv"), &out.snapshots)?;
    }
    let last = out.probes.times.len() - 1;
    println!(
        "t={} steps={} dt={} sup_u={} sup_v={}",
        fmt_num(out.field.t),
        out.steps,
        fmt_num(out.dt),
        fmt_num(out.probes.sup_u[last]),
        fmt_num(out.probes.sup_v[last])
    );
    let outputs = vec![
        ("steps".into(), out.steps.to_string()),
        ("dt".into(), fmt_num(out.dt)),
        ("sup_u".into(), fmt_num(out.probes.sup_u[last])),
        ("sup_v".into(), fmt_num(out.probes.sup_v[last])),
    ];
    record(c, &cfg, "simulate", outputs, start)?;
    Ok(0)
}

fn print_outcome(report: &OutcomeReport) {
    println!(
        "window from t={} kappa_floor={} target=({}, {})",
        fmt_num(report.window_start),
        fmt_num(report.kappa_floor),
        fmt_num(report.target.0),
        fmt_num(report.target.1)
    );
    for b in &report.bands {
        let expected = b.band.expected.map_or("-".to_string(), |e| e.to_string());
        println!(
            "{:<13} [{:>7.3}, {:>7.3}] {:<18} expected {:<18} u in [{:.4}, {:.4}] v in [{:.4}, {:.4}]",
            b.band.name, b.band.lo, b.band.hi, b.verdict.to_string(), expected, b.u_min, b.u_max, b.v_min, b.v_max
        );
    }
}

pub fn cmd_classify(c: &Common, probes: Option<&Path>) -> Result<i32> {
    let start = Instant::now();
    let cfg = load(c)?;
    let path = probes.map_or_else(|| c.out.join("probes.csv"), Path::to_path_buf);
    let series = read_probes(&path)?;
    let report = classify_series(&cfg, &cfg.model, &series)?;
    write_outcome(&c.out.join("outcome.csv"), &report)?;
    print_outcome(&report);
    let outputs = report
        .bands
        .iter()
        .map(|b| (b.band.name.to_string(), b.verdict.to_string()))
        .collect();
    record(c, &cfg, "classify", outputs, start)?;
    Ok(0)
}

pub fn cmd_sweep(c: &Common) -> Result<i32> {
    let start = Instant::now();
    let cfg = load(c)?;
    let speeds = prepare_speeds(&cfg.sweep_speeds(), |w| eprintln!("warning: {w}"))?;
    let rows = run_sweep(&cfg, &speeds);
    let path = c.out.join("sweep.csv");
    let mut table = vec![vec![
        "s".to_string(),
        "status".into(),
        "verdict".into(),
        "bands".into(),
        "error".into(),
    ]];
    let mut failed = 0;
    let mut outputs = Vec::new();
    for row in &rows {
        let s = fmt_num(row.s);
        match &row.outcome {
            Ok(rep) => {
                let bands: Vec<String> = rep
                    .bands
                    .iter()
                    .map(|b| format!("{}:{}", b.band.name, b.verdict))
                    .collect();
                let headline = headline_verdict(rep).to_string();
                println!("s={s} {headline}");
                outputs.push((s.clone(), headline.clone()));
                table.push(vec![
                    s,
                    "ok".into(),
                    headline,
                    bands.join(";"),
                    String::new(),
                ]);
            }
            Err(e) => {
                failed += 1;
                println!("s={s} failed: {e}");
                outputs.push((s.clone(), "failed".into()));
                table.push(vec![
                    s,
                    "failed".into(),
                    "NA".into(),
                    String::new(),
                    e.to_string(),
                ]);
            }
        }
    }
    crate::output::write_rows(&path, &table)?;
    record(c, &cfg, "sweep", outputs, start)?;
    Ok(if failed > 0 { 3 } else { 0 })
}

pub fn cmd_accept(c: &Common) -> Result<i32> {
    let mut opts = AcceptOptions::default();
    for o in &c.overrides {
        match o.split_once('=') {
            Some(("accept.tol_scale", v)) => {
                opts.tol_scale = v.trim().parse().map_err(|_| {
                    Error::Config(format!("accept.tol_scale: `{v}` is not a number"))
                })?;
            }
            Some(("accept.only", v)) => {
                let ids: std::result::Result<Vec<u32>, _> =
                    v.split(',').map(|x| x.trim().parse::<u32>()).collect();
                opts.only =
                    Some(ids.map_err(|_| Error::Config(format!("accept.only: bad list `{v}`")))?);
            }
            _ => return Err(Error::Config(format!("unknown accept override `{o}`"))),
        }
    }
    let results = run_suite(&c.config, &opts);
    let mut table = vec![vec![
        "criterion".to_string(),
        "check".into(),
        "pass".into(),
        "measured".into(),
        "target".into(),
        "seconds".into(),
    ]];
    let mut all = true;
    for r in &results {
        println!("{}", r.line());
        all &= r.pass;
        table.push(vec![
            r.id.to_string(),
            r.name.clone(),
            r.pass.to_string(),
            r.measured.clone(),
            r.target.clone(),
            format!("{:.2}", r.seconds),
        ]);
    }
    crate::output::write_rows(&c.out.join("accept.csv"), &table)?;
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} checks passed", results.len());
    Ok(if all { 0 } else { 3 })
}
