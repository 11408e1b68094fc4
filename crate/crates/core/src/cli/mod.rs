//! Command-line front end: `charge`, `sweep`, `classical` and `converge`.

pub mod config;
pub mod csv;
pub mod svg;

use std::path::{Path, PathBuf};

use clap::Parser;

use crate::error::{Error, Result};
use crate::observables::uniform_grid;
use crate::protocols::{classical_rabi_energy, classical_separability_check, converge_cutoff, run_sweep, SweepResult};

pub use config::{Command, RunConfig};

/// Default classical charging window when `--tmax` is not given.
pub const CLASSICAL_T_MAX: f64 = 20.0;

#[derive(Parser, Debug)]
#[command(name = "dicke-qb", version, about = "Dicke quantum-battery charging simulator")]
struct Args {
    /// charge | sweep | classical | converge
    command: String,
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated TLS counts for `sweep`.
    #[arg(long = "n-list")]
    n_list: Option<String>,
    /// Base coupling before the scaling policy is applied.
    #[arg(long)]
    coupling: Option<String>,
    /// constant | invsqrt
    #[arg(long)]
    scaling: Option<String>,
    #[arg(long = "omega-a")]
    omega_a: Option<String>,
    #[arg(long = "omega-c")]
    omega_c: Option<String>,
    /// Fock cutoff, or `auto` for the doubling protocol.
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Refine the maximum-power time by golden-section search.
    #[arg(long)]
    refine: bool,
    #[arg(long = "fit-exclude-n1")]
    fit_exclude_n1: bool,
    /// Classical drive amplitude `F·d`.
    #[arg(long)]
    drive: Option<String>,
    /// Relative tolerance of the cutoff protocol.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    svg: Option<String>,
    /// `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<String>,
}

/// Resolve a configuration from command-line arguments (program name
/// first). Precedence is flags, then the `--config` file, then defaults.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    let file = match &args.config {
        Some(p) => Some(csv::read_text(Path::new(p))?),
        None => None,
    };
    resolve(args, file.as_deref())
}

fn resolve(args: Args, file: Option<&str>) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(args.command.parse()?);
    if let Some(text) = file {
        cfg.apply_document(text)?;
    }
    let flags = [
        ("n", &args.n),
        ("n-list", &args.n_list),
        ("coupling", &args.coupling),
        ("scaling", &args.scaling),
        ("omega-a", &args.omega_a),
        ("omega-c", &args.omega_c),
        ("cutoff", &args.cutoff),
        ("tmax", &args.tmax),
        ("steps", &args.steps),
        ("drive", &args.drive),
        ("tol", &args.tol),
        ("seed", &args.seed),
        ("jobs", &args.jobs),
        ("out", &args.out),
        ("svg", &args.svg),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.apply(key, v)?;
        }
    }
    if args.refine {
        cfg.refine = true;
    }
    if args.fit_exclude_n1 {
        cfg.fit_exclude_n1 = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Files written and a human-readable summary of one run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub summary: Vec<String>,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Charge => run_charge(cfg),
        Command::Sweep => run_sweep_command(cfg),
        Command::Classical => run_classical(cfg),
        Command::Converge => run_converge(cfg),
    }
}

fn out_path(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn energy_plot(result: &SweepResult, title: &str) -> String {
    let series: Vec<svg::Series<'_>> = result
        .traces
        .iter()
        .map(|t| svg::Series { label: format!("N = {}", t.params.n), xs: &t.taus, ys: &t.energy })
        .collect();
    svg::line_plot(title, "charging time tau", "stored energy E", &series)
}

fn run_charge(cfg: &RunConfig) -> Result<Outcome> {
    let single = RunConfig { n_list: vec![cfg.n], ..cfg.clone() };
    let result = run_sweep(&[cfg.n], &cfg.model_params(), cfg.scaling, &single.sweep_options())?;
    let row = &result.rows[0];
    let trace = &result.traces[0];
    let results = [
        ("cutoff_used", row.cutoff.to_string()),
        ("lambda_eff", csv::fmt_float(row.lambda_eff)),
        ("P_max", csv::fmt_float(row.p_max)),
        ("tau_star", csv::fmt_float(row.tau_star)),
        ("E_at_max", csv::fmt_float(row.e_at_max)),
    ];
    let path = out_path(cfg, "charge.csv");
    csv::write_trace_csv(trace, csv::preamble("dicke-qb charge trace", cfg, &results), &path)?;
    let mut outcome = Outcome { written: vec![path], ..Default::default() };
    if let Some(svg_path) = &cfg.svg {
        csv::write_text(svg_path, &energy_plot(&result, &format!("Stored energy, {} coupling", cfg.scaling)))?;
        outcome.written.push(svg_path.clone());
    }
    outcome.summary.push(format!(
        "N={} cutoff={} P_max={} tau*={} E={}",
        row.n,
        row.cutoff,
        csv::fmt_float(row.p_max),
        csv::fmt_float(row.tau_star),
        csv::fmt_float(row.e_at_max)
    ));
    Ok(outcome)
}

fn run_sweep_command(cfg: &RunConfig) -> Result<Outcome> {
    let result = run_sweep(&cfg.n_list, &cfg.model_params(), cfg.scaling, &cfg.sweep_options())?;
    let preamble = csv::preamble("dicke-qb sweep", cfg, &[("policy", cfg.scaling.to_string())]);
    let path = out_path(cfg, "sweep.csv");
    csv::write_text(&path, &csv::render_sweep(&result, &preamble))?;
    let svg_path = cfg.svg.clone().unwrap_or_else(|| path.with_extension("svg"));
    csv::write_text(&svg_path, &energy_plot(&result, &format!("Stored energy, {} coupling", cfg.scaling)))?;
    let mut summary: Vec<String> = result
        .rows
        .iter()
        .map(|r| format!("N={} cutoff={} P_max={}", r.n, r.cutoff, csv::fmt_float(r.p_max)))
        .collect();
    summary.push(match &result.fit {
        Some(f) => csv::fit_line(f, result.fit_trusted),
        None => "fit: none (fewer than 3 points)".to_string(),
    });
    Ok(Outcome { written: vec![path, svg_path], summary })
}

fn run_classical(cfg: &RunConfig) -> Result<Outcome> {
    let drive = cfg.classical_drive();
    let times = uniform_grid(cfg.tmax.unwrap_or(CLASSICAL_T_MAX), cfg.steps)?;
    let report = classical_separability_check(cfg.n, cfg.omega_a, drive, &times)?;
    let closed: Vec<f64> = times.iter().map(|&t| classical_rabi_energy(cfg.omega_a, drive, t)).collect();
    let results = [
        ("drive", csv::fmt_float(drive)),
        ("max_fidelity_deficit", csv::fmt_float(report.fidelity_deficit)),
        ("worst_energy_ratio", csv::fmt_float(report.energy_ratio)),
    ];
    let path = out_path(cfg, "classical.csv");
    let preamble = csv::preamble("dicke-qb classical drive", cfg, &results);
    csv::write_text(&path, &csv::render_classical(&report, &closed, &preamble))?;
    let summary = vec![format!(
        "N={} drive={} max fidelity deficit={} worst energy ratio={}",
        cfg.n,
        csv::fmt_float(drive),
        csv::fmt_float(report.fidelity_deficit),
        csv::fmt_float(report.energy_ratio)
    )];
    Ok(Outcome { written: vec![path], summary })
}

fn run_converge(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.model_params();
    let taus = cfg.time_grid().resolve(&params)?;
    let conv = converge_cutoff(&params, &taus, cfg.tol)?;
    let path = out_path(cfg, "converge.csv");
    let preamble = csv::preamble("dicke-qb cutoff convergence", cfg, &[("cutoff_used", conv.cutoff.to_string())]);
    csv::write_text(&path, &csv::render_convergence(&conv, &preamble))?;
    let summary = vec![format!("N={} accepted cutoff={} after {} probes", cfg.n, conv.cutoff, conv.evidence.len())];
    Ok(Outcome { written: vec![path], summary })
}

/// Parse, run and report; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let parsed = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = parsed
        .config
        .as_deref()
        .map(|p| csv::read_text(Path::new(p)))
        .transpose()
        .and_then(|file| resolve(parsed, file.as_deref()))
        .and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            for p in &o.written {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
