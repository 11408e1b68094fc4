//! Run configuration: defaults, flat `key = value` files, and flag overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{CouplingScaling, Cutoff, ModelParams};
use crate::protocols::{default_classical_drive, SweepOptions, TimeGrid, DEFAULT_CUTOFF_TOL};
use crate::observables::DEFAULT_STEPS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Charge,
    Sweep,
    Classical,
    Converge,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Charge => "charge",
            Command::Sweep => "sweep",
            Command::Classical => "classical",
            Command::Converge => "converge",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charge" => Ok(Command::Charge),
            "sweep" => Ok(Command::Sweep),
            "classical" => Ok(Command::Classical),
            "converge" => Ok(Command::Converge),
            other => Err(Error::Usage(format!("unknown command `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub coupling: f64,
    pub scaling: CouplingScaling,
    pub omega_a: f64,
    pub omega_c: f64,
    pub cutoff: Cutoff,
    /// `None` selects the adaptive window.
    pub tmax: Option<f64>,
    pub steps: usize,
    pub refine: bool,
    pub fit_exclude_n1: bool,
    /// Classical drive `F·d`; `None` derives it from the coupling.
    pub drive: Option<f64>,
    pub tol: f64,
    pub seed: u64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            n: 1,
            n_list: vec![2, 4, 6, 8, 10, 12],
            coupling: 0.5,
            scaling: CouplingScaling::Constant,
            omega_a: 1.0,
            omega_c: 1.0,
            cutoff: Cutoff::Auto,
            tmax: None,
            steps: DEFAULT_STEPS,
            refine: false,
            fit_exclude_n1: false,
            drive: None,
            tol: DEFAULT_CUTOFF_TOL,
            seed: 0,
            jobs: 1,
            out: None,
            svg: None,
        }
    }

    /// Set one field from its textual `key = value` form.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "command" => {
                let cmd: Command = value.parse()?;
                if cmd != self.command {
                    return Err(Error::Usage(format!(
                        "conflicting command: `{cmd}` in configuration but `{}` requested",
                        self.command
                    )));
                }
            }
            "n" => self.n = parse_num(key, value)?,
            "n-list" => {
                self.n_list = value
                    .split(',')
                    .map(|tok| parse_num::<usize>(key, tok.trim()))
                    .collect::<Result<Vec<_>>>()?
            }
            "coupling" => self.coupling = parse_num(key, value)?,
            "scaling" => {
                self.scaling = value
                    .parse()
                    .map_err(|_| Error::Usage(format!("invalid value for `scaling`: `{value}` (expected constant or invsqrt)")))?
            }
            "omega-a" => self.omega_a = parse_num(key, value)?,
            "omega-c" => self.omega_c = parse_num(key, value)?,
            "cutoff" => {
                self.cutoff = value
                    .parse()
                    .map_err(|_| Error::Usage(format!("invalid value for `cutoff`: `{value}` (expected integer or auto)")))?
            }
            "tmax" => self.tmax = if value == "auto" { None } else { Some(parse_num(key, value)?) },
            "steps" => self.steps = parse_num(key, value)?,
            "refine" => self.refine = parse_bool(key, value)?,
            "fit-exclude-n1" => self.fit_exclude_n1 = parse_bool(key, value)?,
            "drive" => self.drive = if value == "auto" { None } else { Some(parse_num(key, value)?) },
            "tol" => self.tol = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "jobs" => self.jobs = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "svg" => self.svg = Some(PathBuf::from(value)),
            other => return Err(Error::Usage(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Apply every `key = value` line of a configuration document. Blank
    /// lines and `#` comments are skipped.
    pub fn apply_document(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("expected `key = value`, got `{line}`")))?;
            self.apply(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Usage(format!("invalid value for `{key}`: {why}")));
        if self.n == 0 {
            return bad("n", "must be at least 1");
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n-list", "entries must be at least 1");
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return bad("coupling", "must be non-negative");
        }
        if !(self.omega_a > 0.0 && self.omega_a.is_finite()) {
            return bad("omega-a", "must be positive");
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return bad("omega-c", "must be positive");
        }
        if let Some(t) = self.tmax {
            if !(t > 0.0 && t.is_finite()) {
                return bad("tmax", "must be positive");
            }
        }
        if self.steps == 0 {
            return bad("steps", "must be at least 1");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol", "must be positive");
        }
        if self.jobs == 0 {
            return bad("jobs", "must be at least 1");
        }
        if let Some(d) = self.drive {
            if !d.is_finite() {
                return bad("drive", "must be finite");
            }
        }
        if let Cutoff::Fixed(c) = self.cutoff {
            let largest = match self.command {
                Command::Sweep => self.n_list.iter().copied().max().unwrap_or(0),
                _ => self.n,
            };
            if c < largest || c == 0 {
                return bad("cutoff", "must hold the initial photon number N");
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            omega_a: self.omega_a,
            omega_c: self.omega_c,
            lambda_base: self.coupling,
            scaling: self.scaling,
            cutoff: self.cutoff,
        }
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid { t_max: self.tmax, steps: self.steps }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            grid: self.time_grid(),
            refine: self.refine,
            fit_exclude_n1: self.fit_exclude_n1,
            tol: self.tol,
            jobs: self.jobs,
        }
    }

    pub fn classical_drive(&self) -> f64 {
        self.drive.unwrap_or_else(|| default_classical_drive(self.coupling, self.omega_c, self.n))
    }

    /// The configuration with execution-only settings (worker count and
    /// output locations) reset; this is what output headers record.
    pub fn experiment(&self) -> RunConfig {
        RunConfig { jobs: 1, out: None, svg: None, ..self.clone() }
    }

    /// `key = value` lines describing [`RunConfig::experiment`].
    pub fn to_lines(&self) -> Vec<String> {
        let list = self.n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), fmt_exact);
        vec![
            format!("command = {}", self.command),
            format!("n = {}", self.n),
            format!("n-list = {list}"),
            format!("coupling = {}", fmt_exact(self.coupling)),
            format!("scaling = {}", self.scaling),
            format!("omega-a = {}", fmt_exact(self.omega_a)),
            format!("omega-c = {}", fmt_exact(self.omega_c)),
            format!("cutoff = {}", self.cutoff),
            format!("tmax = {}", opt(self.tmax)),
            format!("steps = {}", self.steps),
            format!("refine = {}", self.refine),
            format!("fit-exclude-n1 = {}", self.fit_exclude_n1),
            format!("drive = {}", opt(self.drive)),
            format!("tol = {}", fmt_exact(self.tol)),
            format!("seed = {}", self.seed),
        ]
    }

    /// Recover the experiment configuration from an output file's leading
    /// `# key = value` comment block.
    pub fn from_header(text: &str) -> Result<RunConfig> {
        let mut pairs = Vec::new();
        for line in text.lines() {
            let Some(body) = line.strip_prefix("# ") else {
                if line.starts_with('#') {
                    continue;
                }
                break;
            };
            if let Some((key, value)) = body.split_once(" = ") {
                pairs.push((key.trim().to_string(), value.to_string()));
            }
        }
        let command = pairs
            .iter()
            .find(|(k, _)| k == "command")
            .ok_or_else(|| Error::Usage("header lacks a `command` line".into()))?
            .1
            .parse()?;
        let mut cfg = RunConfig::new(command);
        for (k, v) in &pairs {
            cfg.apply(k, v)?;
        }
        Ok(cfg)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_exact(x: f64) -> String {
    format!("{x:?}")
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("invalid value for `{key}`: `{value}` is not a valid number")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Usage(format!("invalid value for `{key}`: `{value}` is not a boolean"))),
    }
}
