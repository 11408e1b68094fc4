//! CSV serialization. Floats use 17 significant digits so every value
//! parses back to the same `f64`; exact zeros are written as `0`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::observables::ChargeTrace;
use crate::protocols::{CutoffConvergence, PowerLawFit, SeparabilityReport, SweepResult};

use super::config::RunConfig;

pub const TRACE_HEADER: &str = "tau,E,P,n_ph,jz,parity,norm_err";
pub const SWEEP_HEADER: &str = "N,lambda_eff,cutoff,P_max,tau_star,E_at_max";
pub const CLASSICAL_HEADER: &str = "t,E_single,E_total,energy_ratio,fidelity_deficit,E_closed_form";
pub const CONVERGE_HEADER: &str = "cutoff,P_max,rel_delta,tail_mass";

pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Comment block opening every output file: a title, the resolved
/// experiment configuration as `key = value`, then `key: value` results.
pub fn preamble(title: &str, cfg: &RunConfig, results: &[(&str, String)]) -> Vec<String> {
    let mut lines = vec![title.to_string()];
    lines.extend(cfg.experiment().to_lines());
    lines.extend(results.iter().map(|(k, v)| format!("{k}: {v}")));
    lines
}

fn render(preamble: &[String], header: &str, rows: impl Iterator<Item = String>, footer: &[String]) -> String {
    let mut out = String::new();
    for line in preamble {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    for line in footer {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_float(v)).collect::<Vec<_>>().join(",")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// A charge trace as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceTable {
    /// Comment lines without their `# ` prefix.
    pub preamble: Vec<String>,
    pub rows: Vec<[f64; 7]>,
}

impl TraceTable {
    pub fn from_trace(trace: &ChargeTrace, preamble: Vec<String>) -> Self {
        let rows = (0..trace.len())
            .map(|i| {
                [
                    trace.taus[i],
                    trace.energy[i],
                    trace.power[i],
                    trace.n_ph[i],
                    trace.jz[i],
                    trace.parity[i],
                    trace.norm_err[i],
                ]
            })
            .collect();
        Self { preamble, rows }
    }

    pub fn render(&self) -> String {
        render(&self.preamble, TRACE_HEADER, self.rows.iter().map(|r| join(r)), &[])
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Usage(format!("malformed trace CSV: {msg}"));
        let mut preamble = Vec::new();
        let mut lines = text.lines();
        let header = loop {
            match lines.next() {
                Some(line) => match line.strip_prefix('#') {
                    Some(body) => preamble.push(body.strip_prefix(' ').unwrap_or(body).to_string()),
                    None => break line,
                },
                None => return Err(bad("missing column header".into())),
            }
        };
        if header != TRACE_HEADER {
            return Err(bad(format!("unexpected header `{header}`")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut row = [0.0; 7];
            let mut fields = line.split(',');
            for slot in row.iter_mut() {
                let field = fields.next().ok_or_else(|| bad(format!("row {} is short", i + 1)))?;
                *slot = field.parse().map_err(|_| bad(format!("row {}: `{field}` is not a number", i + 1)))?;
            }
            if fields.next().is_some() {
                return Err(bad(format!("row {} is long", i + 1)));
            }
            rows.push(row);
        }
        Ok(Self { preamble, rows })
    }
}

pub fn write_trace_csv(trace: &ChargeTrace, preamble: Vec<String>, path: &Path) -> Result<()> {
    write_text(path, &TraceTable::from_trace(trace, preamble).render())
}

pub fn read_trace_csv(path: &Path) -> Result<TraceTable> {
    TraceTable::parse(&read_text(path)?)
}

pub fn fit_line(fit: &PowerLawFit, trusted: bool) -> String {
    format!(
        "fit: exponent={} intercept={} residual={} stderr={} points={} trusted={}",
        fmt_float(fit.exponent),
        fmt_float(fit.intercept),
        fmt_float(fit.residual),
        fmt_float(fit.exponent_stderr),
        fit.points,
        trusted
    )
}

pub fn render_sweep(result: &SweepResult, preamble: &[String]) -> String {
    let rows = result.rows.iter().map(|r| {
        format!(
            "{},{},{},{}",
            r.n,
            fmt_float(r.lambda_eff),
            r.cutoff,
            join(&[r.p_max, r.tau_star, r.e_at_max])
        )
    });
    let footer: Vec<String> = result.fit.iter().map(|f| fit_line(f, result.fit_trusted)).collect();
    render(preamble, SWEEP_HEADER, rows, &footer)
}

pub fn render_classical(report: &SeparabilityReport, closed_form: &[f64], preamble: &[String]) -> String {
    let rows = report.samples.iter().zip(closed_form).map(|(s, &e)| {
        join(&[s.t, s.e_single, s.e_total, s.energy_ratio, s.fidelity_deficit, e])
    });
    render(preamble, CLASSICAL_HEADER, rows, &[])
}

pub fn render_convergence(conv: &CutoffConvergence, preamble: &[String]) -> String {
    let rows = conv.evidence.iter().map(|p| {
        format!(
            "{},{},{},{}",
            p.cutoff,
            fmt_float(p.p_max),
            p.rel_delta.map(fmt_float).unwrap_or_default(),
            fmt_float(p.tail_mass)
        )
    });
    render(preamble, CONVERGE_HEADER, rows, &[])
}
