//! Experiment drivers: coupling-policy sweeps with power-law fits, the Fock
//! cutoff convergence study, and the classical-drive separability check.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::diagonalize;
use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceTag, StateVector};
use crate::model::{build_classical_hamiltonian, seed_cutoff, CouplingScaling, Cutoff, ModelParams};
use crate::observables::{default_t_max, uniform_grid, ChargeSession, ChargeTrace, MaxPowerPoint, DEFAULT_STEPS};

/// Default relative tolerance on successive `P_max` values.
pub const DEFAULT_CUTOFF_TOL: f64 = 1e-6;
/// Hard ceiling for the doubling search.
pub const CUTOFF_CAP: usize = 4096;
/// Largest probability allowed in the top Fock state at an accepted cutoff.
pub const TAIL_MASS_TOL: f64 = 1e-8;
/// Largest `N` for which the full `2^N` product space is materialized.
pub const MAX_SEPARABILITY_TLS: usize = 4;

/// Charging-window specification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    /// `None` adapts the window to the collective Rabi timescale.
    pub t_max: Option<f64>,
    pub steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { t_max: None, steps: DEFAULT_STEPS }
    }
}

impl TimeGrid {
    pub fn resolve(&self, params: &ModelParams) -> Result<Vec<f64>> {
        uniform_grid(self.t_max.unwrap_or_else(|| default_t_max(params)), self.steps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProbe {
    pub cutoff: usize,
    /// Grid maximum of `E/τ` at this cutoff.
    pub p_max: f64,
    /// `|P(c) − P(2c)| / P(c)` against the next doubling, once known.
    pub rel_delta: Option<f64>,
    pub tail_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutoffConvergence {
    pub cutoff: usize,
    pub evidence: Vec<CutoffProbe>,
}

fn relative_delta(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

struct Converged {
    result: CutoffConvergence,
    session: ChargeSession,
    trace: ChargeTrace,
}

/// Doubling search from the `2N + 8` seed.
///
/// Writing `d_j` for the relative change in grid `P_max` between cutoffs
/// `c_j` and `c_{j+1} = 2c_j`, cutoff `c_j` is accepted when its top Fock
/// state carries less than [`TAIL_MASS_TOL`] and two consecutive deltas
/// touching it are below `tol`: `d_{j-1}, d_j` for `j ≥ 1`, or `d_0, d_1`
/// for the seed. The smallest such cutoff is returned.
fn converge(params: &ModelParams, taus: &[f64], tol: f64, cap: usize) -> Result<Converged> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "convergence tolerance must be positive"));
    }
    params.validate()?;
    let mut cutoff = seed_cutoff(params.n);
    // Sessions for the last two probes.
    let mut window: Vec<(ChargeSession, ChargeTrace)> = Vec::new();
    let mut evidence: Vec<CutoffProbe> = Vec::new();
    loop {
        if cutoff > cap {
            return Err(Error::NonConvergence {
                cap,
                evidence: evidence.iter().map(|p| (p.cutoff, p.p_max)).collect(),
            });
        }
        let session = ChargeSession::new(&params.with_cutoff(cutoff))?;
        let trace = session.trace(taus)?;
        let p_max = session.find_max_power(&trace, false)?.p_max;
        if let Some(prev) = evidence.last_mut() {
            prev.rel_delta = Some(relative_delta(prev.p_max, p_max));
        }
        evidence.push(CutoffProbe { cutoff, p_max, rel_delta: None, tail_mass: trace.max_tail_mass() });
        window.push((session, trace));
        if window.len() > 2 {
            window.remove(0);
        }

        let small = |j: usize| evidence[j].rel_delta.is_some_and(|d| d < tol);
        let tail_ok = |j: usize| evidence[j].tail_mass < TAIL_MASS_TOL;
        let k = evidence.len() - 1;
        let accepted = if k == 2 && small(0) && small(1) && tail_ok(0) {
            // The seed session has left the window; rebuild it.
            let session = ChargeSession::new(&params.with_cutoff(evidence[0].cutoff))?;
            let trace = session.trace(taus)?;
            Some((session, trace))
        } else if k >= 2 && small(k - 2) && small(k - 1) && tail_ok(k - 1) {
            Some(window.swap_remove(0))
        } else {
            None
        };
        if let Some((session, trace)) = accepted {
            let cutoff = session.params().resolved_cutoff()?;
            return Ok(Converged { result: CutoffConvergence { cutoff, evidence }, session, trace });
        }
        cutoff *= 2;
    }
}

/// Run the cutoff doubling protocol on `taus`.
pub fn converge_cutoff(params: &ModelParams, taus: &[f64], tol: f64) -> Result<CutoffConvergence> {
    converge(params, taus, tol, CUTOFF_CAP).map(|c| c.result)
}

/// Like [`converge_cutoff`] with an explicit ceiling.
pub fn converge_cutoff_capped(params: &ModelParams, taus: &[f64], tol: f64, cap: usize) -> Result<CutoffConvergence> {
    converge(params, taus, tol, cap).map(|c| c.result)
}

/// Least-squares line through `(ln N, ln P_max)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    /// Standard error of the exponent (zero with exactly two points).
    pub exponent_stderr: f64,
    pub points: usize,
}

/// Fit `y = A·x^α`; needs at least three positive points.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<PowerLawFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    let residual = (sse / m).sqrt();
    let exponent_stderr = if lx.len() > 2 { (sse / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(PowerLawFit { exponent, intercept, residual, exponent_stderr, points: lx.len() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub lambda_eff: f64,
    pub cutoff: usize,
    pub p_max: f64,
    pub tau_star: f64,
    pub e_at_max: f64,
    pub degenerate: bool,
    pub convergence: CutoffConvergence,
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub grid: TimeGrid,
    pub refine: bool,
    pub fit_exclude_n1: bool,
    pub tol: f64,
    /// Worker threads for independent rows; results are ordered by `N`.
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { grid: TimeGrid::default(), refine: true, fit_exclude_n1: false, tol: DEFAULT_CUTOFF_TOL, jobs: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub policy: CouplingScaling,
    pub rows: Vec<SweepRow>,
    /// Charge trace at the accepted cutoff, one per row.
    pub traces: Vec<ChargeTrace>,
    pub fit: Option<PowerLawFit>,
    /// False when any row hit a degenerate maximum.
    pub fit_trusted: bool,
}

fn sweep_row(n: usize, base: &ModelParams, policy: CouplingScaling, opts: &SweepOptions) -> Result<(SweepRow, ChargeTrace)> {
    let params = ModelParams { n, scaling: policy, ..*base };
    params.validate()?;
    let taus = opts.grid.resolve(&params)?;
    let (session, trace, convergence) = match base.cutoff {
        Cutoff::Auto => {
            let c = converge(&params, &taus, opts.tol, CUTOFF_CAP)?;
            (c.session, c.trace, c.result)
        }
        Cutoff::Fixed(cutoff) => {
            let session = ChargeSession::new(&params)?;
            let trace = session.trace(&taus)?;
            let probe = CutoffProbe {
                cutoff,
                p_max: session.find_max_power(&trace, false)?.p_max,
                rel_delta: None,
                tail_mass: trace.max_tail_mass(),
            };
            (session, trace, CutoffConvergence { cutoff, evidence: vec![probe] })
        }
    };
    let MaxPowerPoint { p_max, tau_star, e_at_max, degenerate, .. } = session.find_max_power(&trace, opts.refine)?;
    let row = SweepRow {
        n,
        lambda_eff: params.effective_coupling(),
        cutoff: convergence.cutoff,
        p_max,
        tau_star,
        e_at_max,
        degenerate,
        convergence,
    };
    Ok((row, trace))
}

/// Maximum charging power for every `N` in `n_list` under `policy`, plus a
/// log–log fit of `P_max` against `N`.
pub fn run_sweep(n_list: &[usize], base: &ModelParams, policy: CouplingScaling, opts: &SweepOptions) -> Result<SweepResult> {
    if n_list.is_empty() {
        return Err(Error::invalid("n-list", "need at least one TLS count"));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns[0] == 0 {
        return Err(Error::invalid("n-list", "TLS counts must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(SweepRow, ChargeTrace)> =
        pool.install(|| ns.par_iter().map(|&n| sweep_row(n, base, policy, opts)).collect::<Result<Vec<_>>>())?;
    let (rows, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let fit_rows: Vec<&SweepRow> = rows.iter().filter(|r| !(opts.fit_exclude_n1 && r.n == 1)).collect();
    let xs: Vec<f64> = fit_rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = fit_rows.iter().map(|r| r.p_max).collect();
    let fit = fit_power_law(&xs, &ys);
    let fit_trusted = fit.is_some() && rows.iter().all(|r| !r.degenerate);
    Ok(SweepResult { policy, rows, traces, fit, fit_trusted })
}

/// Closed-form single-TLS energy under `½ω_a σᶻ + (Fd) σˣ` from the ground
/// state: `ω_a (Fd)²/Ω² · sin²(Ω t)` with `Ω = √((Fd)² + (ω_a/2)²)`.
pub fn classical_rabi_energy(omega_a: f64, drive: f64, t: f64) -> f64 {
    let omega_sq = drive * drive + 0.25 * omega_a * omega_a;
    let s = (omega_sq.sqrt() * t).sin();
    omega_a * drive * drive / omega_sq * s * s
}

/// Drive `Fd = 2λ̄ω_c√N`: the field amplitude of an `N`-photon mode with
/// the zero-point normalization of the cavity coupling term.
pub fn default_classical_drive(lambda: f64, omega_c: f64, n: usize) -> f64 {
    2.0 * lambda * omega_c * (n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparabilitySample {
    pub t: f64,
    pub e_single: f64,
    pub e_total: f64,
    pub energy_ratio: f64,
    pub fidelity_deficit: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparabilityReport {
    pub n: usize,
    /// Largest `1 − |⟨ψ_full|ψ_product⟩|` over the samples.
    pub fidelity_deficit: f64,
    /// The sampled `E_total/(N E_single)` furthest from 1.
    pub energy_ratio: f64,
    pub samples: Vec<SeparabilitySample>,
}

/// Ground-state single-TLS evolution through the 2×2 eigendecomposition.
pub fn single_tls_state(omega_a: f64, drive: f64, t: f64) -> Result<StateVector> {
    let h = build_classical_hamiltonian(omega_a, drive)?;
    let psi0 = StateVector::basis(h.tag(), 0)?;
    diagonalize(&h)?.evolve(&psi0, t)
}

fn product_space_hamiltonian(n: usize, single: &Operator) -> Result<Operator> {
    let dim = 1usize << n;
    let h = single.entries();
    let mut full = Array2::<C64>::zeros((dim, dim));
    // Qubit `site` is bit `n − 1 − site` of the basis index (ground = 0).
    for site in 0..n {
        let bit = n - 1 - site;
        for col in 0..dim {
            let b = (col >> bit) & 1;
            for a in 0..2 {
                let v = h[[a, b]];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = (col & !(1 << bit)) | (a << bit);
                full[[row, col]] += v;
            }
        }
    }
    Operator::new_hermitian(full, SpaceTag::Boson { cutoff: dim - 1 })
}

fn product_state(single: &StateVector, n: usize) -> Array1<C64> {
    let mut out = Array1::from(vec![C64::new(1.0, 0.0)]);
    for _ in 0..n {
        let amps = single.amplitudes();
        let mut next = Array1::<C64>::zeros(out.len() * 2);
        for (i, x) in out.iter().enumerate() {
            next[2 * i] = x * amps[0];
            next[2 * i + 1] = x * amps[1];
        }
        out = next;
    }
    out
}

/// Evolve `N ≤ 4` classically driven TLS in the full `2^N` space and compare
/// against the product of independent single-TLS evolutions.
pub fn classical_separability_check(n: usize, omega_a: f64, drive: f64, t_samples: &[f64]) -> Result<SeparabilityReport> {
    if n == 0 {
        return Err(Error::invalid("n", "TLS count must be at least 1"));
    }
    if n > MAX_SEPARABILITY_TLS {
        return Err(Error::invalid(
            "n",
            format!("the full product space is only materialized for N ≤ {MAX_SEPARABILITY_TLS}"),
        ));
    }
    let single_h = build_classical_hamiltonian(omega_a, drive)?;
    let full_h = product_space_hamiltonian(n, &single_h)?;
    let full_prop = diagonalize(&full_h)?;
    let single_prop = diagonalize(&single_h)?;
    let ground_single = StateVector::basis(single_h.tag(), 0)?;
    let ground_full = StateVector::basis(full_h.tag(), 0)?;

    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let psi_full = full_prop.evolve(&ground_full, t)?;
        let psi_single = single_prop.evolve(&ground_single, t)?;
        let psi_prod = product_state(&psi_single, n);
        let overlap: C64 = psi_full.amplitudes().iter().zip(psi_prod.iter()).map(|(a, b)| a.conj() * b).sum();
        let e_total: f64 = psi_full
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, z)| omega_a * z.norm_sqr() * i.count_ones() as f64)
            .sum();
        let e_single = omega_a * psi_single.amplitudes()[1].norm_sqr();
        let energy_ratio = if e_single == 0.0 && e_total == 0.0 { 1.0 } else { e_total / (n as f64 * e_single) };
        samples.push(SeparabilitySample { t, e_single, e_total, energy_ratio, fidelity_deficit: 1.0 - overlap.norm() });
    }
    let fidelity_deficit = samples.iter().map(|s| s.fidelity_deficit).fold(f64::NEG_INFINITY, f64::max);
    let energy_ratio = samples
        .iter()
        .map(|s| s.energy_ratio)
        .fold(1.0f64, |worst, r| if (r - 1.0).abs() > (worst - 1.0).abs() { r } else { worst });
    Ok(SeparabilityReport {
        n,
        fidelity_deficit: if samples.is_empty() { 0.0 } else { fidelity_deficit },
        energy_ratio,
        samples,
    })
}
