//! Stored energy, average charging power and the maximum-power search.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::hilbert::{initial_state, SpaceTag, StateVector};
use crate::model::{dicke_entries, ModelParams};

/// Tolerance on the imaginary part of a Hermitian expectation value.
const IMAG_TOL: f64 = 1e-12;

/// Default number of grid points on `(0, T_max]`.
pub const DEFAULT_STEPS: usize = 2000;

/// Battery energy `ħω_a (⟨J_z⟩ + N/2)`, zero when every TLS is in its
/// ground state.
pub fn stored_energy(psi: &StateVector, n: usize, omega_a: f64) -> Result<f64> {
    let tag = psi.tag();
    match tag {
        SpaceTag::Composite { n: tag_n, .. } if tag_n == n => {}
        other => {
            return Err(Error::invalid("psi", format!("expected a composite state with N = {n}, got {other:?}")))
        }
    }
    // ⟨J_z + N/2⟩ with the diagonal weight m + N/2 = m_index.
    let value: C64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let (k, _) = tag.split_index(i).expect("composite index");
            z.conj() * (k as f64) * z
        })
        .sum();
    if value.im.abs() >= IMAG_TOL {
        return Err(Error::Numerical {
            dim: psi.dim(),
            reason: format!("energy expectation has imaginary part {:e}", value.im),
        });
    }
    Ok(omega_a * value.re)
}

/// Average charging power `E/τ`.
pub fn average_power(energy: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", format!("charging time must be positive, got {tau}")));
    }
    Ok(energy / tau)
}

/// Uniform grid of `steps` points on `(0, t_max]`.
pub fn uniform_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid("tmax", format!("must be positive and finite, got {t_max}")));
    }
    if steps == 0 {
        return Err(Error::invalid("steps", "need at least one grid point"));
    }
    Ok((1..=steps).map(|i| t_max * i as f64 / steps as f64).collect())
}

/// Window adapted to the collective Rabi timescale: `20/(ω_c λ_eff √N)`,
/// falling back to `20/ω_a` without coupling.
pub fn default_t_max(params: &ModelParams) -> f64 {
    let lam = params.effective_coupling();
    if lam > 0.0 {
        20.0 / (params.omega_c * lam * (params.n as f64).sqrt())
    } else {
        20.0 / params.omega_a
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChargeTrace {
    /// Model parameters with the cutoff resolved to the value used.
    pub params: ModelParams,
    pub taus: Vec<f64>,
    pub energy: Vec<f64>,
    pub power: Vec<f64>,
    pub n_ph: Vec<f64>,
    pub jz: Vec<f64>,
    pub parity: Vec<f64>,
    pub norm_err: Vec<f64>,
    /// Probability of the highest retained Fock state.
    pub tail_mass: Vec<f64>,
    /// `|⟨H⟩(τ) − ⟨H⟩(0)|` at every grid time.
    pub energy_drift: Vec<f64>,
    /// Spectral norm of the Hamiltonian block driving the run.
    pub h_norm: f64,
}

impl ChargeTrace {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn max_energy(&self) -> f64 {
        self.energy.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_tail_mass(&self) -> f64 {
        self.tail_mass.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_norm_err(&self) -> f64 {
        self.norm_err.iter().copied().fold(0.0, f64::max)
    }

    /// Parity of the initial state `|m = −N/2⟩ ⊗ |N⟩`, i.e. `(−1)^N`.
    pub fn initial_parity(&self) -> f64 {
        if self.params.n.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Largest deviation of `⟨Π⟩` from its initial value.
    pub fn max_parity_drift(&self) -> f64 {
        let p0 = self.initial_parity();
        self.parity.iter().map(|p| (p - p0).abs()).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.energy_drift.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxPowerPoint {
    pub p_max: f64,
    pub tau_star: f64,
    pub e_at_max: f64,
    pub refined: bool,
    /// Set when the power vanishes everywhere or peaks at the window's end.
    pub degenerate: bool,
}

/// One Hamiltonian, diagonalized once and reused for every charging time.
///
/// Only the parity sector of the initial state is diagonalized: the
/// coupling flips photon and spin parity together, so basis states with
/// `(m + N/2 + n)` of the other parity are never reached.
pub struct ChargeSession {
    params: ModelParams,
    tag: SpaceTag,
    propagator: Propagator,
    psi0: StateVector,
    /// Sparse `H` entries, used for the energy-drift check.
    entries: Vec<(usize, usize, f64)>,
    e0: f64,
}

impl ChargeSession {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let cutoff = params.resolved_cutoff()?;
        let params = params.with_cutoff(cutoff);
        let tag = params.tag()?;
        let psi0 = initial_state(params.n, cutoff)?;
        let entries = dicke_entries(&params)?;

        let start = tag.composite_index(0, params.n).expect("initial index");
        let sector_parity = sector_parity(tag, start);
        let support: Vec<usize> = (0..tag.dim()).filter(|&i| sector_parity(i)).collect();
        let mut position = vec![usize::MAX; tag.dim()];
        for (local, &global) in support.iter().enumerate() {
            position[global] = local;
        }
        let d = support.len();
        let mut block = Array2::<f64>::zeros((d, d));
        for &(i, j, v) in &entries {
            let (li, lj) = (position[i], position[j]);
            match (li == usize::MAX, lj == usize::MAX) {
                (false, false) => block[[li, lj]] += v,
                (true, true) => {}
                _ => {
                    return Err(Error::ContractViolation(
                        "Hamiltonian couples the two parity sectors".into(),
                    ))
                }
            }
        }
        let propagator = Propagator::from_real_symmetric(&block, tag, Some(support))?;
        let e0 = sparse_expectation(&entries, &psi0);
        Ok(Self { params, tag, propagator, psi0, entries, e0 })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    pub fn state_at(&self, tau: f64) -> Result<StateVector> {
        self.propagator.evolve(&self.psi0, tau)
    }

    pub fn energy_at(&self, tau: f64) -> Result<f64> {
        stored_energy(&self.state_at(tau)?, self.params.n, self.params.omega_a)
    }

    fn h_norm(&self) -> f64 {
        self.propagator.eigenvalues().iter().map(|e| e.abs()).fold(0.0, f64::max)
    }

    /// Evolve over `taus` and record every observable.
    pub fn trace(&self, taus: &[f64]) -> Result<ChargeTrace> {
        validate_grid(taus)?;
        let n = self.params.n;
        let half_n = n as f64 / 2.0;
        let (_, cutoff) = match self.tag {
            SpaceTag::Composite { n, cutoff } => (n, cutoff),
            _ => unreachable!(),
        };
        let len = taus.len();
        let mut trace = ChargeTrace {
            params: self.params,
            taus: taus.to_vec(),
            energy: Vec::with_capacity(len),
            power: Vec::with_capacity(len),
            n_ph: Vec::with_capacity(len),
            jz: Vec::with_capacity(len),
            parity: Vec::with_capacity(len),
            norm_err: Vec::with_capacity(len),
            tail_mass: Vec::with_capacity(len),
            energy_drift: Vec::with_capacity(len),
            h_norm: self.h_norm(),
        };
        let mut failure = None;
        self.propagator.evolve_each(&self.psi0, taus, |i, psi| {
            if failure.is_some() {
                return;
            }
            let energy = match stored_energy(&psi, n, self.params.omega_a) {
                Ok(e) => e,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            };
            let (mut excit, mut photons, mut parity, mut norm_sq, mut tail) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (idx, z) in psi.amplitudes().iter().enumerate() {
                let w = z.norm_sqr();
                let (k, p) = self.tag.split_index(idx).expect("composite index");
                excit += w * k as f64;
                photons += w * p as f64;
                parity += if (k + p) % 2 == 0 { w } else { -w };
                norm_sq += w;
                if p == cutoff {
                    tail += w;
                }
            }
            trace.energy.push(energy);
            trace.power.push(energy / taus[i]);
            trace.n_ph.push(photons);
            trace.jz.push(excit - half_n);
            trace.parity.push(parity);
            trace.norm_err.push((norm_sq.sqrt() - 1.0).abs());
            trace.tail_mass.push(tail);
            trace.energy_drift.push((sparse_expectation(&self.entries, &psi) - self.e0).abs());
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(trace),
        }
    }

    /// Grid maximum of `E/τ`, optionally polished by golden-section search
    /// on fresh evolutions inside the bracketing grid interval.
    pub fn find_max_power(&self, trace: &ChargeTrace, refine: bool) -> Result<MaxPowerPoint> {
        let grid = grid_max_power(trace)?;
        if !refine || grid.p_max == 0.0 {
            return Ok(grid);
        }
        let i = trace
            .taus
            .iter()
            .position(|&t| t == grid.tau_star)
            .expect("grid maximum lies on the grid");
        let lo = if i > 0 { trace.taus[i - 1] } else { 0.5 * trace.taus[0] };
        let hi = if i + 1 < trace.len() { trace.taus[i + 1] } else { trace.taus[i] };
        let width_tol = 1e-4 * grid.tau_star;

        let mut best = (grid.p_max, grid.tau_star, grid.e_at_max);
        let mut probe = |tau: f64| -> Result<f64> {
            let e = self.energy_at(tau)?;
            let p = e / tau;
            if p > best.0 {
                best = (p, tau, e);
            }
            Ok(p)
        };

        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = probe(x1)?;
        let mut f2 = probe(x2)?;
        while b - a >= width_tol {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = probe(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = probe(x2)?;
            }
        }
        probe(0.5 * (a + b))?;

        let (_, tau_star, e_at_max) = best;
        Ok(MaxPowerPoint {
            p_max: e_at_max / tau_star,
            tau_star,
            e_at_max,
            refined: true,
            degenerate: grid.degenerate,
        })
    }
}

fn sector_parity(tag: SpaceTag, reference: usize) -> impl Fn(usize) -> bool {
    let parity = move |i: usize| {
        let (k, p) = tag.split_index(i).expect("composite index");
        (k + p) % 2
    };
    let target = parity(reference);
    move |i| parity(i) == target
}

fn sparse_expectation(entries: &[(usize, usize, f64)], psi: &StateVector) -> f64 {
    let amps = psi.amplitudes();
    entries.iter().map(|&(i, j, v)| (amps[i].conj() * amps[j]).re * v).sum()
}

fn validate_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::invalid("taus", "time grid is empty"));
    }
    if !taus.iter().all(|t| *t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("taus", "grid times must be positive and finite"));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("taus", "grid must be strictly increasing"));
    }
    Ok(())
}

/// Arg-max of the stored power column, without refinement.
pub fn grid_max_power(trace: &ChargeTrace) -> Result<MaxPowerPoint> {
    if trace.is_empty() {
        return Err(Error::invalid("trace", "cannot search an empty trace"));
    }
    let mut best = 0usize;
    for (i, &p) in trace.power.iter().enumerate() {
        if p > trace.power[best] {
            best = i;
        }
    }
    let p_max = trace.power[best];
    if p_max <= 0.0 {
        return Ok(MaxPowerPoint {
            p_max: 0.0,
            tau_star: trace.taus[0],
            e_at_max: 0.0,
            refined: false,
            degenerate: true,
        });
    }
    Ok(MaxPowerPoint {
        p_max,
        tau_star: trace.taus[best],
        e_at_max: trace.energy[best],
        refined: false,
        degenerate: best + 1 == trace.len(),
    })
}

/// Build a session for `params`, evolve over `taus`, and return the trace.
pub fn trace_charge(params: &ModelParams, taus: &[f64]) -> Result<ChargeTrace> {
    ChargeSession::new(params)?.trace(taus)
}
