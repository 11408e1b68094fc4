//! Dicke quantum-battery Hamiltonian and the coupling/mode-volume relations.
//!
//! `H = ω_c a†a + ω_a J_z + 2 ω_c λ J_x (a + a†)` with `ħ = 1`. The coupling
//! `λ` is proportional to the zero-point field of the cavity, which scales as
//! `1/√V` with the mode volume `V`.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{raising_coefficient, Operator, SpaceTag};

/// How the TLS–photon coupling depends on the number of TLS sharing a cavity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CouplingScaling {
    /// `λ_eff = λ̄` for every `N`: the cavity volume is held fixed while
    /// `N` grows, so the field of `N` photons grows as `√N`.
    Constant,
    /// `λ_eff = λ̄/√N`: the Dicke cavity has `N` times the Rabi volume.
    InverseSqrtN,
}

impl CouplingScaling {
    pub fn as_str(&self) -> &'static str {
        match self {
            CouplingScaling::Constant => "constant",
            CouplingScaling::InverseSqrtN => "invsqrt",
        }
    }
}

impl fmt::Display for CouplingScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CouplingScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(CouplingScaling::Constant),
            "invsqrt" | "inverse_sqrt_n" => Ok(CouplingScaling::InverseSqrtN),
            other => Err(Error::invalid("scaling", format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cutoff {
    /// Seed `2N + 8`, refined by the convergence protocol.
    Auto,
    Fixed(usize),
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Auto => f.write_str("auto"),
            Cutoff::Fixed(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Cutoff::Auto);
        }
        s.parse::<usize>()
            .map(Cutoff::Fixed)
            .map_err(|_| Error::invalid("cutoff", format!("expected integer or `auto`, got `{s}`")))
    }
}

/// Seed cutoff for the automatic convergence search.
pub fn seed_cutoff(n: usize) -> usize {
    2 * n + 8
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub omega_a: f64,
    pub omega_c: f64,
    pub lambda_base: f64,
    pub scaling: CouplingScaling,
    pub cutoff: Cutoff,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            n: 1,
            omega_a: 1.0,
            omega_c: 1.0,
            lambda_base: 0.5,
            scaling: CouplingScaling::Constant,
            cutoff: Cutoff::Auto,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "TLS count must be at least 1"));
        }
        if !(self.omega_a > 0.0 && self.omega_a.is_finite()) {
            return Err(Error::invalid("omega-a", "must be positive and finite"));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::invalid("omega-c", "must be positive and finite"));
        }
        if !(self.lambda_base >= 0.0 && self.lambda_base.is_finite()) {
            return Err(Error::invalid("coupling", "must be non-negative and finite"));
        }
        self.resolved_cutoff().map(|_| ())
    }

    pub fn resolved_cutoff(&self) -> Result<usize> {
        let c = match self.cutoff {
            Cutoff::Auto => seed_cutoff(self.n),
            Cutoff::Fixed(c) => c,
        };
        if c < self.n {
            return Err(Error::invalid(
                "cutoff",
                format!("cutoff {c} cannot hold the initial {} photons", self.n),
            ));
        }
        Ok(c)
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = Cutoff::Fixed(cutoff);
        self
    }

    pub fn tag(&self) -> Result<SpaceTag> {
        Ok(SpaceTag::Composite { n: self.n, cutoff: self.resolved_cutoff()? })
    }

    /// The coupling actually entering the Hamiltonian.
    pub fn effective_coupling(&self) -> f64 {
        effective_coupling(self)
    }
}

pub fn effective_coupling(params: &ModelParams) -> f64 {
    match params.scaling {
        CouplingScaling::Constant => params.lambda_base,
        CouplingScaling::InverseSqrtN => params.lambda_base * (1.0 / (params.n as f64).sqrt()),
    }
}

/// Reference cavity of a single-TLS (Rabi) battery.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityGeometry {
    pub v_rabi: f64,
    pub f_zpf_rabi: f64,
}

impl CavityGeometry {
    pub fn new(v_rabi: f64, f_zpf_rabi: f64) -> Result<Self> {
        if !(v_rabi > 0.0) {
            return Err(Error::invalid("v_rabi", "reference mode volume must be positive"));
        }
        if !(f_zpf_rabi > 0.0) {
            return Err(Error::invalid("f_zpf_rabi", "reference zero-point field must be positive"));
        }
        Ok(Self { v_rabi, f_zpf_rabi })
    }

    /// Zero-point field of a cavity with `volume_ratio · v_rabi` mode volume.
    pub fn zero_point_field(&self, volume_ratio: f64) -> Result<f64> {
        Ok(self.f_zpf_rabi * coupling_from_volume(self, volume_ratio)?)
    }
}

/// Coupling rescale factor `1/√(V/V_rabi)`.
pub fn coupling_from_volume(_geom: &CavityGeometry, volume_ratio: f64) -> Result<f64> {
    if !(volume_ratio > 0.0) || !volume_ratio.is_finite() {
        return Err(Error::invalid("volume_ratio", "must be positive and finite"));
    }
    Ok(1.0 / volume_ratio.sqrt())
}

/// Field of an `photons`-quanta Fock state relative to the zero-point field.
pub fn field_enhancement(photons: usize) -> f64 {
    (photons as f64).sqrt()
}

/// Nonzero entries `(row, col, value)` of the Dicke Hamiltonian in the
/// composite basis. Each off-diagonal pair appears in both orientations.
pub fn dicke_entries(params: &ModelParams) -> Result<Vec<(usize, usize, f64)>> {
    params.validate()?;
    let tag = params.tag()?;
    let (n, cutoff) = match tag {
        SpaceTag::Composite { n, cutoff } => (n, cutoff),
        _ => unreachable!(),
    };
    let lambda = params.effective_coupling();
    let g = 2.0 * params.omega_c * lambda;
    let half_n = n as f64 / 2.0;
    let idx = |k: usize, p: usize| tag.composite_index(k, p).expect("index in range");

    let mut out = Vec::new();
    for k in 0..=n {
        for p in 0..=cutoff {
            let diag = params.omega_c * p as f64 + params.omega_a * (k as f64 - half_n);
            out.push((idx(k, p), idx(k, p), diag));
        }
    }
    if g != 0.0 {
        for k in 0..n {
            // J_x[k+1, k] = r_k / 2
            let jx = 0.5 * raising_coefficient(n, k);
            for p in 0..=cutoff {
                let from = idx(k, p);
                if p < cutoff {
                    let v = g * jx * ((p + 1) as f64).sqrt();
                    let to = idx(k + 1, p + 1);
                    out.push((to, from, v));
                    out.push((from, to, v));
                }
                if p > 0 {
                    let v = g * jx * (p as f64).sqrt();
                    let to = idx(k + 1, p - 1);
                    out.push((to, from, v));
                    out.push((from, to, v));
                }
            }
        }
    }
    Ok(out)
}

/// Dense Dicke Hamiltonian on the composite space.
pub fn build_dicke_hamiltonian(params: &ModelParams) -> Result<Operator> {
    let tag = params.tag()?;
    let d = tag.dim();
    let mut h = Array2::<C64>::zeros((d, d));
    for (i, j, v) in dicke_entries(params)? {
        h[[i, j]] += C64::new(v, 0.0);
    }
    Operator::new_hermitian(h, tag)
}

/// Single-TLS Hamiltonian under a classical field: `½ω_a σᶻ + (F d) σˣ`,
/// basis ordered ground then excited. The `N`-TLS Hamiltonian is the sum of
/// `N` commuting copies of this block.
pub fn build_classical_hamiltonian(omega_a: f64, drive: f64) -> Result<Operator> {
    if !(omega_a > 0.0 && omega_a.is_finite()) {
        return Err(Error::invalid("omega-a", "must be positive and finite"));
    }
    if !drive.is_finite() {
        return Err(Error::invalid("drive", "must be finite"));
    }
    let mut h = Array2::<C64>::zeros((2, 2));
    h[[0, 0]] = C64::new(-0.5 * omega_a, 0.0);
    h[[1, 1]] = C64::new(0.5 * omega_a, 0.0);
    h[[0, 1]] = C64::new(drive, 0.0);
    h[[1, 0]] = C64::new(drive, 0.0);
    Operator::new_hermitian(h, SpaceTag::Spin { n: 1 })
}

/// Parity `Π = exp{iπ(n_ph + J_z + N/2)} = (−1)^(n_ph + m + N/2)` per basis
/// state.
pub fn parity_diagonal(tag: SpaceTag) -> Vec<f64> {
    (0..tag.dim())
        .map(|i| {
            let (k, p) = tag.split_index(i).expect("composite tag");
            if (k + p) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}
