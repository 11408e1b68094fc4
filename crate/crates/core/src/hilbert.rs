//! Collective-spin and truncated-boson operators on the symmetric Dicke
//! sector.
//!
//! The composite space is `spin(j = N/2) ⊗ Fock(0..=cutoff)`. Basis ordering
//! is spin index major, Fock index minor, both ascending: the composite index
//! of `|j, m⟩ ⊗ |n⟩` is `(m + N/2) * (cutoff + 1) + n`.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Elementwise tolerance on `A - A†` for Hermitian-flagged operators.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceTag {
    /// Collective spin `j = n/2` of `n` two-level systems.
    Spin { n: usize },
    /// One bosonic mode truncated at `cutoff` quanta.
    Boson { cutoff: usize },
    Composite { n: usize, cutoff: usize },
}

impl SpaceTag {
    pub fn dim(&self) -> usize {
        match *self {
            SpaceTag::Spin { n } => n + 1,
            SpaceTag::Boson { cutoff } => cutoff + 1,
            SpaceTag::Composite { n, cutoff } => (n + 1) * (cutoff + 1),
        }
    }

    /// Composite index of `|m_index⟩ ⊗ |photons⟩`, where `m_index = m + N/2`.
    pub fn composite_index(&self, m_index: usize, photons: usize) -> Option<usize> {
        match *self {
            SpaceTag::Composite { n, cutoff } if m_index <= n && photons <= cutoff => {
                Some(m_index * (cutoff + 1) + photons)
            }
            _ => None,
        }
    }

    /// Inverse of [`SpaceTag::composite_index`]: `(m_index, photons)`.
    pub fn split_index(&self, index: usize) -> Option<(usize, usize)> {
        match *self {
            SpaceTag::Composite { cutoff, .. } if index < self.dim() => {
                Some((index / (cutoff + 1), index % (cutoff + 1)))
            }
            _ => None,
        }
    }
}

/// Dense square complex matrix tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    entries: Array2<C64>,
    tag: SpaceTag,
    hermitian: bool,
}

impl Operator {
    pub fn new(entries: Array2<C64>, tag: SpaceTag) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols || rows != tag.dim() {
            return Err(Error::ContractViolation(format!(
                "operator of shape {rows}x{cols} does not match {tag:?} (dim {})",
                tag.dim()
            )));
        }
        Ok(Self { entries, tag, hermitian: false })
    }

    /// Like [`Operator::new`] but flags the result Hermitian after checking
    /// `max|A - A†| < HERMITIAN_TOL`.
    pub fn new_hermitian(entries: Array2<C64>, tag: SpaceTag) -> Result<Self> {
        let mut op = Self::new(entries, tag)?;
        let dev = op.hermitian_deviation();
        if dev >= HERMITIAN_TOL {
            return Err(Error::ContractViolation(format!(
                "operator flagged Hermitian deviates by {dev:e}"
            )));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(tag: SpaceTag) -> Self {
        let d = tag.dim();
        Self { entries: Array2::eye(d).mapv(|x: f64| C64::new(x, 0.0)), tag, hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let a = &self.entries;
        let d = a.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.t().mapv(|z| z.conj()),
            tag: self.tag,
            hermitian: self.hermitian,
        }
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    pub fn apply(&self, psi: ArrayView1<C64>) -> Array1<C64> {
        self.entries.dot(&psi)
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> C64 {
        let a_psi = self.apply(psi.amplitudes().view());
        psi.amplitudes().iter().zip(a_psi.iter()).map(|(c, x)| c.conj() * x).sum()
    }

    /// Product `self · other`; the Hermitian flag is dropped.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.tag != other.tag {
            return Err(Error::UnsupportedTag(format!(
                "product of {:?} and {:?}",
                self.tag, other.tag
            )));
        }
        Operator::new(self.entries.dot(&other.entries), self.tag)
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        Operator::new(ab.entries - ba.entries, self.tag)
    }
}

/// Normalized complex state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<C64>,
    tag: SpaceTag,
}

/// Norm tolerance enforced at construction.
pub const NORM_TOL: f64 = 1e-12;

impl StateVector {
    pub fn new(amplitudes: Array1<C64>, tag: SpaceTag) -> Result<Self> {
        if amplitudes.len() != tag.dim() {
            return Err(Error::ContractViolation(format!(
                "state of length {} does not match {tag:?}",
                amplitudes.len()
            )));
        }
        let norm = l2_norm(amplitudes.view());
        if (norm - 1.0).abs() >= NORM_TOL {
            return Err(Error::ContractViolation(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, tag })
    }

    /// Wraps evolved amplitudes without re-checking the norm; callers
    /// report norm drift separately.
    pub(crate) fn from_evolved(amplitudes: Array1<C64>, tag: SpaceTag) -> Self {
        Self { amplitudes, tag }
    }

    /// Normalizes `amplitudes` before wrapping.
    pub fn normalized(amplitudes: Array1<C64>, tag: SpaceTag) -> Result<Self> {
        let norm = l2_norm(amplitudes.view());
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("amplitudes", "cannot normalize a zero or non-finite vector"));
        }
        Self::new(amplitudes.mapv(|z| z / norm), tag)
    }

    pub fn basis(tag: SpaceTag, index: usize) -> Result<Self> {
        if index >= tag.dim() {
            return Err(Error::invalid("index", format!("{index} outside dimension {}", tag.dim())));
        }
        let mut amps = Array1::zeros(tag.dim());
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: amps, tag })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(self.amplitudes.view())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|`, the phase-invariant overlap used for state comparison.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }
}

pub(crate) fn l2_norm(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn require_tls_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "TLS count must be at least 1"));
    }
    Ok(())
}

/// Collective `J_z` for `n` two-level systems: `diag(-n/2, ..., n/2)`.
pub fn build_jz(n: usize) -> Result<Operator> {
    require_tls_count(n)?;
    let j = n as f64 / 2.0;
    let mut entries = Array2::zeros((n + 1, n + 1));
    for k in 0..=n {
        entries[[k, k]] = C64::new(k as f64 - j, 0.0);
    }
    Ok(Operator { entries, tag: SpaceTag::Spin { n }, hermitian: true })
}

/// Ladder coefficient `⟨j, m+1|J₊|j, m⟩ = √(j(j+1) − m(m+1))`.
pub fn raising_coefficient(n: usize, m_index: usize) -> f64 {
    let j = n as f64 / 2.0;
    let m = m_index as f64 - j;
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// Collective `J_x = (J₊ + J₋)/2`, real symmetric tridiagonal.
pub fn build_jx(n: usize) -> Result<Operator> {
    require_tls_count(n)?;
    let mut entries = Array2::zeros((n + 1, n + 1));
    for k in 0..n {
        let c = 0.5 * raising_coefficient(n, k);
        entries[[k + 1, k]] = C64::new(c, 0.0);
        entries[[k, k + 1]] = C64::new(c, 0.0);
    }
    Ok(Operator { entries, tag: SpaceTag::Spin { n }, hermitian: true })
}

/// Collective `J_y = (J₊ − J₋)/(2i)`.
pub fn build_jy(n: usize) -> Result<Operator> {
    require_tls_count(n)?;
    let mut entries = Array2::zeros((n + 1, n + 1));
    for k in 0..n {
        let c = 0.5 * raising_coefficient(n, k);
        entries[[k + 1, k]] = C64::new(0.0, -c);
        entries[[k, k + 1]] = C64::new(0.0, c);
    }
    Ok(Operator { entries, tag: SpaceTag::Spin { n }, hermitian: true })
}

/// Truncated bosonic ladder `(a, a†, a†a)` on `cutoff + 1` Fock states.
#[derive(Clone, Debug)]
pub struct BosonOperators {
    pub a: Operator,
    pub adag: Operator,
    pub n: Operator,
}

pub fn build_boson(cutoff: usize) -> Result<BosonOperators> {
    if cutoff == 0 {
        return Err(Error::invalid("cutoff", "Fock cutoff must be at least 1"));
    }
    let tag = SpaceTag::Boson { cutoff };
    let d = cutoff + 1;
    let mut a = Array2::zeros((d, d));
    let mut num = Array2::zeros((d, d));
    for k in 1..d {
        a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    for k in 0..d {
        num[[k, k]] = C64::new(k as f64, 0.0);
    }
    let a = Operator { entries: a, tag, hermitian: false };
    let adag = a.adjoint();
    Ok(BosonOperators { a, adag, n: Operator { entries: num, tag, hermitian: true } })
}

/// Kronecker product `spin ⊗ boson`; every other pairing is refused.
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let tag = match (a.tag, b.tag) {
        (SpaceTag::Spin { n }, SpaceTag::Boson { cutoff }) => SpaceTag::Composite { n, cutoff },
        (ta, tb) => return Err(Error::UnsupportedTag(format!("{ta:?} ⊗ {tb:?}"))),
    };
    let (da, db) = (a.dim(), b.dim());
    let mut entries = Array2::zeros((da * db, da * db));
    for ((i, j), &x) in a.entries.indexed_iter() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        for ((k, l), &y) in b.entries.indexed_iter() {
            entries[[i * db + k, j * db + l]] = x * y;
        }
    }
    Ok(Operator { entries, tag, hermitian: a.hermitian && b.hermitian })
}

/// `|j = N/2, m = −N/2⟩ ⊗ |n = N⟩`: all TLS in the ground state with `N`
/// photons in the cavity.
pub fn initial_state(n: usize, cutoff: usize) -> Result<StateVector> {
    require_tls_count(n)?;
    if cutoff < n {
        return Err(Error::invalid(
            "cutoff",
            format!("cutoff {cutoff} cannot hold the initial {n} photons"),
        ));
    }
    let tag = SpaceTag::Composite { n, cutoff };
    let index = tag.composite_index(0, n).expect("index within composite space");
    StateVector::basis(tag, index)
}
