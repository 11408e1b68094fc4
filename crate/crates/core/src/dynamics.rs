//! Unitary evolution under a time-independent Hamiltonian.
//!
//! Production path: one Hermitian eigendecomposition, then
//! `ψ(t) = V e^{−iEt} V† ψ₀` for every requested time. A classic RK4
//! integrator is kept alongside as an independent cross-check.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceTag, StateVector};

/// Maximum `|H − H†|` accepted by [`diagonalize`].
pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;

/// Times evolved per batched matrix product.
const CHUNK: usize = 64;

/// Eigendecomposition `H = V diag(E) V†`, optionally restricted to an
/// invariant subspace spanned by a subset of basis states.
#[derive(Clone, Debug)]
pub struct Propagator {
    tag: SpaceTag,
    /// Full-space indices of the invariant subspace; `None` means all.
    support: Option<Vec<usize>>,
    eigenvalues: Array1<f64>,
    vecs_re: Array2<f64>,
    /// Imaginary part of the eigenvectors; absent for real-symmetric input.
    vecs_im: Option<Array2<f64>>,
}

/// Diagonalize a Hermitian operator on its full space.
pub fn diagonalize(h: &Operator) -> Result<Propagator> {
    let dev = h.hermitian_deviation();
    if dev >= HERMITIAN_INPUT_TOL {
        return Err(Error::ContractViolation(format!(
            "diagonalize requires a Hermitian operator; |H - H†| = {dev:e}"
        )));
    }
    let d = h.dim();
    if h.is_real() {
        let m = h.entries().mapv(|z| z.re);
        Propagator::from_real_symmetric(&m, h.tag(), None)
    } else {
        let mat = faer::Mat::<C64>::from_fn(d, d, |i, j| h.entries()[[i, j]]);
        let evd = mat
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Numerical { dim: d, reason: format!("eigensolver failed: {e:?}") })?;
        let u = evd.U();
        let eigenvalues = Array1::from_iter(evd.S().column_vector().iter().map(|z| z.re));
        let vecs_re = Array2::from_shape_fn((d, d), |(i, j)| u[(i, j)].re);
        let vecs_im = Array2::from_shape_fn((d, d), |(i, j)| u[(i, j)].im);
        Ok(Propagator { tag: h.tag(), support: None, eigenvalues, vecs_re, vecs_im: Some(vecs_im) })
    }
}

impl Propagator {
    /// Diagonalize a real symmetric block. With `support = Some(indices)` the
    /// block is `H` restricted to those basis states, which the caller
    /// guarantees form an invariant subspace.
    pub fn from_real_symmetric(
        block: &Array2<f64>,
        tag: SpaceTag,
        support: Option<Vec<usize>>,
    ) -> Result<Self> {
        let d = block.nrows();
        if block.ncols() != d {
            return Err(Error::ContractViolation("block must be square".into()));
        }
        let expected = support.as_ref().map_or(tag.dim(), Vec::len);
        if d != expected {
            return Err(Error::ContractViolation(format!(
                "block dimension {d} does not match support size {expected}"
            )));
        }
        let mat = faer::Mat::<f64>::from_fn(d, d, |i, j| block[[i, j]]);
        let evd = mat
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Numerical { dim: d, reason: format!("eigensolver failed: {e:?}") })?;
        let u = evd.U();
        let eigenvalues = Array1::from_iter(evd.S().column_vector().iter().copied());
        let vecs_re = Array2::from_shape_fn((d, d), |(i, j)| u[(i, j)]);
        Ok(Propagator { tag, support, eigenvalues, vecs_re, vecs_im: None })
    }

    /// Dimension of the full space the propagator acts on.
    pub fn dim(&self) -> usize {
        self.tag.dim()
    }

    /// Dimension of the diagonalized block.
    pub fn block_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Eigenvectors as complex columns of the diagonalized block.
    pub fn eigenvectors(&self) -> Array2<C64> {
        match &self.vecs_im {
            None => self.vecs_re.mapv(|x| C64::new(x, 0.0)),
            Some(im) => Array2::from_shape_fn(self.vecs_re.dim(), |ij| C64::new(self.vecs_re[ij], im[ij])),
        }
    }

    /// `max |V†V − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = self.eigenvectors();
        let gram = v.t().mapv(|z| z.conj()).dot(&v);
        gram.indexed_iter()
            .map(|((i, j), z)| (z - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
            .fold(0.0, f64::max)
    }

    /// `max |V diag(E) V† − H_block|` against the block this was built from.
    pub fn reconstruction_error(&self, block: &Array2<C64>) -> f64 {
        let v = self.eigenvectors();
        let mut scaled = v.clone();
        for (mut col, &e) in scaled.axis_iter_mut(Axis(1)).zip(self.eigenvalues.iter()) {
            col.mapv_inplace(|z| z * e);
        }
        let rebuilt = scaled.dot(&v.t().mapv(|z| z.conj()));
        rebuilt.iter().zip(block.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn gather(&self, psi: ArrayView1<C64>) -> Result<Array1<C64>> {
        match &self.support {
            None => Ok(psi.to_owned()),
            Some(idx) => {
                let inside: f64 = idx.iter().map(|&i| psi[i].norm_sqr()).sum();
                let total: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
                if total - inside > 1e-24 {
                    return Err(Error::ContractViolation(
                        "state has weight outside the propagator's invariant subspace".into(),
                    ));
                }
                Ok(Array1::from_iter(idx.iter().map(|&i| psi[i])))
            }
        }
    }

    /// Components `c = V† ψ` in the eigenbasis, as (real, imaginary) parts.
    fn eigen_components(&self, psi: &Array1<C64>) -> (Array1<f64>, Array1<f64>) {
        let pr = psi.mapv(|z| z.re);
        let pi = psi.mapv(|z| z.im);
        let vt = self.vecs_re.t();
        match &self.vecs_im {
            None => (vt.dot(&pr), vt.dot(&pi)),
            Some(vi) => {
                // (Vr − iVi)ᵀ (pr + i pi)
                let vit = vi.t();
                (vt.dot(&pr) + vit.dot(&pi), vt.dot(&pi) - vit.dot(&pr))
            }
        }
    }

    fn check_state(&self, psi0: &StateVector) -> Result<()> {
        if psi0.dim() != self.dim() {
            return Err(Error::invalid(
                "psi0",
                format!("state dimension {} does not match propagator dimension {}", psi0.dim(), self.dim()),
            ));
        }
        Ok(())
    }

    /// `ψ(t)` for a single time; `t = 0` returns `ψ₀` unchanged.
    pub fn evolve(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        let mut out = None;
        self.evolve_each(psi0, &[t], |_, psi| out = Some(psi))?;
        Ok(out.expect("one time requested"))
    }

    /// Evolve `psi0` to every time in `times`, handing each state to `visit`
    /// in order. Times are processed in batches through one matrix product.
    pub fn evolve_each<F>(&self, psi0: &StateVector, times: &[f64], mut visit: F) -> Result<()>
    where
        F: FnMut(usize, StateVector),
    {
        self.check_state(psi0)?;
        if let Some(bad) = times.iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid("t", format!("time must be finite, got {bad}")));
        }
        let local = self.gather(psi0.amplitudes().view())?;
        let (cr, ci) = self.eigen_components(&local);
        let d = self.block_dim();

        for (chunk_no, chunk) in times.chunks(CHUNK).enumerate() {
            let width = chunk.len();
            let mut phi_re = Array2::<f64>::zeros((d, width));
            let mut phi_im = Array2::<f64>::zeros((d, width));
            for (col, &t) in chunk.iter().enumerate() {
                for k in 0..d {
                    let (sin, cos) = (self.eigenvalues[k] * t).sin_cos();
                    // c_k e^{−iE_k t}
                    phi_re[[k, col]] = cr[k] * cos + ci[k] * sin;
                    phi_im[[k, col]] = ci[k] * cos - cr[k] * sin;
                }
            }
            let (psi_re, psi_im) = match &self.vecs_im {
                None => (self.vecs_re.dot(&phi_re), self.vecs_re.dot(&phi_im)),
                Some(vi) => (
                    self.vecs_re.dot(&phi_re) - vi.dot(&phi_im),
                    self.vecs_re.dot(&phi_im) + vi.dot(&phi_re),
                ),
            };
            for (col, &t) in chunk.iter().enumerate() {
                let index = chunk_no * CHUNK + col;
                if t == 0.0 {
                    visit(index, psi0.clone());
                    continue;
                }
                let mut amps = Array1::<C64>::zeros(self.dim());
                let re = psi_re.slice(s![.., col]);
                let im = psi_im.slice(s![.., col]);
                match &self.support {
                    None => {
                        for k in 0..d {
                            amps[k] = C64::new(re[k], im[k]);
                        }
                    }
                    Some(idx) => {
                        for (k, &i) in idx.iter().enumerate() {
                            amps[i] = C64::new(re[k], im[k]);
                        }
                    }
                }
                visit(index, StateVector::from_evolved(amps, self.tag));
            }
        }
        Ok(())
    }
}

/// Free-function form of [`Propagator::evolve`].
pub fn evolve(prop: &Propagator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    prop.evolve(psi0, t)
}

fn apply_minus_i_h(h: &Array2<C64>, psi: &Array1<C64>) -> Array1<C64> {
    let d = psi.len();
    let mut out = Array1::<C64>::zeros(d);
    for i in 0..d {
        let row = h.row(i);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..d {
            acc += row[j] * psi[j];
        }
        out[i] = C64::new(acc.im, -acc.re);
    }
    out
}

/// Classic fourth-order Runge–Kutta integration of `dψ/dt = −iHψ` with
/// `steps` equal steps from 0 to `t`.
pub fn evolve_rk4_oracle(h: &Operator, psi0: &StateVector, t: f64, steps: usize) -> Result<StateVector> {
    if h.dim() != psi0.dim() {
        return Err(Error::invalid("psi0", "state and Hamiltonian dimensions differ"));
    }
    if steps == 0 {
        return Err(Error::invalid("steps", "need at least one step"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t", "time must be finite"));
    }
    let hm = h.entries();
    let dt = t / steps as f64;
    let mut psi = psi0.amplitudes().clone();
    if t != 0.0 {
        for _ in 0..steps {
            let k1 = apply_minus_i_h(hm, &psi);
            let k2 = apply_minus_i_h(hm, &(&psi + &k1.mapv(|z| z * (dt / 2.0))));
            let k3 = apply_minus_i_h(hm, &(&psi + &k2.mapv(|z| z * (dt / 2.0))));
            let k4 = apply_minus_i_h(hm, &(&psi + &k3.mapv(|z| z * dt)));
            psi = psi + (k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (dt / 6.0));
        }
    }
    Ok(StateVector::from_evolved(psi, psi0.tag()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_dicke_hamiltonian, parity_diagonal, CouplingScaling, Cutoff, ModelParams};
    use crate::hilbert::initial_state;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_hermitian(d: usize, seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Array2::<C64>::zeros((d, d));
        for i in 0..d {
            m[[i, i]] = c(rng.gen_range(-1.0..1.0));
            for j in 0..i {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[[i, j]] = z;
                m[[j, i]] = z.conj();
            }
        }
        Operator::new_hermitian(m, SpaceTag::Boson { cutoff: d - 1 }).unwrap()
    }

    fn random_state(tag: SpaceTag, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = Array1::from_shape_fn(tag.dim(), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        StateVector::normalized(amps, tag).unwrap()
    }

    #[test]
    fn diagonal_input() {
        let h = Operator::new_hermitian(
            array![[c(1.0), c(0.0), c(0.0)], [c(0.0), c(2.0), c(0.0)], [c(0.0), c(0.0), c(3.0)]],
            SpaceTag::Boson { cutoff: 2 },
        )
        .unwrap();
        let p = diagonalize(&h).unwrap();
        assert_eq!(p.eigenvalues().to_vec(), vec![1.0, 2.0, 3.0]);
        let v = p.eigenvectors();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(v[[i, j]].norm(), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let h = Operator::new_hermitian(array![[c(0.0), c(1.0)], [c(1.0), c(0.0)]], SpaceTag::Spin { n: 1 }).unwrap();
        let p = diagonalize(&h).unwrap();
        assert!((p.eigenvalues()[0] + 1.0).abs() < 1e-15);
        assert!((p.eigenvalues()[1] - 1.0).abs() < 1e-15);
    }

    /// Regression constant from an independent dense eigensolver
    /// (LAPACK `syevd` via NumPy) on the same 42x42 quantum Rabi matrix.
    #[test]
    fn rabi_ground_state_energy() {
        let params = ModelParams { n: 1, lambda_base: 0.5, cutoff: Cutoff::Fixed(20), ..Default::default() };
        let h = build_dicke_hamiltonian(&params).unwrap();
        let p = diagonalize(&h).unwrap();
        assert!((p.eigenvalues()[0] - (-0.633_294_235_461_630_1)).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let h = random_hermitian(50, 7);
        let p = diagonalize(&h).unwrap();
        assert!(p.orthonormality_error() < 1e-10);
        assert!(p.reconstruction_error(h.entries()) < 1e-10);
        let ev = p.eigenvalues();
        assert!(ev.windows(2).into_iter().all(|w| w[0] <= w[1]));
    }

    #[test]
    fn non_hermitian_rejected() {
        let op = Operator::new(array![[c(0.0), c(1.0)], [c(0.0), c(0.0)]], SpaceTag::Spin { n: 1 }).unwrap();
        assert!(matches!(diagonalize(&op), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let h = random_hermitian(4, 1);
        let psi = random_state(SpaceTag::Boson { cutoff: 4 }, 2);
        let p = diagonalize(&h).unwrap();
        assert!(matches!(p.evolve(&psi, 1.0), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn zero_time_is_identity() {
        let h = random_hermitian(12, 3);
        let psi = random_state(h.tag(), 4);
        let p = diagonalize(&h).unwrap();
        assert_eq!(p.evolve(&psi, 0.0).unwrap(), psi);
        assert_eq!(evolve_rk4_oracle(&h, &psi, 0.0, 10).unwrap(), psi);
    }

    #[test]
    fn forward_then_backward_and_composition() {
        let h = random_hermitian(30, 5);
        let psi = random_state(h.tag(), 6);
        let p = diagonalize(&h).unwrap();
        let fwd = p.evolve(&psi, 2.7).unwrap();
        let back = p.evolve(&fwd, -2.7).unwrap();
        let diff = back.amplitudes().iter().zip(psi.amplitudes().iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);

        let a = p.evolve(&p.evolve(&psi, 1.1).unwrap(), 0.6).unwrap();
        let b = p.evolve(&psi, 1.7).unwrap();
        let diff = a.amplitudes().iter().zip(b.amplitudes().iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-11);
    }

    #[test]
    fn eigenstate_picks_up_global_phase() {
        let h = random_hermitian(8, 9);
        let p = diagonalize(&h).unwrap();
        let v = p.eigenvectors();
        let amps = v.column(3).to_owned();
        let psi = StateVector::normalized(amps, h.tag()).unwrap();
        let out = p.evolve(&psi, 3.3).unwrap();
        let phase = C64::from_polar(1.0, -p.eigenvalues()[3] * 3.3);
        for (x, y) in out.amplitudes().iter().zip(psi.amplitudes().iter()) {
            assert!((x - y * phase).norm() < 1e-12);
        }
        assert!((out.fidelity(&psi) - 1.0).abs() < 1e-12);
    }

    /// Two-level Rabi problem `H = ½ω σz + g σx` from the ground state,
    /// compared against its closed-form propagator.
    #[test]
    fn rk4_matches_two_level_closed_form() {
        let (w, g, t) = (1.0f64, 0.5f64, std::f64::consts::PI);
        let h = Operator::new_hermitian(array![[c(-w / 2.0), c(g)], [c(g), c(w / 2.0)]], SpaceTag::Spin { n: 1 }).unwrap();
        let psi0 = StateVector::basis(h.tag(), 0).unwrap();
        let omega = ((w / 2.0).powi(2) + g * g).sqrt();
        let (s, co) = (omega * t).sin_cos();
        // e^{−iHt}|g⟩ = cos(Ωt)|g⟩ − i sin(Ωt)/Ω · H|g⟩
        let exact = Array1::from(vec![
            C64::new(co, s * (w / 2.0) / omega),
            C64::new(0.0, -s * g / omega),
        ]);
        let exact = StateVector::new(exact, h.tag()).unwrap();
        let rk = evolve_rk4_oracle(&h, &psi0, t, 10_000).unwrap();
        assert!(rk.fidelity(&exact) > 1.0 - 1e-8);
        let eig = diagonalize(&h).unwrap().evolve(&psi0, t).unwrap();
        assert!(eig.fidelity(&exact) > 1.0 - 1e-12);
    }

    #[test]
    fn rk4_agrees_with_eigen_route_on_dicke() {
        let params = ModelParams {
            n: 2,
            lambda_base: 0.3,
            scaling: CouplingScaling::Constant,
            cutoff: Cutoff::Fixed(16),
            ..Default::default()
        };
        let h = build_dicke_hamiltonian(&params).unwrap();
        let psi0 = initial_state(2, 16).unwrap();
        let eig = diagonalize(&h).unwrap().evolve(&psi0, 5.0).unwrap();
        let rk = evolve_rk4_oracle(&h, &psi0, 5.0, 20_000).unwrap();
        assert!(rk.fidelity(&eig) > 1.0 - 1e-7);
    }

    #[test]
    fn conservation_under_dicke_evolution() {
        let params = ModelParams { n: 3, lambda_base: 0.8, cutoff: Cutoff::Fixed(20), ..Default::default() };
        let h = build_dicke_hamiltonian(&params).unwrap();
        let psi0 = initial_state(3, 20).unwrap();
        let p = diagonalize(&h).unwrap();
        let e0 = h.expectation(&psi0).re;
        let h_norm = h.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let par = parity_diagonal(h.tag());
        let parity = |s: &StateVector| -> f64 {
            s.amplitudes().iter().zip(par.iter()).map(|(z, p)| z.norm_sqr() * p).sum()
        };
        let p0 = parity(&psi0);
        let times: Vec<f64> = (1..=40).map(|k| 0.37 * k as f64).collect();
        p.evolve_each(&psi0, &times, |_, psi| {
            assert!((psi.norm() - 1.0).abs() < 1e-11);
            assert!((h.expectation(&psi).re - e0).abs() < 1e-9 * h_norm);
            assert!((parity(&psi) - p0).abs() < 1e-9);
        })
        .unwrap();
    }

    #[test]
    fn complex_hamiltonian_path() {
        let h = random_hermitian(16, 11);
        assert!(!h.is_real());
        let psi = random_state(h.tag(), 12);
        let p = diagonalize(&h).unwrap();
        let eig = p.evolve(&psi, 1.3).unwrap();
        let rk = evolve_rk4_oracle(&h, &psi, 1.3, 4000).unwrap();
        assert!(eig.fidelity(&rk) > 1.0 - 1e-10);
        assert!((eig.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn batched_matches_single() {
        let h = random_hermitian(20, 13);
        let psi = random_state(h.tag(), 14);
        let p = diagonalize(&h).unwrap();
        let times: Vec<f64> = (0..150).map(|k| 0.05 * k as f64).collect();
        let mut batched = Vec::new();
        p.evolve_each(&psi, &times, |i, s| batched.push((i, s))).unwrap();
        assert_eq!(batched.len(), times.len());
        for (i, s) in batched {
            let single = p.evolve(&psi, times[i]).unwrap();
            assert!((s.fidelity(&single) - 1.0).abs() < 1e-13);
        }
    }
}
