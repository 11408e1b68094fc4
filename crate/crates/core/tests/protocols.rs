use dicke_qb::model::{CouplingScaling, Cutoff, ModelParams};
use dicke_qb::observables::ChargeSession;
use dicke_qb::protocols::{
    classical_rabi_energy, classical_separability_check, converge_cutoff, run_sweep, SweepOptions, SweepResult,
    TimeGrid, TAIL_MASS_TOL,
};
use proptest::prelude::*;

const FULL_LIST: [usize; 7] = [1, 2, 4, 6, 8, 10, 12];

fn sweep(policy: CouplingScaling) -> SweepResult {
    run_sweep(&FULL_LIST, &ModelParams::default(), policy, &SweepOptions::default()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn scaling_over_list_with_single_tls() {
    let inv = sweep(CouplingScaling::InverseSqrtN);
    let con = sweep(CouplingScaling::Constant);

    let a_inv = inv.fit.unwrap().exponent;
    let a_con = con.fit.unwrap().exponent;
    assert!((a_inv - 1.0).abs() <= 0.1, "invsqrt exponent {a_inv}");
    assert!((a_con - 1.5).abs() <= 0.2, "constant exponent {a_con}");
    assert!(inv.fit_trusted && con.fit_trusted);

    // Per-TLS power under invsqrt: spread measured as (max - min) / max.
    let per_tls: Vec<f64> = inv.rows.iter().map(|r| r.p_max / r.n as f64).collect();
    let hi = per_tls.iter().cloned().fold(f64::MIN, f64::max);
    let lo = per_tls.iter().cloned().fold(f64::MAX, f64::min);
    assert!((hi - lo) / hi < 0.15, "per-TLS spread {per_tls:?}");

    // Rows arrive sorted and each one passed the tail guard.
    for r in inv.rows.iter().chain(&con.rows) {
        assert!(r.convergence.evidence.iter().find(|p| p.cutoff == r.cutoff).unwrap().tail_mass < TAIL_MASS_TOL);
    }
    let ns: Vec<usize> = con.rows.iter().map(|r| r.n).collect();
    assert_eq!(ns, FULL_LIST);

    // Regression values of the two-TLS over one-TLS power gain.
    let gain = |s: &SweepResult| s.rows[1].p_max / s.rows[0].p_max;
    assert!(rel(gain(&inv), 1.8501607575941885) < 1e-9, "invsqrt gain {}", gain(&inv));
    assert!(rel(gain(&con), 2.860353388340825) < 1e-9, "constant gain {}", gain(&con));
    assert_eq!(inv.rows[0].p_max, con.rows[0].p_max);
}

#[test]
fn excluding_single_tls_from_fit() {
    let opts = SweepOptions { fit_exclude_n1: true, ..Default::default() };
    let r = run_sweep(&FULL_LIST, &ModelParams::default(), CouplingScaling::InverseSqrtN, &opts).unwrap();
    let fit = r.fit.unwrap();
    assert_eq!(fit.points, 6);
    assert_eq!(r.rows.len(), 7);
    assert!((fit.exponent - 1.0).abs() <= 0.1);
}

#[test]
fn unsorted_duplicate_list_is_normalized() {
    let r = run_sweep(&[4, 2, 4, 3], &ModelParams::default(), CouplingScaling::InverseSqrtN, &SweepOptions::default())
        .unwrap();
    assert_eq!(r.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![2, 3, 4]);
    assert_eq!(r.traces.len(), 3);
}

#[test]
fn worker_count_does_not_change_results() {
    let list = [1, 3, 5, 7];
    let base = ModelParams::default();
    let one = run_sweep(&list, &base, CouplingScaling::InverseSqrtN, &SweepOptions::default()).unwrap();
    let four = run_sweep(&list, &base, CouplingScaling::InverseSqrtN, &SweepOptions { jobs: 4, ..Default::default() })
        .unwrap();
    for (a, b) in one.rows.iter().zip(&four.rows) {
        assert_eq!(a.p_max.to_bits(), b.p_max.to_bits());
        assert_eq!(a.tau_star.to_bits(), b.tau_star.to_bits());
        assert_eq!(a.cutoff, b.cutoff);
    }
    assert_eq!(one.fit.unwrap().exponent.to_bits(), four.fit.unwrap().exponent.to_bits());
}

// Ultrastrong coupling: the max-power estimate settles at the seed while the
// top Fock level is still heavily populated, so only the tail guard stops a
// false acceptance.
#[test]
fn ultrastrong_cutoff_is_not_accepted_early() {
    for (n, scaling, min_cutoff) in [(8, CouplingScaling::InverseSqrtN, 192), (4, CouplingScaling::Constant, 256)] {
        let params = ModelParams { n, lambda_base: 2.0, scaling, ..Default::default() };
        let taus = TimeGrid::default().resolve(&params).unwrap();
        let conv = converge_cutoff(&params, &taus, 1e-6).unwrap();
        let seed = &conv.evidence[0];
        assert!(seed.rel_delta.unwrap() < 1e-6 || conv.evidence[1].rel_delta.unwrap() < 1e-6);
        assert!(seed.tail_mass > 1e-3, "seed tail {}", seed.tail_mass);
        assert!(conv.cutoff > min_cutoff, "N={n}: accepted {}", conv.cutoff);
        let accepted = conv.evidence.iter().find(|p| p.cutoff == conv.cutoff).unwrap();
        assert!(accepted.tail_mass < TAIL_MASS_TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn charging_invariants(n in 1usize..=4, lambda in 0.0f64..0.8, omega_c in 0.5f64..1.5, steps in 5usize..40) {
        let params = ModelParams {
            n,
            lambda_base: lambda,
            omega_c,
            cutoff: Cutoff::Fixed(4 * n + 16),
            ..Default::default()
        };
        let session = ChargeSession::new(&params).unwrap();
        let taus = TimeGrid { t_max: Some(10.0), steps }.resolve(&params).unwrap();
        let trace = session.trace(&taus).unwrap();
        prop_assert!(trace.max_norm_err() < 1e-11);
        prop_assert!(trace.max_parity_drift() < 1e-9);
        prop_assert!(trace.max_energy_drift() < 1e-9 * trace.h_norm.max(1.0));
        for &e in &trace.energy {
            prop_assert!(e >= -1e-12 && e <= n as f64 + 1e-9);
        }
        let best = session.find_max_power(&trace, true).unwrap();
        let grid_best = trace.power.iter().cloned().fold(0.0, f64::max);
        prop_assert!(best.p_max >= grid_best);
    }

    #[test]
    fn classical_drive_factorizes(n in 1usize..=4, drive in 0.01f64..3.0, omega_a in 0.2f64..2.0, t in 0.01f64..15.0) {
        let report = classical_separability_check(n, omega_a, drive, &[t]).unwrap();
        prop_assert!(report.fidelity_deficit < 1e-10);
        prop_assert!(report.fidelity_deficit >= -1e-12);
        let e = classical_rabi_energy(omega_a, drive, t);
        let s = &report.samples[0];
        prop_assert!((s.e_single - e).abs() < 1e-10);
        prop_assert!((s.e_total - n as f64 * e).abs() < 1e-9);
    }
}
