//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::process::Command;
use std::time::Instant;

use dicke_qb::cli::csv::fmt_float;
use dicke_qb::dynamics::{diagonalize, evolve_rk4_oracle};
use dicke_qb::hilbert::{initial_state, SpaceTag, StateVector};
use dicke_qb::model::{build_classical_hamiltonian, build_dicke_hamiltonian, CouplingScaling, Cutoff, ModelParams};
use dicke_qb::observables::{ChargeSession, ChargeTrace};
use dicke_qb::protocols::{
    classical_rabi_energy, classical_separability_check, run_sweep, SweepOptions, SweepResult, TimeGrid, TAIL_MASS_TOL,
};

const SWEEP_LIST: [usize; 6] = [2, 4, 6, 8, 10, 12];
const LAMBDA: f64 = 0.5;

// Frozen fitted exponents for the sweep above (auto cutoff, refined maxima).
const ALPHA_INVSQRT: f64 = 0.9593615820101201;
const ALPHA_CONSTANT: f64 = 1.5030250975245878;
const ALPHA_REL_TOL: f64 = 1e-6;

const DRIVES: [f64; 3] = [0.1, 0.5, 2.0];

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("[{}] {id}. {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn base() -> ModelParams {
    ModelParams { lambda_base: LAMBDA, cutoff: Cutoff::Auto, ..Default::default() }
}

fn sweep(policy: CouplingScaling) -> SweepResult {
    run_sweep(&SWEEP_LIST, &base(), policy, &SweepOptions::default()).expect("sweep")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Worst conservation figures over a set of traces.
struct Conservation {
    norm: f64,
    energy: f64,
    parity: f64,
    capacity_excess: f64,
    runs: usize,
}

impl Conservation {
    fn new() -> Self {
        Self { norm: 0.0, energy: 0.0, parity: 0.0, capacity_excess: f64::NEG_INFINITY, runs: 0 }
    }

    fn add(&mut self, trace: &ChargeTrace) {
        self.norm = self.norm.max(trace.max_norm_err());
        self.energy = self.energy.max(trace.max_energy_drift() / trace.h_norm);
        self.parity = self.parity.max(trace.max_parity_drift());
        let cap = trace.params.n as f64 * trace.params.omega_a;
        self.capacity_excess = self.capacity_excess.max(trace.max_energy() - cap);
        self.runs += 1;
    }
}

fn main() {
    let mut report = Report { failures: 0 };
    let mut conservation = Conservation::new();

    // 1 and 2: scaling contrast.
    let start = Instant::now();
    let inv = sweep(CouplingScaling::InverseSqrtN);
    let con = sweep(CouplingScaling::Constant);
    let elapsed = start.elapsed().as_secs_f64();
    let a_inv = inv.fit.as_ref().expect("fit").exponent;
    let a_con = con.fit.as_ref().expect("fit").exponent;
    report.check(
        1,
        "scaling exponents",
        (0.9..=1.1).contains(&a_inv)
            && (1.3..=1.7).contains(&a_con)
            && inv.fit_trusted
            && con.fit_trusted
            && elapsed < 180.0
            && rel(a_inv, ALPHA_INVSQRT) < ALPHA_REL_TOL
            && rel(a_con, ALPHA_CONSTANT) < ALPHA_REL_TOL,
        format!("alpha invsqrt = {a_inv:.10}, constant = {a_con:.10} (frozen within {ALPHA_REL_TOL:e}); both sweeps {elapsed:.1} s"),
    );
    report.check(2, "policy contrast", a_con - a_inv > 0.3, format!("alpha difference = {:.6}", a_con - a_inv));
    for t in inv.traces.iter().chain(&con.traces) {
        conservation.add(t);
    }

    // 3: a single TLS sees no difference between policies.
    let single = |policy| {
        let r = run_sweep(&[1], &base(), policy, &SweepOptions::default()).expect("sweep");
        (r.rows[0].p_max, r.traces.into_iter().next().unwrap())
    };
    let (p_inv, t_inv) = single(CouplingScaling::InverseSqrtN);
    let (p_con, t_con) = single(CouplingScaling::Constant);
    conservation.add(&t_inv);
    conservation.add(&t_con);
    report.check(
        3,
        "N=1 equivalence",
        rel(p_inv, p_con) < 1e-12,
        format!("P_max = {p_inv:.16e} vs {p_con:.16e}"),
    );

    // 4: classical drive is separable and N-linear.
    let times = [0.5, 1.0, 2.0, 5.0, 10.0];
    let (mut deficit, mut ratio_err) = (0.0f64, 0.0f64);
    for n in 2..=4 {
        for drive in DRIVES {
            let r = classical_separability_check(n, 1.0, drive, &times).expect("separability");
            for s in &r.samples {
                deficit = deficit.max(s.fidelity_deficit);
                ratio_err = ratio_err.max((s.energy_ratio - 1.0).abs());
            }
        }
    }
    report.check(
        4,
        "classical separability",
        deficit < 1e-10 && ratio_err < 1e-10,
        format!("max fidelity deficit = {deficit:.3e}, max |ratio - 1| = {ratio_err:.3e}"),
    );

    // 5: closed form against 2x2 numerical evolution.
    let mut worst = 0.0f64;
    for drive in DRIVES {
        let h = build_classical_hamiltonian(1.0, drive).expect("classical H");
        let prop = diagonalize(&h).expect("diagonalize");
        let ground = StateVector::basis(SpaceTag::Spin { n: 1 }, 0).unwrap();
        for i in 0..=2000 {
            let t = 20.0 * i as f64 / 2000.0;
            let psi = prop.evolve(&ground, t).expect("evolve");
            let e = psi.amplitudes()[1].norm_sqr();
            worst = worst.max((e - classical_rabi_energy(1.0, drive, t)).abs());
        }
    }
    let t_peak = std::f64::consts::PI / 2f64.sqrt();
    let peak = classical_rabi_energy(1.0, 0.5, t_peak);
    report.check(
        5,
        "closed-form Rabi oracle",
        worst < 1e-10 && (peak - 0.5).abs() < 1e-8,
        format!("max |closed - numeric| = {worst:.3e} on [0, 20]; E(pi/sqrt2) = {peak:.12}"),
    );

    // 7: eigen route against RK4.
    let params = ModelParams { n: 2, lambda_base: 0.3, cutoff: Cutoff::Fixed(16), ..Default::default() };
    let h = build_dicke_hamiltonian(&params).expect("H");
    let psi0 = initial_state(2, 16).unwrap();
    let rk = evolve_rk4_oracle(&h, &psi0, 5.0, 100_000).expect("rk4");
    let full = diagonalize(&h).expect("diagonalize").evolve(&psi0, 5.0).expect("evolve");
    let session = ChargeSession::new(&params).expect("session");
    let sector = session.state_at(5.0).expect("evolve");
    let f_full = full.fidelity(&rk);
    let f_sector = sector.fidelity(&rk);
    let taus = TimeGrid::default().resolve(&params).unwrap();
    conservation.add(&session.trace(&taus).expect("trace"));

    // 6: conservation over every dynamical run above.
    report.check(
        6,
        "conservation",
        conservation.norm < 1e-11
            && conservation.energy < 1e-9
            && conservation.parity < 1e-9
            && conservation.capacity_excess <= 1e-9,
        format!(
            "{} runs: norm {:.2e}, energy/||H|| {:.2e}, parity {:.2e}, max E - N omega_a = {:.3e}",
            conservation.runs, conservation.norm, conservation.energy, conservation.parity, conservation.capacity_excess
        ),
    );
    report.check(
        7,
        "eigen vs RK4",
        f_full > 1.0 - 1e-7 && f_sector > 1.0 - 1e-7,
        format!("1 - fidelity: full space {:.2e}, parity sector {:.2e}", 1.0 - f_full, 1.0 - f_sector),
    );

    // 8: accepted cutoffs.
    let rows = || inv.rows.iter().chain(&con.rows);
    let worst_tail = rows()
        .map(|r| r.convergence.evidence.iter().find(|p| p.cutoff == r.cutoff).unwrap().tail_mass)
        .fold(0.0f64, f64::max);
    let cutoffs: Vec<String> = rows().map(|r| format!("{}:{}", r.n, r.cutoff)).collect();
    report.check(
        8,
        "cutoff convergence",
        worst_tail < TAIL_MASS_TOL,
        format!("all rows terminated; worst tail mass {worst_tail:.2e}; cutoffs {}", cutoffs.join(" ")),
    );

    // 9: byte-identical CLI output with a worker pool.
    let dir = tempfile::tempdir().unwrap();
    let list = SWEEP_LIST.map(|n| n.to_string()).join(",");
    let run = |tag: &str, jobs: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let svg = dir.path().join(format!("{tag}.svg"));
        let status = Command::new(env!("CARGO_BIN_EXE_dicke-qb"))
            .args(["sweep", "--n-list", &list, "--scaling", "invsqrt", "--refine", "--jobs", jobs])
            .arg("--out")
            .arg(&csv)
            .arg("--svg")
            .arg(&svg)
            .output()
            .expect("spawn");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        (fs::read(csv).unwrap(), fs::read(svg).unwrap())
    };
    let first = run("a", "4");
    let second = run("b", "4");
    let serial = run("c", "1");
    let footer = String::from_utf8_lossy(&first.0).contains(&format!("exponent={}", fmt_float(a_inv)));
    report.check(
        9,
        "determinism",
        first == second && first == serial && footer,
        format!(
            "two --jobs 4 runs identical: {}; matches --jobs 1: {}; footer exponent matches library fit: {footer}",
            first == second,
            first == serial
        ),
    );

    println!("{} of 9 criteria failed", report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}
