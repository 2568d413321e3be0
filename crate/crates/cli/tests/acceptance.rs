//! Acceptance gate: ten end-to-end criteria exercising the flow solvers,
//! the recovery procedure, the inequality checkers, and the runner binary.
//! Each test prints one `pass`/`fail` line (visible with `--nocapture`).

use std::f64::consts::PI;
use std::process::Command;

use ymlab::calculus::cov_d;
use ymlab::diagnostics::{
    calibrate_gfs, gfs_check, hardy_check, identity_suite, RunArtifacts, Verdict,
};
use ymlab::field::FormField;
use ymlab::grid::Grid;
use ymlab::heat::{action_rho, ym_flow, FlowTrajectory, TimeGrid};
use ymlab::lie::{GroupSpec, LieValue};
use ymlab::quadrature::trapezoid;
use ymlab::sampling::{random_form, random_sobolev_1form, SeedSplitter};
use ymlab::spectral::{h_half_seminorm_sq, helmholtz_split, spectral_heat};
use ymlab::variational::{
    direct_variational_run, recover_v, solve_augmented, solve_mild_picard, AugmentedRun,
    RecoveryConfig,
};
use ymlab::Real;

/// Print the per-criterion verdict line, then enforce it.
fn criterion(label: &str, ok: bool, detail: String) {
    println!("{label}: {} ({detail})", if ok { "pass" } else { "fail" });
    assert!(ok, "{label} failed: {detail}");
}

fn rel_l2(got: &FormField<Real>, want: &FormField<Real>) -> Real {
    got.sub(want).norm_l2() / want.norm_l2()
}

/// Smooth low-mode 1-form: the same continuum data at every resolution,
/// so cross-resolution error ratios are meaningful.
fn trig_1form(g: Grid<Real>, gs: &GroupSpec<Real>, amp: Real, shift: Real) -> FormField<Real> {
    let l = g.l;
    let dim = gs.dim;
    FormField::from_fn(1, g, gs.clone(), |p, c| {
        let q: Vec<Real> = p.iter().map(|x| x / l).collect();
        let w = |k: [Real; 3], ph: Real| {
            (2.0 * PI * (k[0] * q[0] + k[1] * q[1] + k[2] * q[2]) + ph + shift).sin()
        };
        let cf = 0.9 * c as Real;
        let coeffs = [
            amp * w([1.0, 0.0, 1.0], 0.3 + cf),
            0.75 * amp * w([0.0, 1.0, 1.0], 1.1 - cf),
            0.6 * amp * w([1.0, 1.0, 0.0], 2.0 + 0.5 * cf),
        ];
        LieValue::from_coeffs(&coeffs[..dim])
    })
}

/// Abelian Coulomb data from fixed low modes, projected per grid.
fn coulomb_u1(g: Grid<Real>) -> FormField<Real> {
    let raw = trig_1form(g, &GroupSpec::u1(), 0.8, 0.0);
    let (div_free, _) = helmholtz_split(&raw).unwrap();
    div_free
}

/// Heat flow plus augmented run on smooth SU(2) data (shared by A3/A4).
fn su2_setup(
    g: Grid<Real>,
    t_end: Real,
    nodes: usize,
    extra: &[Real],
) -> (TimeGrid<Real>, FlowTrajectory<Real>, AugmentedRun<Real>) {
    let gs = GroupSpec::su2();
    let a0 = trig_1form(g, &gs, 0.3, 0.0);
    let w0 = trig_1form(g, &gs, 0.25, 0.9);
    let tg = TimeGrid::geometric(t_end, nodes, 2.0, &g, 0.9)
        .unwrap()
        .with_nodes(extra)
        .unwrap();
    let traj = ym_flow(&a0, &tg).unwrap();
    let run = solve_augmented(&w0, &traj, &tg).unwrap();
    (tg, traj, run)
}

/// A1 — the nonlinear stepper on abelian Coulomb data reproduces the
/// spectral closed form, and the error refines at second order or better
/// when h and dt are halved together.
#[test]
fn a1_abelian_spectral_oracle() {
    let t_end = 0.5;
    let err_at = |n: usize, nodes: usize| -> Real {
        let g = Grid::new(n, 2.0 * PI).unwrap();
        let a0 = coulomb_u1(g);
        let tg = TimeGrid::uniform(t_end, nodes, &g, 0.9).unwrap();
        let traj = ym_flow(&a0, &tg).unwrap();
        let exact = spectral_heat(&a0, t_end).unwrap();
        rel_l2(traj.fields.last().unwrap(), &exact)
    };
    let coarse = err_at(16, 48);
    let fine = err_at(32, 96);
    let ratio = coarse / fine;
    criterion(
        "A1 abelian-spectral-oracle",
        fine <= 5e-3 && ratio >= 3.2,
        format!("rel_err {fine:.3e}, refinement ratio {ratio:.2}"),
    );
}

/// A2 — curvature energy is non-increasing across 20 seeded SU(2) flows.
#[test]
fn a2_curvature_energy_monotone() {
    let g = Grid::new(16, 1.0).unwrap();
    let gs = GroupSpec::su2();
    let mut worst = Real::NEG_INFINITY;
    for seed in 0..20u64 {
        let seeds = SeedSplitter::new(seed).child("a2");
        let mut a0 = random_sobolev_1form(g, gs.clone(), 1.0, &seeds);
        a0.scale_in_place(0.5);
        let tg = TimeGrid::geometric(0.02, 8, 2.0, &g, 0.9).unwrap();
        let traj = ym_flow(&a0, &tg).unwrap();
        let norms: Vec<Real> = traj.curvatures.iter().map(|b| b.norm_l2()).collect();
        for k in 1..norms.len() {
            worst = worst.max((norms[k] - norms[k - 1]) / norms[k - 1]);
        }
    }
    criterion(
        "A2 curvature-energy-monotone",
        worst <= 1e-10,
        format!("worst relative per-step increase {worst:.3e} over 20 seeds"),
    );
}

/// A3 — recovery from the augmented run matches direct integration of the
/// variational equation, and the recovery identity holds to rounding.
#[test]
fn a3_recovery_matches_direct() {
    let g = Grid::new(16, PI).unwrap();
    let tau = 0.05;
    let (tg, traj, run) = su2_setup(g, 0.25, 32, &[tau]);
    let b = 0.5;
    let rec0 = recover_v(&run.states, &traj, &RecoveryConfig::new(0.0, b).unwrap()).unwrap();
    let w0 = run.states[0].w.clone();
    let direct = direct_variational_run(&w0, &traj, &tg).unwrap();
    let rel = rel_l2(rec0.v.last().unwrap(), direct.last().unwrap());

    // v_tau = v - d_{A(t)} alpha_tau, with the shared eta quadrature
    let rec_tau = recover_v(&run.states, &traj, &RecoveryConfig::new(tau, b).unwrap()).unwrap();
    let scale = rec0.v.iter().map(|v| v.norm_l2()).fold(0.0, Real::max);
    let mut identity = 0.0_f64;
    for (n, a) in traj.fields.iter().enumerate() {
        let mut lhs = rec0.v[n].sub(&rec_tau.v[n]);
        lhs.add_scaled(-1.0, &cov_d(a, &rec_tau.alpha_tau).unwrap());
        identity = identity.max(lhs.norm_l2() / scale);
    }
    criterion(
        "A3 recovery-vs-direct",
        rel <= 5e-3 && identity <= 1e-12,
        format!("rel diff at T {rel:.3e}, identity residual {identity:.3e}"),
    );
}

/// A4 — the vertical correction converges: sup_t ||v - v_tau|| decreases
/// monotonically along the tau sweep and drops below 0.3x its start.
#[test]
fn a4_vertical_correction_sweep() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let sweep = [0.2, 0.1, 0.05, 0.025];
    let (_tg, traj, run) = su2_setup(g, 1.0, 24, &sweep);
    let b = 0.5;
    let reference = recover_v(&run.states, &traj, &RecoveryConfig::new(0.0, b).unwrap()).unwrap();
    let sups: Vec<Real> = sweep
        .iter()
        .map(|&tau| {
            let rec = recover_v(&run.states, &traj, &RecoveryConfig::new(tau, b).unwrap()).unwrap();
            reference
                .v
                .iter()
                .zip(&rec.v)
                .map(|(v, vt)| v.sub(vt).norm_l2())
                .fold(0.0, Real::max)
        })
        .collect();
    let monotone = sups.windows(2).all(|w| w[1] < w[0]);
    let contraction = sups.last().unwrap() / sups[0];
    criterion(
        "A4 vertical-correction-sweep",
        monotone && contraction <= 0.3,
        format!("sup norms {sups:?}, final/initial {contraction:.3}"),
    );
}

/// A5 — the weighted curvature action of abelian Coulomb data reproduces
/// the closed-form H^{1/2} expression (a = 1/2, tail < 0.5%).
#[test]
fn a5_rho_h_half_identity() {
    let g = Grid::new(32, 1.0).unwrap();
    let gs = GroupSpec::u1();
    let seeds = SeedSplitter::new(11).child("a5");
    let raw = random_sobolev_1form(g, gs, 1.0, &seeds);
    let (a0, _) = helmholtz_split(&raw).unwrap();
    // lowest nonzero mode decays like exp(-2*lambda*t), lambda ~ 4*pi^2,
    // so the analytic tail beyond T = 0.2 is below 1e-6 of rho
    let t_end = 0.2;
    let tg = TimeGrid::geometric(t_end, 56, 2.0, &g, 0.9).unwrap();
    let traj = ym_flow(&a0, &tg).unwrap();
    let rho = action_rho(&traj, 0.5).unwrap();
    let rho_ref = (PI / 2.0).sqrt() / 2.0 * h_half_seminorm_sq(&a0);
    let dev = (rho / rho_ref - 1.0).abs();
    criterion(
        "A5 rho-hhalf-identity",
        dev <= 2e-2,
        format!("rho {rho:.6e}, closed form {rho_ref:.6e}, deviation {dev:.3e}"),
    );
}

/// A6 — identity suite: spatial residuals refine at second order from
/// 16^3 to 32^3 and the co-integrated energy balances scale like dt^4.
#[test]
fn a6_identity_refinement_suite() {
    let artifacts = |n: usize, nodes: usize| {
        let g = Grid::new(n, 1.0).unwrap();
        let gs = GroupSpec::su2();
        let a0 = trig_1form(g, &gs, 0.4, 0.0);
        let w0 = trig_1form(g, &gs, 0.5, 0.8);
        let tg = TimeGrid::uniform(0.005, nodes, &g, 0.9).unwrap();
        let traj = ym_flow(&a0, &tg).unwrap();
        let run = solve_augmented(&w0, &traj, &tg).unwrap();
        (traj, run)
    };
    let (traj_c, run_c) = artifacts(16, 32);
    let (_, run_c_half) = artifacts(16, 64);
    let (traj_f, run_f) = artifacts(32, 64);
    let report = identity_suite(
        RunArtifacts {
            traj: &traj_c,
            run: &run_c,
        },
        RunArtifacts {
            traj: &traj_f,
            run: &run_f,
        },
        &run_c_half,
    )
    .unwrap();
    let failing: Vec<&str> = report
        .entries
        .iter()
        .filter(|e| e.verdict == Verdict::Fail)
        .map(|e| e.name.as_str())
        .collect();
    criterion(
        "A6 identity-refinement-suite",
        report.all_pass(),
        format!("{} entries, failing: {failing:?}", report.entries.len()),
    );
}

/// A7 — 100 randomized Hardy checks and 100 randomized calibrated
/// Gaffney-Friedrichs checks all pass; the calibration is reproducible.
#[test]
fn a7_inequality_sweeps() {
    // Hardy sweep: random piecewise-smooth g on a clustered time grid
    let mut hardy_fail = 0usize;
    for case in 0..100u64 {
        let seeds = SeedSplitter::new(case).child("a7-hardy");
        let mut rng = seeds.rng();
        use rand::Rng;
        let coeffs: Vec<Real> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let times: Vec<Real> = (1..=400)
            .map(|k| 1e-5_f64.powf(1.0 - k as Real / 400.0))
            .collect();
        let g: Vec<Real> = times
            .iter()
            .map(|&t| {
                coeffs[0]
                    + coeffs[1] * t
                    + coeffs[2] * (3.0 * t).sin()
                    + coeffs[3] * t * t
                    + coeffs[4] * (5.0 * t).cos()
            })
            .collect();
        let beta = [0.0, 0.5, 0.9][case as usize % 3];
        let entry = hardy_check(&times, &g, beta).unwrap();
        if entry.verdict != Verdict::Pass {
            hardy_fail += 1;
        }
    }

    // GFS sweep on a nonabelian background with the measured calibration
    let g = Grid::new(16, 1.0).unwrap();
    let gs = GroupSpec::su2();
    let calib = calibrate_gfs(g, gs.clone(), 1000, 7).unwrap();
    let again = calibrate_gfs(g, gs.clone(), 1000, 7).unwrap();
    let reproducible = calib.kappa == again.kappa
        && calib.gamma == again.gamma
        && calib.commutator_bound == again.commutator_bound;
    let mut gfs_fail = 0usize;
    for case in 0..100u64 {
        let seeds = SeedSplitter::new(case).child("a7-gfs");
        let mut a = random_sobolev_1form(g, gs.clone(), 1.0, &seeds.child("a"));
        a.scale_in_place(0.5);
        let omega = random_form(1 + (case % 2) as u8, g, gs.clone(), &seeds.child("omega"));
        let entry = gfs_check(&omega, &a, Some(&calib)).unwrap();
        if entry.verdict != Verdict::Pass {
            gfs_fail += 1;
        }
    }
    criterion(
        "A7 inequality-sweeps",
        hardy_fail == 0 && gfs_fail == 0 && reproducible,
        format!(
            "hardy failures {hardy_fail}/100, gfs failures {gfs_fail}/100, \
             calibration reproducible {reproducible} (kappa {:.4}, gamma {:.4})",
            calib.kappa, calib.gamma
        ),
    );
}

/// A8 — the mild fixed-point iteration contracts geometrically on a short
/// horizon and its limit matches the node-stepping solver.
#[test]
fn a8_picard_contraction() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let gs = GroupSpec::su2();
    let a0 = trig_1form(g, &gs, 0.25, 0.0);
    let w0 = trig_1form(g, &gs, 0.1, 0.9);
    let tg = TimeGrid::geometric(0.1, 12, 2.0, &g, 0.9).unwrap();
    let traj = ym_flow(&a0, &tg).unwrap();
    let run = solve_mild_picard(&w0, &traj, &tg, 8).unwrap();
    let d = &run.correction_norms;
    let mut worst_ratio = 0.0_f64;
    for k in 1..d.len().min(5) {
        worst_ratio = worst_ratio.max(d[k] / d[k - 1]);
    }
    let aug = solve_augmented(&w0, &traj, &tg).unwrap();
    let rel = rel_l2(
        run.iterates.last().unwrap().last().unwrap(),
        &aug.states.last().unwrap().w,
    );
    criterion(
        "A8 picard-contraction",
        d.len() >= 3 && worst_ratio < 0.9 && rel <= 5e-3,
        format!(
            "{} sweeps, worst correction ratio {worst_ratio:.3}, limit vs solver {rel:.3e}",
            d.len()
        ),
    );
}

/// A9 — uniqueness bound: a perturbation of the variational data grows no
/// faster than the Groenwall envelope exp(int 2c||B||_inf ds).
#[test]
fn a9_groenwall_uniqueness() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let gs = GroupSpec::su2();
    let a0 = trig_1form(g, &gs, 0.3, 0.0);
    let v0 = trig_1form(g, &gs, 0.25, 0.9);
    let seeds = SeedSplitter::new(23).child("a9");
    let mut delta0 = random_sobolev_1form(g, gs.clone(), 1.0, &seeds);
    delta0.scale_in_place(1e-3 / delta0.norm_l2());
    let mut v0_pert = v0.clone();
    v0_pert.add_scaled(1.0, &delta0);

    let tg = TimeGrid::geometric(0.2, 16, 2.0, &g, 0.9).unwrap();
    let traj = ym_flow(&a0, &tg).unwrap();
    let base = direct_variational_run(&v0, &traj, &tg).unwrap();
    let pert = direct_variational_run(&v0_pert, &traj, &tg).unwrap();

    // commutator bound of the structure constants, measured once
    let c = calibrate_gfs(Grid::new(4, 1.0).unwrap(), gs, 1, 3)
        .unwrap()
        .commutator_bound;
    let b_inf: Vec<Real> = traj
        .curvatures
        .iter()
        .map(|b| b.lp_norm(Real::INFINITY).unwrap())
        .collect();
    let d0 = delta0.norm_l2();
    let mut worst = 0.0_f64;
    for n in 1..traj.len() {
        let integral = trapezoid(&traj.times[..=n], &b_inf[..=n]);
        let bound = d0 * (2.0 * c * integral).exp() * (1.0 + 1e-3);
        let dn = pert[n].sub(&base[n]).norm_l2();
        worst = worst.max(dn / bound);
    }
    criterion(
        "A9 groenwall-uniqueness",
        worst <= 1.0,
        format!("max ||delta v||/envelope {worst:.4} (c {c:.3})"),
    );
}

/// A10 — the runner binary produces byte-identical artifacts at thread
/// counts 1, 4, 8 for the same config and seed.
#[test]
fn a10_thread_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"schema_version = 1
group = "su2"
tau_sweep = [0.04, 0.02, 0.01]

[grid]
n = 8
l = 1.0

[time]
t_end = 0.05
gamma = 2.0
cfl_safety = 0.9
nodes = 12

[exponents]
a = 0.5
b = 0.5

[initial_data]
kind = "modes"
[[initial_data.modes]]
k = [1, 0, 1]
component = 0
basis = 0
amplitude = 0.4
phase = 0.3
[[initial_data.modes]]
k = [0, 1, 1]
component = 1
basis = 1
amplitude = 0.3
phase = 1.1
"#,
    )
    .unwrap();

    let run = |threads: usize| -> Vec<(String, Vec<u8>)> {
        let out = dir.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_ymlab"))
            .args(["recover", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "42", "--threads", &threads.to_string()])
            .status()
            .unwrap();
        assert!(status.success(), "run at {threads} threads failed");
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().into_string().unwrap(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let base = run(1);
    assert!(!base.is_empty(), "scenario produced no artifacts");
    let identical = [4usize, 8].iter().all(|&t| run(t) == base);
    criterion(
        "A10 thread-determinism",
        identical,
        format!("{} artifacts byte-compared across threads 1/4/8", base.len()),
    );
}
