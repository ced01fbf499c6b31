//! Acceptance checks. Each criterion prints one `PASS`/`FAIL` line; the
//! test fails if any line is `FAIL`.
//!
//! Runs every preset through both engines at n = 1024, dt = 1 ns (OBE) and
//! 10 ns (reduced), so expect several minutes in an optimized test build.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;

use dsm_core::analysis::{extrema, norm, trapezoid, ExtremumKind, Trajectory, DEFAULT_PROMINENCE};
use dsm_core::dsp::{self, CrankNicolson, DspSystem};
use dsm_core::eigen::{build_hamiltonian, effective_rabi, solve_modes};
use dsm_core::experiments::run::{compare_resolved, Comparison};
use dsm_core::experiments::{preset, ScenarioConfig};
use dsm_core::model::units::{MS, RAD_KHZ};
use dsm_core::model::{group_velocity, reduced_mass, reduced_vector_potential, ComplexField, RealField, SpatialGrid};
use dsm_core::obe::{self, ObeSolverConfig};
use dsm_core::potentials::PotentialProfile;
use dsm_core::scenario::Scenario;
use dsm_core::schedule::{Modulation, ScheduleSpec};

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        let line = format!("{} criterion {id}: {detail}\n", if ok { "PASS" } else { "FAIL" });
        // written past the test harness capture so the lines always show
        let _ = std::io::stdout().write_all(line.as_bytes());
        if !ok {
            self.failures.push(id.to_string());
        }
    }
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    ((got - want) / want).abs() <= rel
}

fn levels(s: &Scenario) -> Vec<f64> {
    (0..3).map(|n| s.catalog.level(n) / RAD_KHZ).collect()
}

fn rabi_table(s: &Scenario, beta: f64) -> [f64; 3] {
    let c = &s.catalog;
    let w = |n: usize, m: usize| {
        effective_rabi(beta, s.medium.omega_c, s.derived.eta, c.psi(n), c.psi(m)).unwrap().norm() / RAD_KHZ
    };
    [w(1, 0), w(2, 0), w(2, 1)]
}

fn first_crossing_below(traj: &Trajectory, mode: usize, after: f64, level: f64) -> Option<f64> {
    traj.times
        .iter()
        .zip(&traj.fidelities[mode])
        .find(|(t, f)| **t >= after && **f <= level)
        .map(|(t, _)| *t)
}

fn criterion_eigen(r: &mut Report, rabi: &Scenario, seq: &Scenario, deg: &Scenario) {
    let started = Instant::now();
    let h = build_hamiltonian(&rabi.grid, rabi.derived.m_reduced, &rabi.potential.u).unwrap();
    let cat = solve_modes(&h, 3).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let got: Vec<f64> = (0..3).map(|n| cat.level(n) / RAD_KHZ).collect();
    let ok = got.iter().zip([232.0, 601.0, 796.0]).all(|(g, w)| within(*g, w, 0.03)) && secs < 5.0;
    r.check("1", ok, format!("rabi levels {got:.1?} rad.kHz vs [232, 601, 796] (3%), solve {secs:.3} s (< 5 s)"));

    let a = levels(seq);
    let ok = a.iter().zip([407.0, 601.0, 1091.0]).all(|(g, w)| within(*g, w, 0.03));
    r.check("2a", ok, format!("stirap-seq levels {a:.1?} vs [407, 601, 1091] (3%)"));
    let b = levels(deg);
    let ok = b.iter().zip([456.0, 481.0, 1222.0]).all(|(g, w)| within(*g, w, 0.03));
    r.check("2b", ok, format!("stirap-deg levels {b:.1?} vs [456, 481, 1222] (3%)"));
}

fn criterion_rabi_frequencies(r: &mut Report, rabi: &Scenario, seq: &Scenario, deg: &Scenario) {
    for (id, s, beta, want) in [
        ("3a", seq, 0.055, [45.0, 475.0, 282.0]),
        ("3b", deg, 0.212, [18.0, 378.0, 440.0]),
    ] {
        let got = rabi_table(s, beta);
        let ok = got.iter().zip(want).all(|(g, w)| within(*g, w, 0.10));
        r.check(
            id,
            ok,
            format!("{} |Omega_21, 31, 32| = {got:.2?} rad.kHz at beta = {beta} vs {want:?} (10%)", s.name),
        );
    }
    let w21 = rabi_table(rabi, 0.07)[0] * RAD_KHZ;
    let period = 2.0 * PI / w21 / MS;
    r.check("3c", within(period, 0.15, 0.10), format!("rabi 2pi/|Omega_21| = {period:.4} ms vs 0.15 ms (10%)"));
}

fn criterion_rabi_dynamics(r: &mut Report, s: &Scenario, cmp: &Comparison) {
    let traj = &cmp.obe.trajectory;
    let onset = 0.06 * MS;
    let f1_onset = traj.fidelity_at(0, onset);
    let drop = first_crossing_below(traj, 0, onset, 0.05).map(|t| t - onset);
    let ok = f1_onset >= 0.99 && drop.is_some_and(|d| within(d, 0.09 * MS, 0.15));
    r.check(
        "4a",
        ok,
        format!(
            "F1 = {f1_onset:.4} at onset, reaches <= 0.05 after {} (0.09 ms +-15%)",
            drop.map_or("never".to_string(), |d| format!("{:.4} ms", d / MS))
        ),
    );
    let first_max = extrema(&traj.times, &traj.fidelities[1], DEFAULT_PROMINENCE)
        .into_iter()
        .find(|e| e.kind == ExtremumKind::Maximum);
    let ok = first_max.is_some_and(|e| e.value >= 0.9 && within(e.t, 0.15 * MS, 0.15));
    r.check(
        "4b",
        ok,
        match first_max {
            Some(e) => format!("first F2 maximum {:.4} at {:.4} ms (>= 0.9 at 0.15 ms +-15%)", e.value, e.t / MS),
            None => "no F2 maximum found".to_string(),
        },
    );
    let secs = cmp.obe.wall_seconds;
    r.check(
        "4c",
        secs <= 600.0 && s.grid.n == 1024 && cmp.obe.dt == 1e-9,
        format!("obe rabi run {secs:.1} s at n = {}, dt = {:e} s (<= 600 s)", s.grid.n, cmp.obe.dt),
    );
}

fn criterion_sequential(r: &mut Report, cmp: &Comparison) {
    let traj = &cmp.obe.trajectory;
    let f2_end = traj.fidelity_at(1, 1.9 * MS);
    r.check("5a", f2_end >= 0.9, format!("F2(1.9 ms) = {f2_end:.4} (>= 0.9)"));
    let (f1, f2) = (traj.fidelity_at(0, 1.03 * MS), traj.fidelity_at(1, 1.03 * MS));
    let band = |f: f64| (0.2..=0.8).contains(&f);
    r.check(
        "5b",
        (f1 - f2).abs() <= 0.3 && band(f1) && band(f2),
        format!("at 1.03 ms F1 = {f1:.4}, F2 = {f2:.4} (|F1 - F2| <= 0.3, both in [0.2, 0.8])"),
    );
    let secs = cmp.obe.wall_seconds;
    r.check("5c", secs <= 1200.0, format!("obe stirap-seq run {secs:.1} s (<= 1200 s)"));
}

fn criterion_degenerate(r: &mut Report, seq: &Scenario, deg: &Scenario, cmp: &Comparison) {
    let f2 = cmp.obe.trajectory.final_fidelity(1);
    let tau = match deg.schedule.modulation() {
        Modulation::GaussianPulses(p) if p.len() == 1 => p[0].tau,
        _ => f64::NAN,
    };
    r.check(
        "6a",
        f2 >= 0.9 && tau == 0.15 * MS,
        format!("final F2 = {f2:.4} (>= 0.9) with tau = {:.3} ms", tau / MS),
    );
    let (lo, hi) = seq.schedule.modulation_window().expect("sequential drive has a window");
    let ratio = (hi - lo) / tau;
    r.check(
        "6b",
        within(ratio, 6.7, 0.15),
        format!(
            "sequential window [{:.2}, {:.2}] ms over tau: ratio {ratio:.2} vs 6.7 (15%)",
            lo / MS,
            hi / MS
        ),
    );
}

fn criterion_cross_engine(r: &mut Report, runs: &[(&str, &Comparison)]) {
    for (name, cmp) in runs {
        let d = &cmp.max_deviation;
        r.check(
            &format!("7-{name}"),
            d.iter().all(|x| *x <= 0.1),
            format!("max_t |F_obe - F_dsp| = {d:.4?} (<= 0.1)"),
        );
    }
}

fn criterion_properties(r: &mut Report, rabi_cfg: &ScenarioConfig, rabi: &Scenario, seq: &Scenario, deg: &Scenario) {
    let delta_p = rabi.medium.delta_p;
    let eta = rabi.derived.eta;
    let omega_c = rabi.medium.omega_c;
    let sched = ScheduleSpec::new(
        Modulation::Sinusoidal { beta: 0.9, nu: 3.764e5, t_start: 0.0 },
        omega_c,
        1e-3,
    )
    .unwrap();
    let (mut power, mut ident) = (0.0f64, 0.0f64);
    let m = reduced_mass(eta, delta_p, omega_c).unwrap();
    for k in 0..1000 {
        let t = 1e-3 * (k as f64 * 0.618_033_988_75).fract();
        let (cr, cl) = sched.control_pair(t);
        power = power.max(((cr * cr + cl * cl) - omega_c * omega_c).abs() / (omega_c * omega_c));
        let composed = reduced_vector_potential(m, group_velocity(cr, cl, eta).unwrap());
        ident = ident.max((composed - sched.ax_reduced(eta, delta_p, t)).abs() / (eta / (4.0 * delta_p)));
    }
    r.check("8a", power <= 1e-12, format!("control power relative error {power:.2e} (<= 1e-12)"));
    r.check("8b", ident <= 1e-12, format!("A_x identity relative error {ident:.2e} (<= 1e-12)"));

    let mut ortho = 0.0f64;
    for s in [rabi, seq, deg] {
        for n in 0..3 {
            for k in 0..3 {
                let p: Vec<f64> = s.catalog.psi(n).values.iter().zip(&s.catalog.psi(k).values).map(|(a, b)| a * b).collect();
                let want = if n == k { 1.0 } else { 0.0 };
                ortho = ortho.max((trapezoid(&p, s.grid.dx()) - want).abs());
            }
        }
    }
    r.check("8c", ortho <= 1e-10, format!("eigenmode orthonormality error {ortho:.2e} (<= 1e-10)"));

    let mut short = rabi_cfg.clone();
    short.duration = 0.1 * MS;
    let sc = short.resolve().unwrap();
    let run = |a: f64| obe::run(&sc, &ObeSolverConfig { init_amplitude: a, ..short.obe_config() }).unwrap().trajectory;
    let (t1, t2) = (run(0.01), run(0.1));
    let lin = (0..3)
        .flat_map(|n| t1.fidelities[n].iter().zip(&t2.fidelities[n]).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    r.check("8d", lin <= 1e-9, format!("OBE amplitude 0.01 vs 0.1: max |dF| = {lin:.2e} (<= 1e-9)"));

    let grid = SpatialGrid::spanning(rabi.medium.length, 1024).unwrap();
    let free = |modulation: Modulation| DspSystem {
        potential: PotentialProfile { u: RealField::from_fn(grid, |_| 0.0), gamma_d: 0.0 },
        schedule: ScheduleSpec::new(modulation, omega_c, 1e-3).unwrap(),
        m_reduced: rabi.derived.m_reduced,
        diffusion_ratio: 0.0,
        eta,
        delta_p,
    };
    let mut cn = CrankNicolson::new(free(Modulation::Sinusoidal { beta: 0.07, nu: 3.764e5, t_start: 0.0 }), 1e-8).unwrap();
    let mut psi = ComplexField::from_fn(grid, |x| Complex64::new((-(x / 5e-4).powi(2)).exp(), 0.0));
    let n0 = norm(&psi);
    for k in 0..10_000 {
        cn.step(&mut psi, k as f64 * 1e-8).unwrap();
    }
    let drift = (norm(&psi) - n0).abs() / n0;
    r.check("8e", drift <= 1e-8, format!("CN lossless norm drift over 1e4 steps {drift:.2e} (<= 1e-8)"));

    let m = rabi.derived.m_reduced;
    let sigma0 = 2e-4;
    let mut cn = CrankNicolson::new(free(Modulation::Static), 1e-9).unwrap();
    let mut psi = ComplexField::from_fn(grid, |x| Complex64::new((-(x * x) / (4.0 * sigma0 * sigma0)).exp(), 0.0));
    for k in 0..600 {
        cn.step(&mut psi, k as f64 * 1e-9).unwrap();
    }
    let dens: Vec<f64> = psi.values.iter().map(|v| v.norm_sqr()).collect();
    let x2: Vec<f64> = grid.points().zip(&dens).map(|(x, d)| x * x * d).collect();
    let sigma = (trapezoid(&x2, grid.dx()) / trapezoid(&dens, grid.dx())).sqrt();
    let t = 600e-9;
    let expected = sigma0 * (1.0 + (t / (2.0 * m * sigma0 * sigma0)).powi(2)).sqrt();
    let spread = ((sigma - expected) / expected).abs();
    r.check("8f", spread <= 0.01, format!("free wavepacket width error {:.3}% (<= 1%)", spread * 100.0));

    let mut worst = Vec::new();
    for mode in 1..=3 {
        let mut c = rabi_cfg.clone();
        c.modulation = Modulation::Static;
        c.duration = 0.2 * MS;
        c.initial_mode = mode;
        let s = c.resolve().unwrap();
        let o = obe::run(&s, &c.obe_config()).unwrap().trajectory;
        let d = dsp::run(&s, &c.dsp_config()).unwrap().trajectory;
        let min = |tr: &Trajectory| tr.fidelities[mode - 1].iter().copied().fold(1.0, f64::min);
        worst.push((mode, min(&o), min(&d)));
    }
    let ok = worst.iter().all(|(_, o, d)| *o >= 0.99 && *d >= 0.99);
    let detail: Vec<String> = worst.iter().map(|(n, o, d)| format!("F{n} obe {o:.4} dsp {d:.4}")).collect();
    r.check("8g", ok, format!("static-drive stationarity over 0.2 ms, min {} (>= 0.99)", detail.join(", ")));
}

#[test]
fn acceptance() {
    let mut r = Report { failures: Vec::new() };
    let cfg = |name: &str| preset(name).unwrap();
    let (rabi_cfg, seq_cfg, deg_cfg) = (cfg("rabi"), cfg("stirap-seq"), cfg("stirap-deg"));
    let rabi = rabi_cfg.resolve().unwrap();
    let seq = seq_cfg.resolve().unwrap();
    let deg = deg_cfg.resolve().unwrap();

    criterion_eigen(&mut r, &rabi, &seq, &deg);
    criterion_rabi_frequencies(&mut r, &rabi, &seq, &deg);

    let rabi_cmp = compare_resolved(&rabi, &rabi_cfg).unwrap();
    criterion_rabi_dynamics(&mut r, &rabi, &rabi_cmp);
    let seq_cmp = compare_resolved(&seq, &seq_cfg).unwrap();
    criterion_sequential(&mut r, &seq_cmp);
    let deg_cmp = compare_resolved(&deg, &deg_cfg).unwrap();
    criterion_degenerate(&mut r, &seq, &deg, &deg_cmp);
    criterion_cross_engine(&mut r, &[("rabi", &rabi_cmp), ("stirap-seq", &seq_cmp), ("stirap-deg", &deg_cmp)]);

    criterion_properties(&mut r, &rabi_cfg, &rabi, &seq, &deg);

    assert!(r.failures.is_empty(), "failed criteria: {}", r.failures.join(", "));
}
