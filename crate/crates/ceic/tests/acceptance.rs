//! One line per acceptance criterion. Prints PASS or FAIL with the measured
//! numbers; set `CEIC_ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::path::Path;
use std::time::Instant;

use ceic::bem::{gamma_residual, solve_bem, BemSettings, Drive, SolverSettings};
use ceic::cascade::{build_chain, CascadeChain, PartitionPlan};
use ceic::controllers::{
    eic_rank_diagnostic, validate_gains, CeicController, Controller, EicController, GainSchedule, Sinusoid, TRIPLE_GAINS,
};
use ceic::dynamics::{eval_terms, forward_dynamics, total_energy, RobotModel, StateVector};
use ceic::runner::{execute, RunOptions, RunReport};
use ceic::scenario::Scenario;
use ceic::sim::{rk4, rk4_step};
use ceic::systems::{CartPendulum, PendulumParams, TriplePendulumCart};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REFERENCE_CART_REL_ERROR: f64 = 15.6;
const INITIAL: [f64; 4] = [2.0, -0.1, 0.1, 0.35];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)).expect("shipped scenario")
}

fn run(scn: &Scenario, name: &str) -> RunReport {
    execute(scn, name, &RunOptions::default()).expect("scenario builds")
}

fn systems() -> Vec<Box<dyn RobotModel>> {
    vec![
        Box::new(CartPendulum::new(PendulumParams::uniform(1, 1.0, 0.3, 0.4, 0.2)).unwrap()),
        Box::new(CartPendulum::new(PendulumParams::uniform(2, 1.0, 0.3, 0.4, 0.2)).unwrap()),
        Box::new(TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2)).unwrap()),
    ]
}

fn random_state(rng: &mut ChaCha8Rng, dof: usize, spread: f64) -> StateVector {
    let q: Vec<f64> = (0..dof).map(|i| if i == 0 { rng.gen_range(-2.0..2.0) } else { rng.gen_range(-spread..spread) }).collect();
    let qd: Vec<f64> = (0..dof).map(|_| rng.gen_range(-1.0..1.0)).collect();
    StateVector::from_slices(&q, &qd, 0.0)
}

fn cascade_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst: f64 = 0.0;
    for model in systems() {
        let chain = CascadeChain::with_plan(model.as_ref(), &PartitionPlan::identity(model.partition().m())).unwrap();
        for _ in 0..100 {
            let s = random_state(&mut rng, model.dof(), 1.0);
            let u = DVector::from_element(1, rng.gen_range(-20.0..20.0));
            let a = chain.reconstruct_accelerations(&chain.levels(model.as_ref(), &s).unwrap(), &u).unwrap();
            let b = forward_dynamics(model.as_ref(), &s, &u).unwrap();
            worst = worst.max((a - &b).norm() / b.norm().max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-9 && secs < 5.0, format!("max relative error {worst:.2e} over 300 pairs, {secs:.2} s"))
}

fn realization_along_run(ceic: &RunReport, secs: f64) -> Verdict {
    let realization = ceic.record.max_realization.unwrap_or(f64::INFINITY);
    let done = ceic.log.outcome.completed();
    verdict(
        done && realization <= 1e-6 && secs < 60.0,
        format!("run {}, max residual {realization:.2e} over {} steps, {secs:.2} s", ceic.log.outcome.describe(), ceic.record.steps),
    )
}

fn eic_failure(eic: &RunReport) -> Verdict {
    let model = TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2)).unwrap();
    let d = eic_rank_diagnostic(&model, &StateVector::from_slices(&INITIAL, &[0.0; 4], 0.0)).unwrap();
    let diverged = matches!(eic.record.diverged_at, Some(t) if t < 30.0) && eic.log.outcome.describe().contains("theta");
    verdict(
        diverged && d.rank == 1 && d.deficiency == 2,
        format!("EIC {}, rank(D_ua D_ua^+) = {}, deficiency {}", eic.log.outcome.describe(), d.rank, d.deficiency),
    )
}

fn ceic_success(ceic: &RunReport) -> Verdict {
    let Some(m) = &ceic.metrics else {
        return verdict(false, format!("CEIC {}", ceic.log.outcome.describe()));
    };
    let cart = m.get("e_r").map_or(f64::INFINITY, |r| r.rel_mean);
    let bound = 2.0 * REFERENCE_CART_REL_ERROR;
    verdict(
        ceic.record.max_angle <= 0.5 && cart <= bound,
        format!("completed, max window angle {:.3} rad, cart error {cart:.1}% (bound {bound:.1}%)", ceic.record.max_angle),
    )
}

fn ordering_across_parameters(default: &RunReport) -> Verdict {
    let base = scenario("triple_ceic.cfg");
    let alternates: [(f64, [f64; 3], [f64; 3], [f64; 3]); 3] = [
        (1.2, [0.5, 0.3, 0.2], [0.5, 0.4, 0.3], [0.25, 0.2, 0.15]),
        (2.0, [0.2, 0.2, 0.2], [0.5, 0.5, 0.5], [0.25, 0.25, 0.25]),
        (0.8, [0.4, 0.25, 0.1], [0.6, 0.45, 0.3], [0.3, 0.2, 0.12]),
    ];
    let mut reports = vec![("default".to_string(), default.clone())];
    for (k, (mc, m, l, a)) in alternates.iter().enumerate() {
        let mut scn = base.clone();
        scn.system.cart_mass = *mc;
        scn.system.masses = m.to_vec();
        scn.system.lengths = l.to_vec();
        scn.system.com = a.to_vec();
        reports.push((format!("set{}", k + 1), run(&scn, "alt")));
    }
    let mut holds = 0;
    let parts: Vec<String> = reports
        .iter()
        .map(|(name, r)| match &r.metrics {
            Some(m) if m.ordering_holds() => {
                holds += 1;
                format!("{name}: holds")
            }
            Some(_) => format!("{name}: violated"),
            None => format!("{name}: {}", r.log.outcome.describe()),
        })
        .collect();
    verdict(holds >= 3, format!("{holds} of {} sets; {}", reports.len(), parts.join("; ")))
}

fn bem_oracle() -> Verdict {
    let settings = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let mut worst_grid: f64 = 0.0;
    let mut instances = 0;
    let mut misses = 0;
    for model in systems() {
        let chain = CascadeChain::with_plan(model.as_ref(), &PartitionPlan::identity(model.partition().m())).unwrap();
        let mut done = 0;
        while done < 25 {
            let s = random_state(&mut rng, model.dof(), 0.3);
            let level = rng.gen_range(0..chain.level_count() - 1);
            let drive = Drive::Force(DVector::from_element(1, rng.gen_range(-2.0..2.0)));
            let f = |x: f64| gamma_residual(&chain, model.as_ref(), level, &s, &DVector::from_element(1, x), &drive, false).ok().map(|r| r[0]);
            let mut roots = Vec::new();
            let mut x = -1.5;
            let mut prev = f(x);
            while x < 1.5 {
                let cur = f(x + 1e-4);
                if let (Some(a), Some(b)) = (prev, cur) {
                    if a.signum() != b.signum() {
                        roots.push(x + 1e-4 * a.abs() / (a.abs() + b.abs()));
                    }
                }
                x += 1e-4;
                prev = cur;
            }
            if roots.is_empty() {
                continue;
            }
            let sol = solve_bem(&chain, model.as_ref(), level, &s, &drive, false, &settings, &DVector::zeros(1)).unwrap();
            let d = roots.iter().map(|r| (r - sol.q_e[0]).abs()).fold(f64::INFINITY, f64::min);
            if !sol.converged {
                misses += 1;
            }
            worst_grid = worst_grid.max(d);
            done += 1;
            instances += 1;
        }
    }
    let p = PendulumParams::uniform(1, 1.0, 0.3, 0.4, 0.2);
    let (mt, g) = (p.derived().total_mass, p.gravity);
    let cp = CartPendulum::new(p).unwrap();
    let chain = CascadeChain::with_plan(&cp, &PartitionPlan::identity(1)).unwrap();
    let mut worst_analytic: f64 = 0.0;
    for u in [-6.0, -1.5, 0.0, 0.7, 4.0] {
        let s = StateVector::from_slices(&[0.3, 0.05], &[0.2, 0.4], 0.0);
        let sol = solve_bem(&chain, &cp, 0, &s, &Drive::Force(DVector::from_element(1, u)), false, &settings, &DVector::zeros(1)).unwrap();
        worst_analytic = worst_analytic.max((sol.q_e[0] + (u / (mt * g)).atan()).abs());
    }
    verdict(
        misses == 0 && worst_grid <= 1e-4 && worst_analytic <= 1e-8,
        format!("{instances} instances, max grid distance {worst_grid:.1e} rad, analytic error {worst_analytic:.1e} rad"),
    )
}

fn gain_validation() -> Verdict {
    let r = validate_gains(&GainSchedule::triple_default(), &[1, 1, 1, 1]).unwrap();
    let flipped: Vec<(f64, f64)> = TRIPLE_GAINS.iter().map(|&(a, b)| (-a, -b)).collect();
    let f = validate_gains(&GainSchedule::scalar(&flipped), &[1, 1, 1, 1]).unwrap();
    verdict(r.hurwitz && !f.hurwitz, format!("max Re = {:.3} default, {:.3} sign-flipped", r.max_real, f.max_real))
}

fn numerics() -> Verdict {
    let triple = TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut spd = true;
    let mut passivity: f64 = 0.0;
    for _ in 0..1000 {
        let s = random_state(&mut rng, 4, 1.4);
        let d = eval_terms(&triple, &s).unwrap().d;
        spd &= (&d - d.transpose()).norm() < 1e-14 && d.clone().cholesky().is_some();
        let h = 1e-6;
        let (_, c, _, _) = triple.matrices(&s.q, &s.qdot);
        let ddot = (triple.matrices(&(&s.q + &s.qdot * h), &s.qdot).0 - triple.matrices(&(&s.q - &s.qdot * h), &s.qdot).0) / (2.0 * h);
        let r = (s.qdot.transpose() * (ddot - c * 2.0) * &s.qdot)[0];
        passivity = passivity.max(r.abs() / (1.0 + d.norm() * s.qdot.norm_squared()));
    }

    let drift = |dt: f64| {
        let s0 = StateVector::from_slices(&[0.0, 0.3, -0.2, 0.4], &[0.0; 4], 0.0);
        let e0 = total_energy(&triple, &s0).unwrap();
        let u = DVector::zeros(1);
        let mut s = s0;
        let mut worst: f64 = 0.0;
        for _ in 0..(2.0 / dt).round() as usize {
            s = rk4_step(&triple, &s, &u, dt).unwrap();
            worst = worst.max((total_energy(&triple, &s).unwrap() - e0).abs());
        }
        worst
    };
    let (coarse, fine) = (drift(2e-3), drift(1e-3));

    // Harmonic oscillator, exact solution (cos t, -sin t).
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let err = |n: usize| {
        let dt = 1.0 / n as f64;
        let mut y = DVector::from_vec(vec![1.0, 0.0]);
        for k in 0..n {
            y = rk4(|_, y: &DVector<f64>| Ok(&a * y), k as f64 * dt, &y, dt).unwrap();
        }
        ((y[0] - 1f64.cos()).powi(2) + (y[1] + 1f64.sin()).powi(2)).sqrt()
    };
    let order = (err(20) / err(40)).log2();

    verdict(
        spd && passivity <= 1e-8 && fine <= 2.5e-5 && coarse / fine > 10.0 && (order - 4.0).abs() < 0.2,
        format!(
            "D sym/PD on 1000 states: {spd}, passivity {passivity:.1e}, energy drift {fine:.2e} (x{:.1} at 2h), RK4 order {order:.2}",
            coarse / fine
        ),
    )
}

fn cart_pole_specialization() -> Verdict {
    let model = CartPendulum::new(PendulumParams::uniform(1, 1.0, 0.3, 0.4, 0.2)).unwrap();
    let gains = [(0.8, 2.5), (35.0, 3.5)];
    let reference = || Box::new(Sinusoid { amplitude: 0.5, frequency: 0.8, offset: 0.0 });
    let chain = build_chain(&model, &PartitionPlan::identity(1), &StateVector::rest(2)).unwrap();
    let mut ceic = CeicController::new(chain, GainSchedule::scalar(&gains), reference(), BemSettings::default()).unwrap();
    let mut eic = EicController::new(&model, GainSchedule::grouped(&gains, &[1, 1]).unwrap(), reference(), BemSettings::default()).unwrap();
    let dt = 1e-3;
    let mut s = StateVector::from_slices(&[0.3, 0.05], &[0.0, 0.0], 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let a = ceic.compute(&model, &s).unwrap();
        let b = eic.compute(&model, &s).unwrap();
        worst = worst.max((&a.u - &b.u).amax());
        s = rk4_step(&model, &s, &a.u, dt).unwrap();
        s.t = (k + 1) as f64 * dt;
    }
    verdict(worst <= 1e-9, format!("max |u_CEIC - u_EIC| = {worst:.1e} over 10 s"))
}

fn main() {
    let start = Instant::now();
    let ceic = run(&scenario("triple_ceic.cfg"), "triple_ceic");
    let ceic_secs = start.elapsed().as_secs_f64();
    let eic = run(&scenario("triple_eic.cfg"), "triple_eic");

    let results = [
        ("cascade equivalence", cascade_equivalence()),
        ("internal accelerations along a CEIC run", realization_along_run(&ceic, ceic_secs)),
        ("EIC loses balance", eic_failure(&eic)),
        ("CEIC keeps balance and tracks", ceic_success(&ceic)),
        ("link error ordering across parameter sets", ordering_across_parameters(&ceic)),
        ("BEM solver against grid and closed form", bem_oracle()),
        ("gain validation", gain_validation()),
        ("numerics hygiene", numerics()),
        ("cart-pole CEIC equals EIC", cart_pole_specialization()),
    ];
    let mut passed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        passed += v.pass as usize;
        println!("{} criterion {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {passed} of {} criteria pass", results.len());
    if passed < results.len() && std::env::var("CEIC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
