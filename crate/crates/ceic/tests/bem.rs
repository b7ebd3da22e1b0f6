use ceic::bem::{gamma_residual, solve_bem, Drive, SolverSettings};
use ceic::cascade::{CascadeChain, PartitionPlan};
use ceic::dynamics::{RobotModel, StateVector};
use ceic::systems::{CartPendulum, PendulumParams, TriplePendulumCart};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain_for(model: &dyn RobotModel) -> CascadeChain {
    CascadeChain::with_plan(model, &PartitionPlan::identity(model.partition().m())).unwrap()
}

/// Sign changes of the residual on a 1e-4 rad grid over (-π/2, π/2), refined by bisection.
fn grid_roots(f: impl Fn(f64) -> Option<f64>) -> Vec<f64> {
    let step = 1e-4;
    let lim = std::f64::consts::FRAC_PI_2 - 1e-3;
    let mut roots = Vec::new();
    let mut x = -lim;
    let mut prev = f(x);
    while x < lim {
        let xn = x + step;
        let cur = f(xn);
        if let (Some(a), Some(b)) = (prev, cur) {
            if a == 0.0 || a.signum() != b.signum() {
                roots.push(x + step * a.abs() / (a.abs() + b.abs()));
            }
        }
        x = xn;
        prev = cur;
    }
    roots
}

fn check_system(model: &dyn RobotModel, seed: u64) {
    let chain = chain_for(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let settings = SolverSettings::default();
    let mut checked = 0;
    while checked < 25 {
        let dof = model.dof();
        let q: Vec<f64> = (0..dof).map(|i| if i == 0 { rng.gen_range(-1.0..1.0) } else { rng.gen_range(-0.3..0.3) }).collect();
        let qd: Vec<f64> = (0..dof).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let s = StateVector::from_slices(&q, &qd, 0.0);
        let level = rng.gen_range(0..chain.level_count() - 1);
        let drive = Drive::Force(DVector::from_element(1, rng.gen_range(-2.0..2.0)));
        let freeze = rng.gen_bool(0.5);
        let res = |x: f64| gamma_residual(&chain, model, level, &s, &DVector::from_element(1, x), &drive, freeze).ok().map(|r| r[0]);
        let roots = grid_roots(res);
        if roots.is_empty() {
            continue;
        }
        let sol = solve_bem(&chain, model, level, &s, &drive, freeze, &settings, &DVector::zeros(1)).unwrap();
        assert!(sol.converged, "{} level {level}: residual {}", model.name(), sol.residual_norm);
        let nearest = roots.iter().map(|r| (r - sol.q_e[0]).abs()).fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-4, "{} level {level}: Newton {} vs grid {roots:?}", model.name(), sol.q_e[0]);
        checked += 1;
    }
}

#[test]
fn newton_matches_grid_search() {
    check_system(&CartPendulum::new(PendulumParams::uniform(1, 1.0, 0.3, 0.4, 0.2)).unwrap(), 31);
    check_system(&CartPendulum::new(PendulumParams::uniform(2, 1.0, 0.3, 0.4, 0.2)).unwrap(), 32);
    check_system(&TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2)).unwrap(), 33);
}

// Balance of a cart-pole under a constant force: the pole leans so that
// gravity supplies the cart's acceleration, tan θ = -u / (M_t g).
#[test]
fn cart_pole_balance_angle() {
    let p = PendulumParams::uniform(1, 1.0, 0.3, 0.4, 0.2);
    let (mt, g) = (p.derived().total_mass, p.gravity);
    let model = CartPendulum::new(p).unwrap();
    let chain = chain_for(&model);
    let settings = SolverSettings::default();
    for &u in &[-6.0, -1.5, 0.0, 0.7, 4.0] {
        let s = StateVector::from_slices(&[0.3, 0.05], &[0.2, 0.4], 0.0);
        let force = Drive::Force(DVector::from_element(1, u));
        let sol = solve_bem(&chain, &model, 0, &s, &force, false, &settings, &DVector::zeros(1)).unwrap();
        assert!((sol.q_e[0] + (u / (mt * g)).atan()).abs() < 1e-8);
        let accel = Drive::Acceleration(DVector::from_element(1, u));
        let sol = solve_bem(&chain, &model, 0, &s, &accel, false, &settings, &DVector::zeros(1)).unwrap();
        assert!((sol.q_e[0] + (u / g).atan()).abs() < 1e-8);
    }
}

#[test]
fn reports_non_convergence() {
    let model = CartPendulum::new(PendulumParams::uniform(1, 1.0, 0.3, 0.4, 0.2)).unwrap();
    let chain = chain_for(&model);
    let s = StateVector::from_slices(&[0.0, 0.0], &[0.0, 0.0], 0.0);
    let tight = SolverSettings { max_iter: 1, ..SolverSettings::default() };
    let sol = solve_bem(&chain, &model, 0, &s, &Drive::Force(DVector::from_element(1, 8.0)), false, &tight, &DVector::from_element(1, 1.2)).unwrap();
    assert!(!sol.converged);
    assert_eq!(sol.iterations, 1);
}
