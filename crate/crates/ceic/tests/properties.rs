use ceic::cascade::{CascadeChain, PartitionPlan};
use ceic::dynamics::{eval_terms, forward_dynamics, Partition, StateVector};
use ceic::scenario::Scenario;
use ceic::systems::{CartPendulum, PendulumParams, TriplePendulumCart};
use nalgebra::DVector;
use proptest::prelude::*;

fn params(links: usize) -> impl Strategy<Value = PendulumParams> {
    (
        0.2f64..3.0,
        prop::collection::vec((0.05f64..2.0, 0.1f64..1.2, 0.2f64..0.8), links),
    )
        .prop_map(|(mc, links)| {
            let m: Vec<f64> = links.iter().map(|l| l.0).collect();
            let l: Vec<f64> = links.iter().map(|l| l.1).collect();
            let a: Vec<f64> = links.iter().map(|l| l.1 * l.2).collect();
            PendulumParams::with_links(mc, &m, &l, &a)
        })
}

fn state(dof: usize) -> impl Strategy<Value = StateVector> {
    (prop::collection::vec(-1.3f64..1.3, dof), prop::collection::vec(-3.0f64..3.0, dof))
        .prop_map(|(q, qd)| StateVector::from_slices(&q, &qd, 0.0))
}

proptest! {
    #[test]
    fn cascade_matches_full_model(p in params(3), s in state(4), u in -30.0f64..30.0, plan in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let model = CartPendulum::new(p).unwrap();
        let chain = CascadeChain::with_plan(&model, &PartitionPlan { unactuated_order: plan }).unwrap();
        let u = DVector::from_element(1, u);
        let levels = chain.levels(&model, &s).unwrap();
        let a = chain.reconstruct_accelerations(&levels, &u).unwrap();
        let b = forward_dynamics(&model, &s, &u).unwrap();
        prop_assert!((&a - &b).norm() <= 1e-8 * b.norm().max(1.0));
    }

    #[test]
    fn triple_inertia_positive_definite(p in params(3), s in state(4)) {
        let d = eval_terms(&TriplePendulumCart::new(p).unwrap(), &s).unwrap().d;
        prop_assert!(d.cholesky().is_some());
    }

    #[test]
    fn partition_permutation_round_trips(v in prop::collection::vec(-10.0f64..10.0, 4), ord in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let p = Partition::new(1, 3, ord).unwrap();
        let v = DVector::from_vec(v);
        prop_assert_eq!(p.unpermute(&p.permute(&v)), v);
    }

    #[test]
    fn scenario_serialization_is_stable(dt in 1e-4f64..1e-2, amp in 0.0f64..5.0, mass in 0.1f64..2.0, tol in 1e-12f64..1e-6) {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/triple_ceic.cfg")).unwrap();
        let mut scn = Scenario::parse(&text).unwrap();
        scn.simulation.dt = dt;
        scn.reference.amplitude = amp;
        scn.system.masses[1] = mass;
        scn.controller.bem.tol = tol;
        let once = scn.to_toml();
        let parsed = Scenario::parse(&once).unwrap();
        prop_assert_eq!(&parsed, &scn);
        prop_assert_eq!(parsed.to_toml(), once);
    }
}
