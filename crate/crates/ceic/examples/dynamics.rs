//! Manipulator matrices, forward dynamics and energy of the triple pendulum.

use ceic::dynamics::{eval_terms, forward_dynamics, total_energy, StateVector};
use ceic::systems::{PendulumParams, TriplePendulumCart};
use nalgebra::DVector;

fn main() -> ceic::Result<()> {
    let model = TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2))?;
    let s = StateVector::from_slices(&[2.0, -0.1, 0.1, 0.35], &[0.0, 0.5, -0.2, 0.1], 0.0);

    let terms = eval_terms(&model, &s)?;
    println!("D ={}", terms.d);
    println!("H = C qdot + G ={}", terms.h);

    for u in [-5.0, 0.0, 5.0] {
        let qdd = forward_dynamics(&model, &s, &DVector::from_element(1, u))?;
        println!("u = {u:>5}: qdd = {:.4?}", qdd.as_slice());
    }
    println!("total energy {:.6} J", total_energy(&model, &s).unwrap());
    Ok(())
}
