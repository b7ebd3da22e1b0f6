//! Splits the triple pendulum into its cascade and checks the structural conditions.

use ceic::cascade::{build_chain, verify_conditions, PartitionPlan};
use ceic::dynamics::{forward_dynamics, StateVector};
use ceic::systems::{PendulumParams, TriplePendulumCart};
use nalgebra::DVector;

fn main() -> ceic::Result<()> {
    let model = TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2))?;
    let chain = build_chain(&model, &PartitionPlan::identity(3), &StateVector::rest(4))?;
    println!("k = {}, z = {}, levels {:?}", chain.k(), chain.z(), chain.dims());

    let s = StateVector::from_slices(&[2.0, -0.1, 0.1, 0.35], &[0.0; 4], 0.0);
    let levels = chain.levels(&model, &s)?;
    for lv in &levels {
        println!("S^{}: D = {:.5?}, B = {:.5?}", lv.index, lv.d.as_slice(), lv.b.as_slice());
    }

    let u = DVector::from_element(1, 3.0);
    let rebuilt = chain.reconstruct_accelerations(&levels, &u)?;
    let direct = forward_dynamics(&model, &s, &u)?;
    println!("cascade vs direct acceleration gap: {:.2e}", (rebuilt - direct).norm());

    println!("\n{}", verify_conditions(&chain, &model, &[s]).to_text());
    Ok(())
}
