//! Balance equilibrium of each cascade level under a fixed cart force.

use ceic::bem::{solve_bem, Drive, SolverSettings};
use ceic::cascade::{build_chain, PartitionPlan};
use ceic::dynamics::StateVector;
use ceic::systems::{PendulumParams, TriplePendulumCart};
use nalgebra::DVector;

fn main() -> ceic::Result<()> {
    let model = TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2))?;
    let chain = build_chain(&model, &PartitionPlan::identity(3), &StateVector::rest(4))?;
    let s = StateVector::from_slices(&[0.0, 0.05, -0.02, 0.01], &[0.0; 4], 0.0);
    let settings = SolverSettings::default();

    for force in [-2.0, 0.0, 2.0] {
        let drive = Drive::Force(DVector::from_element(1, force));
        for level in 0..chain.level_count() - 1 {
            let sol = solve_bem(&chain, &model, level, &s, &drive, false, &settings, &DVector::zeros(1))?;
            println!(
                "u = {force:>4} N, level {level}: theta{} = {:+.6} rad ({} iterations, residual {:.1e})",
                level + 1,
                sol.q_e[0],
                sol.iterations,
                sol.residual_norm
            );
        }
    }
    Ok(())
}
