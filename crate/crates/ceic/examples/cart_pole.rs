//! Cart-pole tracking a sinusoid with CEIC, and the steady-window error table.

use ceic::prelude::*;

fn main() -> ceic::Result<()> {
    let model = CartPendulum::new(PendulumParams::uniform(1, 1.0, 0.3, 0.2, 0.1))?;
    let chain = build_chain(&model, &PartitionPlan::identity(1), &StateVector::rest(2))?;
    let reference = Sinusoid { amplitude: 0.5, frequency: 0.8, offset: 0.0 };
    let gains = GainSchedule::scalar(&[(0.8, 2.5), (35.0, 3.5)]);
    let mut ctl = CeicController::new(chain, gains, Box::new(reference), BemSettings::default())?;

    let cfg = SimConfig::new(StateVector::from_slices(&[0.5, 0.1], &[0.0; 2], 0.0));
    let log = run_simulation(&model, &mut ctl, &cfg)?;
    println!("{}", log.outcome.describe());
    let metrics = steady_state_errors(&log, cfg.steady_window)?;
    print!("{}", metrics.to_table());
    Ok(())
}
