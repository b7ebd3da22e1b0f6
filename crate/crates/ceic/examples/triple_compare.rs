//! CEIC and EIC on the triple pendulum from the same start.

use ceic::controllers::eic_rank_diagnostic;
use ceic::prelude::*;

fn main() -> ceic::Result<()> {
    let model = TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2))?;
    let start = StateVector::from_slices(&[2.0, -0.1, 0.1, 0.35], &[0.0; 4], 0.0);
    let reference = || Box::new(Sinusoid { amplitude: 2.0, frequency: 0.8, offset: 0.0 });
    let cfg = SimConfig::new(start.clone());

    let chain = build_chain(&model, &PartitionPlan::identity(3), &StateVector::rest(4))?;
    let mut ceic = CeicController::new(chain, GainSchedule::triple_default(), reference(), BemSettings::default())?;
    let log = run_simulation(&model, &mut ceic, &cfg)?;
    println!("CEIC: {} (max internal-acceleration residual {:.1e})", log.outcome.describe(), log.max_realization.unwrap_or(0.0));

    let gains = GainSchedule::grouped(&ceic::controllers::TRIPLE_GAINS, &[1, 3])?;
    let mut eic = EicController::new(&model, gains, reference(), BemSettings::default())?;
    let log = run_simulation(&model, &mut eic, &cfg)?;
    let d = eic_rank_diagnostic(&model, &start)?;
    println!("EIC:  {} (rank(D_ua D_ua^+) = {}, {} directions unreachable)", log.outcome.describe(), d.rank, d.deficiency);
    Ok(())
}
