//! Eigenvalues of the closed-loop error dynamics for a gain schedule.

use ceic::controllers::{validate_gains, GainSchedule, TRIPLE_GAINS};

fn main() -> ceic::Result<()> {
    let report = validate_gains(&GainSchedule::triple_default(), &[1, 1, 1, 1])?;
    println!("triple gains {:?}", TRIPLE_GAINS);
    for ev in &report.eigenvalues {
        println!("  {:+.4} {:+.4}i", ev.re, ev.im);
    }
    println!("Hurwitz: {}", report.hurwitz);

    let soft = GainSchedule::scalar(&[(0.8, 2.5), (35.0, -0.5), (38.0, 4.85), (50.0, 15.0)]);
    let r = validate_gains(&soft, &[1, 1, 1, 1])?;
    println!("negative damping on theta1: Hurwitz {}, max Re {:+.3}", r.hurwitz, r.max_real);
    Ok(())
}
