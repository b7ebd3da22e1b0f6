//! EIC baseline and the cascaded CEIC controller.

mod ceic;
mod eic;
mod gains;
mod reference;

pub use ceic::CeicController;
pub use eic::EicController;
pub use gains::{error_dynamics_matrix, validate_gains, GainSchedule, StabilityReport, TRIPLE_GAINS};
pub use reference::{Hold, RefPoint, ReferenceSignal, Sinusoid};

use std::ops::Range;

use nalgebra::DVector;

use crate::bem::{BemSettings, BemSolution, BemTracker, Drive, InputHold};
use crate::cascade::{self, CascadeChain};
use crate::dynamics::{forward_dynamics, RobotModel, StateVector};
use crate::error::Result;

/// Per-level signals of one control evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    /// Chain-ordered coordinate indices driven at this level.
    pub coords: Range<usize>,
    /// Desired value: the external reference at level 0, the BEM below.
    pub target: DVector<f64>,
    pub target_vel: DVector<f64>,
    pub target_acc: DVector<f64>,
    pub error: DVector<f64>,
    pub error_dot: DVector<f64>,
    pub v_ext: DVector<f64>,
    pub v_int: DVector<f64>,
    pub bem_residual: f64,
    pub bem_iterations: usize,
    pub bem_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub u: DVector<f64>,
    pub levels: Vec<LevelRecord>,
}

impl ControlOutput {
    pub fn all_bem_converged(&self) -> bool {
        self.levels.iter().all(|l| l.bem_converged)
    }
}

pub trait Controller: Send {
    fn name(&self) -> &str;

    fn chain(&self) -> &CascadeChain;

    fn compute(&mut self, model: &dyn RobotModel, s: &StateVector) -> Result<ControlOutput>;

    /// Forgets BEM warm starts and derivative history.
    fn reset(&mut self);

    /// Whether `v_int` of every level is the acceleration the input realizes.
    fn realizes_internal_accelerations(&self) -> bool {
        false
    }
}

/// `max_j ‖q̈_a^{(j)} - v_j^int‖` with accelerations from the full model under `out.u`.
pub fn realization_residual(chain: &CascadeChain, model: &dyn RobotModel, s: &StateVector, out: &ControlOutput) -> Result<f64> {
    let qdd = chain.to_chain(&forward_dynamics(model, s, &out.u)?);
    Ok(out
        .levels
        .iter()
        .map(|l| (qdd.rows(l.coords.start, l.coords.len()) - &l.v_int).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficiency {
    pub rank: usize,
    pub deficiency: usize,
}

/// `rank(D_ua D_ua⁺)` and the number of unactuated directions EIC cannot shape.
pub fn eic_rank_diagnostic(model: &dyn RobotModel, s: &StateVector) -> Result<RankDeficiency> {
    let (rank, deficiency) = cascade::eic_rank(model, s)?;
    Ok(RankDeficiency { rank, deficiency })
}

/// Warm-started BEM solve for one level with hold-last-converged fallback.
struct BemStage {
    last: Option<DVector<f64>>,
    tracker: BemTracker,
}

impl BemStage {
    fn new(settings: &BemSettings) -> Self {
        BemStage { last: None, tracker: BemTracker::new(settings.derivatives) }
    }

    fn reset(&mut self) {
        self.last = None;
        self.tracker.reset();
    }

    /// Returns the solution, the BEM value used and its derivatives.
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &mut self,
        chain: &CascadeChain,
        model: &dyn RobotModel,
        level: usize,
        s: &StateVector,
        u: &DVector<f64>,
        v: &DVector<f64>,
        settings: &BemSettings,
    ) -> Result<(BemSolution, DVector<f64>, DVector<f64>, DVector<f64>)> {
        let dim = chain.coords(level + 1).len();
        let guess = match (settings.solver.guess, &self.last) {
            (crate::bem::GuessPolicy::Previous, Some(prev)) => prev.clone(),
            _ => DVector::zeros(dim),
        };
        let drive = match settings.hold {
            InputHold::Force => Drive::Force(u.clone()),
            InputHold::Acceleration => Drive::Acceleration(v.clone()),
        };
        let sol = crate::bem::solve_bem(chain, model, level, s, &drive, settings.freeze_rest, &settings.solver, &guess)?;
        let q_e = if sol.converged {
            self.last = Some(sol.q_e.clone());
            sol.q_e.clone()
        } else {
            self.last.clone().unwrap_or_else(|| sol.q_e.clone())
        };
        let (qd_e, qdd_e) = self.tracker.update(s.t, &q_e)?;
        Ok((sol, q_e, qd_e, qdd_e))
    }
}
