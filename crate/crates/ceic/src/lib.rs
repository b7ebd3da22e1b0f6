//! Cascaded external-internal convertible (CEIC) control for highly
//! underactuated balance robots.
//!
//! A robot with `n` actuated and `m > n` unactuated coordinates is split into
//! a cascade of virtually actuated subsystems. Each level tracks the balance
//! equilibrium manifold (BEM) handed down by the level above, and a backward
//! pass turns the last level's balance input into the physical actuation.
//!
//! ```no_run
//! use ceic::prelude::*;
//!
//! let model = TriplePendulumCart::new(PendulumParams::uniform(3, 1.0, 0.3, 0.4, 0.2)).unwrap();
//! let chain = build_chain(&model, &PartitionPlan::identity(3), &StateVector::rest(4)).unwrap();
//! let reference = Sinusoid { amplitude: 2.0, frequency: 0.8, offset: 0.0 };
//! let mut ctl = CeicController::new(chain, GainSchedule::triple_default(), Box::new(reference), BemSettings::default()).unwrap();
//! let cfg = SimConfig::new(StateVector::from_slices(&[2.0, -0.1, 0.1, 0.35], &[0.0; 4], 0.0));
//! let log = run_simulation(&model, &mut ctl, &cfg).unwrap();
//! println!("{}", log.outcome.describe());
//! ```

pub mod bem;
pub mod cascade;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod runner;
pub mod scenario;
pub mod sim;
pub mod systems;

pub use error::{CeicError, Result};

pub mod prelude {
    pub use crate::bem::{BemSettings, DerivativeMode, GuessPolicy, InputHold, SolverSettings};
    pub use crate::cascade::{build_chain, verify_conditions, CascadeChain, PartitionPlan};
    pub use crate::controllers::{
        validate_gains, CeicController, Controller, EicController, GainSchedule, ReferenceSignal, Sinusoid,
    };
    pub use crate::dynamics::{eval_terms, forward_dynamics, RobotModel, StateVector};
    pub use crate::sim::{run_simulation, steady_state_errors, SimConfig};
    pub use crate::systems::{CartPendulum, PendulumParams, TriplePendulumCart};
}
