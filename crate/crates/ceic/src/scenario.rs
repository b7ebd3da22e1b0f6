//! Scenario files: one TOML document with `system`, `controller`,
//! `simulation`, `reference` and `output` sections. Unknown keys are errors.

use serde::{Deserialize, Serialize};

use crate::bem::{BemSettings, DerivativeMode, GuessPolicy, InputHold, SolverSettings};
use crate::cascade::{build_chain, PartitionPlan};
use crate::controllers::{CeicController, Controller, EicController, GainSchedule, Sinusoid};
use crate::dynamics::{RobotModel, StateVector};
use crate::error::{CeicError, Result};
use crate::sim::SimConfig;
use crate::systems::{CartPendulum, PendulumParams, TriplePendulumCart};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemSection,
    pub controller: ControllerSection,
    pub simulation: SimulationSection,
    pub reference: ReferenceSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    CartPole,
    DoublePendulum,
    TriplePendulum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub model: ModelKind,
    pub cart_mass: f64,
    pub masses: Vec<f64>,
    pub lengths: Vec<f64>,
    pub com: Vec<f64>,
    /// COM moments of inertia; `m l² / 12` per link when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertias: Option<Vec<f64>>,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Order in which unactuated coordinates become virtually actuated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<usize>>,
}

fn default_gravity() -> f64 {
    9.81
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Ceic,
    Eic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: ControllerKind,
    /// One `[a, b]` pair per coordinate, actuated first, in cascade order.
    pub gains: Vec<[f64; 2]>,
    pub bem: BemSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeKind {
    Backward,
    Filtered,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BemSection {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub guess: GuessPolicy,
    pub hold: InputHold,
    pub freeze_rest: bool,
    pub derivatives: DerivativeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub duration: f64,
    pub initial_q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_qdot: Option<Vec<f64>>,
    pub steady_window: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub decimation: usize,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CeicError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CeicError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn params(&self) -> PendulumParams {
        let s = &self.system;
        let mut p = PendulumParams::with_links(s.cart_mass, &s.masses, &s.lengths, &s.com);
        if let Some(j) = &s.inertias {
            p.inertias = j.clone();
        }
        p.gravity = s.gravity;
        p
    }

    pub fn model(&self) -> Result<Box<dyn RobotModel>> {
        let p = self.params();
        let links = match self.system.model {
            ModelKind::CartPole => 1,
            ModelKind::DoublePendulum => 2,
            ModelKind::TriplePendulum => 3,
        };
        if p.links() != links {
            return Err(CeicError::Config(format!(
                "system.masses has {} entries but {:?} needs {links}",
                p.links(),
                self.system.model
            )));
        }
        let model: Box<dyn RobotModel> = match self.system.model {
            ModelKind::TriplePendulum => Box::new(TriplePendulumCart::new(p).map_err(config_err)?),
            _ => Box::new(CartPendulum::new(p).map_err(config_err)?),
        };
        Ok(model)
    }

    pub fn bem_settings(&self) -> Result<BemSettings> {
        let b = &self.controller.bem;
        let derivatives = match (b.derivatives, b.filter_bandwidth) {
            (DerivativeKind::Backward, _) => DerivativeMode::Backward,
            (DerivativeKind::Off, _) => DerivativeMode::Off,
            (DerivativeKind::Filtered, Some(w)) if w > 0.0 => DerivativeMode::Filtered { bandwidth: w },
            (DerivativeKind::Filtered, _) => {
                return Err(CeicError::Config("controller.bem.filter_bandwidth must be positive for filtered derivatives".into()))
            }
        };
        let solver = SolverSettings { tol: b.tol, max_iter: b.max_iter, fd_step: b.fd_step, guess: b.guess };
        solver.validate().map_err(config_err)?;
        Ok(BemSettings { solver, hold: b.hold, freeze_rest: b.freeze_rest, derivatives })
    }

    pub fn reference(&self) -> Sinusoid {
        let r = &self.reference;
        Sinusoid { amplitude: r.amplitude, frequency: r.frequency, offset: r.offset }
    }

    pub fn sim_config(&self, dof: usize) -> Result<SimConfig> {
        let s = &self.simulation;
        if s.initial_q.len() != dof {
            return Err(CeicError::Config(format!("simulation.initial_q has {} entries, model has {dof}", s.initial_q.len())));
        }
        let qdot = s.initial_qdot.clone().unwrap_or_else(|| vec![0.0; dof]);
        if qdot.len() != dof {
            return Err(CeicError::Config(format!("simulation.initial_qdot has {} entries, model has {dof}", qdot.len())));
        }
        let mut cfg = SimConfig::new(StateVector::from_slices(&s.initial_q, &qdot, 0.0));
        cfg.dt = s.dt;
        cfg.duration = s.duration;
        cfg.steady_window = (s.steady_window[0], s.steady_window[1]);
        cfg.log_decimation = self.output.decimation;
        if let Some(a) = s.angle_limit {
            cfg.angle_limit = a;
        }
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }

    /// Model, controller and simulation settings, all validated.
    pub fn build(&self) -> Result<(Box<dyn RobotModel>, Box<dyn Controller>, SimConfig)> {
        let model = self.model()?;
        let cfg = self.sim_config(model.dof())?;
        let settings = self.bem_settings()?;
        let pairs: Vec<(f64, f64)> = self.controller.gains.iter().map(|g| (g[0], g[1])).collect();
        let reference = Box::new(self.reference());
        let m = model.partition().m();
        let controller: Box<dyn Controller> = match self.controller.kind {
            ControllerKind::Ceic => {
                let plan = match &self.system.plan {
                    Some(p) => PartitionPlan { unactuated_order: p.clone() },
                    None => PartitionPlan::identity(m),
                };
                let chain = build_chain(model.as_ref(), &plan, &StateVector::rest(model.dof())).map_err(config_err)?;
                let sizes: Vec<usize> = chain.dims().iter().map(|d| d.0).collect();
                let gains = GainSchedule::grouped(&pairs, &sizes).map_err(gain_err)?;
                Box::new(CeicController::new(chain, gains, reference, settings).map_err(config_err)?)
            }
            ControllerKind::Eic => {
                let n = model.partition().n();
                let gains = GainSchedule::grouped(&pairs, &[n, m]).map_err(gain_err)?;
                Box::new(EicController::new(model.as_ref(), gains, reference, settings).map_err(config_err)?)
            }
        };
        Ok((model, controller, cfg))
    }
}

fn config_err(e: CeicError) -> CeicError {
    match e {
        CeicError::Config(_) => e,
        other => CeicError::Config(other.to_string()),
    }
}

fn gain_err(e: CeicError) -> CeicError {
    CeicError::Config(format!("controller.gains: {e}"))
}
