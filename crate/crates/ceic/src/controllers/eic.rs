use super::{BemStage, ControlOutput, Controller, GainSchedule, LevelRecord, ReferenceSignal};
use crate::bem::BemSettings;
use crate::cascade::CascadeChain;
use crate::dynamics::{RobotModel, StateVector};
use crate::error::{CeicError, Result};
use crate::linalg;

/// Classic external/internal convertible controller.
///
/// One BEM over all unactuated coordinates; the actuated acceleration is
/// redesigned through `D_ua⁺`, which cannot reach every unactuated direction
/// when `n < m`.
pub struct EicController {
    chain: CascadeChain,
    gains: GainSchedule,
    reference: Box<dyn ReferenceSignal>,
    settings: BemSettings,
    stage: BemStage,
}

impl EicController {
    /// `gains` holds `(k_p1, k_d1)` then `(k_p2, k_d2)`.
    pub fn new(model: &dyn RobotModel, gains: GainSchedule, reference: Box<dyn ReferenceSignal>, settings: BemSettings) -> Result<Self> {
        let chain = CascadeChain::single_split(model)?;
        let p = model.partition();
        gains.check_dims(&[p.n(), p.m()])?;
        settings.solver.validate()?;
        let stage = BemStage::new(&settings);
        Ok(EicController { chain, gains, reference, settings, stage })
    }
}

impl Controller for EicController {
    fn name(&self) -> &str {
        "eic"
    }

    fn chain(&self) -> &CascadeChain {
        &self.chain
    }

    fn reset(&mut self) {
        self.stage.reset();
    }

    fn compute(&mut self, model: &dyn RobotModel, s: &StateVector) -> Result<ControlOutput> {
        let chain = &self.chain;
        let root = chain.root(model, s)?;
        let q = chain.to_chain(&s.q);
        let qd = chain.to_chain(&s.qdot);
        let (ia, iu) = (chain.coords(0), chain.coords(1));

        let r = self.reference.at(s.t);
        let e_a = q.rows(ia.start, ia.len()) - &r.q;
        let ed_a = qd.rows(ia.start, ia.len()) - &r.qd;
        let (kp1, kd1) = &self.gains.levels[0];
        let v_ext = &r.qdd - kp1 * &e_a - kd1 * &ed_a;
        let u_ext = root.input_for_acceleration(&v_ext)?;

        let (sol, q_e, qd_e, qdd_e) = self.stage.solve(chain, model, 0, s, &u_ext, &v_ext, &self.settings)?;
        let e_u = q.rows(iu.start, iu.len()) - &q_e;
        let ed_u = qd.rows(iu.start, iu.len()) - &qd_e;
        let (kp2, kd2) = &self.gains.levels[1];
        let v_u = &qdd_e - kp2 * &e_u - kd2 * &ed_u;

        let v_int = -linalg::pinv(&root.d_ua()) * (root.h_u() + root.d_uu() * &v_u);
        let u = root.input_for_acceleration(&v_int)?;
        if !linalg::is_finite_vec(&u) {
            return Err(CeicError::NonFinite { context: "EIC input", t: s.t });
        }
        let levels = vec![
            LevelRecord {
                level: 0,
                coords: ia,
                target: r.q,
                target_vel: r.qd,
                target_acc: r.qdd,
                error: e_a,
                error_dot: ed_a,
                v_ext,
                v_int,
                bem_residual: 0.0,
                bem_iterations: 0,
                bem_converged: true,
            },
            LevelRecord {
                level: 1,
                coords: iu,
                target: q_e,
                target_vel: qd_e,
                target_acc: qdd_e,
                error: e_u,
                error_dot: ed_u,
                v_ext: v_u.clone(),
                v_int: v_u,
                bem_residual: sol.residual_norm,
                bem_iterations: sol.iterations,
                bem_converged: sol.converged,
            },
        ];
        Ok(ControlOutput { u, levels })
    }
}

