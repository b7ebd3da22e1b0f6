use nalgebra::DVector;

use super::{BemStage, ControlOutput, Controller, GainSchedule, LevelRecord, ReferenceSignal};
use crate::bem::BemSettings;
use crate::cascade::CascadeChain;
use crate::dynamics::{RobotModel, StateVector};
use crate::error::{CeicError, Result};
use crate::linalg;

/// Cascaded controller: external pass down the levels, internal pass back up.
pub struct CeicController {
    chain: CascadeChain,
    gains: GainSchedule,
    reference: Box<dyn ReferenceSignal>,
    settings: BemSettings,
    stages: Vec<BemStage>,
}

impl CeicController {
    pub fn new(chain: CascadeChain, gains: GainSchedule, reference: Box<dyn ReferenceSignal>, settings: BemSettings) -> Result<Self> {
        let sizes: Vec<usize> = chain.dims().iter().map(|d| d.0).collect();
        gains.check_dims(&sizes)?;
        settings.solver.validate()?;
        let stages = (0..chain.level_count() - 1).map(|_| BemStage::new(&settings)).collect();
        Ok(CeicController { chain, gains, reference, settings, stages })
    }

    pub fn settings(&self) -> &BemSettings {
        &self.settings
    }
}

fn error_pair(q: &DVector<f64>, qd: &DVector<f64>, r: std::ops::Range<usize>, target: &DVector<f64>, target_vel: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    (q.rows(r.start, r.len()) - target, qd.rows(r.start, r.len()) - target_vel)
}

impl Controller for CeicController {
    fn name(&self) -> &str {
        "ceic"
    }

    fn chain(&self) -> &CascadeChain {
        &self.chain
    }

    fn realizes_internal_accelerations(&self) -> bool {
        true
    }

    fn reset(&mut self) {
        self.stages.iter_mut().for_each(BemStage::reset);
    }

    fn compute(&mut self, model: &dyn RobotModel, s: &StateVector) -> Result<ControlOutput> {
        let chain = &self.chain;
        let levels = chain.levels(model, s)?;
        let last = levels.len() - 1;
        let q = chain.to_chain(&s.q);
        let qd = chain.to_chain(&s.qdot);

        // forward pass
        let r = self.reference.at(s.t);
        let (e, ed) = error_pair(&q, &qd, chain.coords(0), &r.q, &r.qd);
        let (a, b) = &self.gains.levels[0];
        let mut v = &r.qdd - a * &e - b * &ed;
        let mut u = levels[0].input_for_acceleration(&v)?;
        let mut records = vec![LevelRecord {
            level: 0,
            coords: chain.coords(0),
            target: r.q,
            target_vel: r.qd,
            target_acc: r.qdd,
            error: e,
            error_dot: ed,
            v_ext: v.clone(),
            v_int: DVector::zeros(0),
            bem_residual: 0.0,
            bem_iterations: 0,
            bem_converged: true,
        }];
        for i in 0..last {
            let (sol, q_e, qd_e, qdd_e) = self.stages[i].solve(chain, model, i, s, &u, &v, &self.settings)?;
            let idx = chain.coords(i + 1);
            let (e, ed) = error_pair(&q, &qd, idx.clone(), &q_e, &qd_e);
            let (a, b) = &self.gains.levels[i + 1];
            v = &qdd_e - a * &e - b * &ed;
            u = if i + 1 < last {
                levels[i + 1].input_for_acceleration(&v)?
            } else {
                let lv = &levels[last];
                linalg::pinv(&lv.b) * (&lv.d * &v + &lv.h)
            };
            records.push(LevelRecord {
                level: i + 1,
                coords: idx,
                target: q_e,
                target_vel: qd_e,
                target_acc: qdd_e,
                error: e,
                error_dot: ed,
                v_ext: v.clone(),
                v_int: DVector::zeros(0),
                bem_residual: sol.residual_norm,
                bem_iterations: sol.iterations,
                bem_converged: sol.converged,
            });
        }

        // backward pass: u_{k+1}^int is final; propagate v^int and u^int upward
        records[last].v_int = v;
        for i in (0..last).rev() {
            let lv = &levels[i];
            let tail = DVector::from_iterator(
                lv.n_u(),
                records[i + 1..].iter().flat_map(|r| r.v_int.iter().copied()).collect::<Vec<_>>(),
            );
            let rhs = lv.b_a() * &u - lv.d_au() * &tail - lv.h_a();
            let v_int = linalg::solve(&lv.d_aa(), &rhs, &format!("D_aa at level {i}"))?;
            let force = lv.d_aa() * &v_int + lv.d_au() * &tail + lv.h_a();
            let ba = lv.b_a();
            if linalg::numerical_rank(&ba) < lv.n_a {
                return Err(CeicError::Singular { context: format!("B_a at level {i}"), sigma_min: linalg::smallest_singular_value(&ba) });
            }
            u = linalg::solve(&ba, &force, &format!("B_a at level {i}"))?;
            records[i].v_int = v_int;
        }
        if !linalg::is_finite_vec(&u) {
            return Err(CeicError::NonFinite { context: "CEIC input", t: s.t });
        }
        Ok(ControlOutput { u, levels: records })
    }
}
