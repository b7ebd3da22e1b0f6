//! Balance equilibrium manifolds: per-level instantaneous equilibria and their time derivatives.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeChain, LevelMatrices};
use crate::dynamics::{RobotModel, StateVector};
use crate::error::{CeicError, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuessPolicy {
    Previous,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub guess: GuessPolicy,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol: 1e-10, max_iter: 50, fd_step: 1e-6, guess: GuessPolicy::Previous }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.fd_step > 0.0) {
            return Err(CeicError::Parameter("solver needs tol > 0, max_iter >= 1, fd_step > 0".into()));
        }
        Ok(())
    }
}

/// What stays fixed while the equilibrium candidate moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputHold {
    /// The physical input computed by the parent level.
    Force,
    /// The parent level's commanded acceleration; the input is recomputed at the candidate.
    Acceleration,
}

/// How `q̇^e` and `q̈^e` are obtained from the stream of BEM solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DerivativeMode {
    /// Second-order backward differences of the raw samples.
    Backward,
    /// Critically damped second-order tracking filter with the given bandwidth (rad/s).
    Filtered { bandwidth: f64 },
    /// Derivatives taken as zero.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BemSettings {
    pub solver: SolverSettings,
    pub hold: InputHold,
    pub freeze_rest: bool,
    pub derivatives: DerivativeMode,
}

impl Default for BemSettings {
    fn default() -> Self {
        BemSettings {
            solver: SolverSettings::default(),
            hold: InputHold::Force,
            freeze_rest: false,
            derivatives: DerivativeMode::Filtered { bandwidth: 40.0 },
        }
    }
}

/// The quantity held fixed by the equilibrium condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    Force(DVector<f64>),
    Acceleration(DVector<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BemSolution {
    /// Parent level `i`; the solution is `q_a^{(i+1),e}`.
    pub level: usize,
    pub q_e: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `Γ` for the level-`i+1` equilibrium, in the level's own matrices.
///
/// `q̈_a^{(i+1)}` is zero. With `freeze_rest` the remaining accelerations are
/// zero as well, otherwise they follow from the level's unactuated rows.
pub fn gamma_from_level(next: &LevelMatrices, u: &DVector<f64>, freeze_rest: bool) -> Result<DVector<f64>> {
    let base = next.h_a() - next.b_a() * u;
    if freeze_rest || next.n_u() == 0 {
        return Ok(base);
    }
    let w = linalg::solve(&next.d_uu(), &(next.b_u() * u - next.h_u()), "D_uu in BEM residual")?;
    Ok(next.d_au() * w + base)
}

/// Residual of the level-`level` BEM at `candidate`.
///
/// The candidate replaces `q_a^{(level+1)}` in `s` and its velocity is set
/// to zero; everything else comes from `s` (velocities of the remaining
/// unactuated coordinates are also zeroed when `freeze_rest` is set).
pub fn gamma_residual(
    chain: &CascadeChain,
    model: &dyn RobotModel,
    level: usize,
    s: &StateVector,
    candidate: &DVector<f64>,
    drive: &Drive,
    freeze_rest: bool,
) -> Result<DVector<f64>> {
    let idx = chain.coords(level + 1);
    if candidate.len() != idx.len() {
        return Err(CeicError::Dimension { context: "BEM candidate", expected: idx.len(), got: candidate.len() });
    }
    let mut q = chain.to_chain(&s.q);
    let mut qd = chain.to_chain(&s.qdot);
    for (k, c) in idx.clone().enumerate() {
        q[c] = candidate[k];
        qd[c] = 0.0;
    }
    if freeze_rest {
        qd.rows_mut(idx.start, qd.len() - idx.start).fill(0.0);
    }
    let trial = StateVector::new(chain.to_model(&q), chain.to_model(&qd), s.t);
    let levels = chain.levels(model, &trial)?;
    let u = match drive {
        Drive::Force(u) => u.clone(),
        Drive::Acceleration(v) => levels[level].input_for_acceleration(v)?,
    };
    let r = gamma_from_level(&levels[level + 1], &u, freeze_rest)?;
    if !linalg::is_finite_vec(&r) {
        return Err(CeicError::NonFinite { context: "BEM residual", t: s.t });
    }
    Ok(r)
}

/// Newton iteration with a central-difference Jacobian and step halving.
#[allow(clippy::too_many_arguments)]
pub fn solve_bem(
    chain: &CascadeChain,
    model: &dyn RobotModel,
    level: usize,
    s: &StateVector,
    drive: &Drive,
    freeze_rest: bool,
    settings: &SolverSettings,
    guess: &DVector<f64>,
) -> Result<BemSolution> {
    settings.validate()?;
    let res = |x: &DVector<f64>| gamma_residual(chain, model, level, s, x, drive, freeze_rest);
    let mut x = guess.clone();
    let mut r = res(&x)?;
    let mut rn = r.norm();
    let mut iterations = 0;
    let dim = x.len();
    while rn > settings.tol && iterations < settings.max_iter {
        let h = settings.fd_step;
        let mut jac = DMatrix::zeros(r.len(), dim);
        for j in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            jac.set_column(j, &((res(&xp)? - res(&xm)?) / (2.0 * h)));
        }
        let step = linalg::solve(&jac, &(-&r), "BEM Jacobian").map_err(|e| CeicError::Bem {
            level: level + 1,
            reason: e.to_string(),
        })?;
        iterations += 1;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let xn = &x + &step * alpha;
            if let Ok(rr) = res(&xn) {
                let nn = rr.norm();
                if nn < rn {
                    x = xn;
                    r = rr;
                    rn = nn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(BemSolution { level, q_e: x, residual_norm: rn, iterations, converged: rn <= settings.tol })
}

/// Recent `(t, q_e)` samples of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct BemHistory {
    depth: usize,
    samples: VecDeque<(f64, DVector<f64>)>,
}

impl BemHistory {
    pub fn new(depth: usize) -> Self {
        BemHistory { depth: depth.max(3), samples: VecDeque::new() }
    }

    pub fn push(&mut self, t: f64, q_e: DVector<f64>) -> Result<()> {
        if let Some((last, _)) = self.samples.back() {
            if t <= *last {
                return Err(CeicError::Parameter(format!("BEM history time {t} does not follow {last}")));
            }
        }
        if self.samples.len() == self.depth {
            self.samples.pop_front();
        }
        self.samples.push_back((t, q_e));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latest(&self) -> Option<&DVector<f64>> {
        self.samples.back().map(|(_, q)| q)
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }
}

/// `(q̇^e, q̈^e)` by second-order backward differences.
///
/// Needs three uniformly spaced samples; a fourth makes `q̈^e` second-order
/// accurate too. Fewer than three samples give zeros.
pub fn bem_derivatives(history: &BemHistory) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = history.samples.len();
    let dim = history.latest().map_or(0, |q| q.len());
    if n < 3 {
        return Ok((DVector::zeros(dim), DVector::zeros(dim)));
    }
    let take = n.min(4);
    let s: Vec<&(f64, DVector<f64>)> = history.samples.iter().rev().take(take).collect();
    let h = s[0].0 - s[1].0;
    for w in s.windows(2) {
        if ((w[0].0 - w[1].0) - h).abs() > 1e-9 {
            return Err(CeicError::Parameter("BEM history is not uniformly spaced".into()));
        }
    }
    let q = |k: usize| &s[k].1;
    let vel = (q(0) * 3.0 - q(1) * 4.0 + q(2)) / (2.0 * h);
    let acc = if take == 4 {
        (q(0) * 2.0 - q(1) * 5.0 + q(2) * 4.0 - q(3)) / (h * h)
    } else {
        (q(0) - q(1) * 2.0 + q(2)) / (h * h)
    };
    Ok((vel, acc))
}

/// Per-level derivative source used by the controllers.
#[derive(Debug, Clone)]
pub struct BemTracker {
    mode: DerivativeMode,
    history: BemHistory,
    filter: Option<(DVector<f64>, DVector<f64>, f64)>,
}

impl BemTracker {
    pub fn new(mode: DerivativeMode) -> Self {
        BemTracker { mode, history: BemHistory::new(4), filter: None }
    }

    pub fn history(&self) -> &BemHistory {
        &self.history
    }

    pub fn reset(&mut self) {
        self.history.clear();
        self.filter = None;
    }

    /// Records the sample at `t` and returns `(q̇^e, q̈^e)`.
    pub fn update(&mut self, t: f64, q_e: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let repeat = self.history.samples.back().is_some_and(|(last, _)| *last == t);
        if !repeat {
            self.history.push(t, q_e.clone())?;
        }
        let zeros = || DVector::zeros(q_e.len());
        match self.mode {
            DerivativeMode::Off => Ok((zeros(), zeros())),
            DerivativeMode::Backward => bem_derivatives(&self.history),
            DerivativeMode::Filtered { bandwidth: w } => {
                let zero = zeros();
                let (y, yd, ydd, t0) = match self.filter.take() {
                    None => (q_e.clone(), zeros(), zero, t),
                    Some((y, yd, t0)) => {
                        let dt = t - t0;
                        let ydd = (q_e - &y) * (w * w) - &yd * (2.0 * w);
                        if dt > 0.0 {
                            // semi-implicit Euler keeps the filter stable for w dt < 1
                            let yd = yd + &ydd * dt;
                            let y = y + &yd * dt;
                            (y, yd, ydd, t)
                        } else {
                            (y, yd, ydd, t0)
                        }
                    }
                };
                self.filter = Some((y, yd.clone(), t0));
                Ok((yd, ydd))
            }
        }
    }
}
