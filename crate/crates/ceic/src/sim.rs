//! Fixed-step closed-loop simulation, trajectory logging and steady-window error statistics.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::controllers::{realization_residual, Controller};
use crate::dynamics::{forward_dynamics, CoordinateKind, RobotModel, StateVector};
use crate::error::{CeicError, Result};

/// One classical RK4 step of `ẏ = f(t, y)`.
pub fn rk4<F>(f: F, t: f64, y: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &(y + &k1 * (0.5 * dt)))?;
    let k3 = f(t + 0.5 * dt, &(y + &k2 * (0.5 * dt)))?;
    let k4 = f(t + dt, &(y + &k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Advances the model one step with `u` held constant.
pub fn rk4_step(model: &dyn RobotModel, s: &StateVector, u: &DVector<f64>, dt: f64) -> Result<StateVector> {
    if !(dt > 0.0) {
        return Err(CeicError::Parameter(format!("step must be positive, got {dt}")));
    }
    let n = s.dof();
    let mut y = DVector::zeros(2 * n);
    y.rows_mut(0, n).copy_from(&s.q);
    y.rows_mut(n, n).copy_from(&s.qdot);
    let f = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let st = StateVector::new(y.rows(0, n).into_owned(), y.rows(n, n).into_owned(), t);
        let qdd = forward_dynamics(model, &st, u)?;
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&st.qdot);
        out.rows_mut(n, n).copy_from(&qdd);
        Ok(out)
    };
    let y1 = rk4(f, s.t, &y, dt)?;
    Ok(StateVector::new(y1.rows(0, n).into_owned(), y1.rows(n, n).into_owned(), s.t + dt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub initial: StateVector,
    pub log_decimation: usize,
    pub steady_window: (f64, f64),
    /// Revolute coordinates past this magnitude end the run (rad).
    pub angle_limit: f64,
}

impl SimConfig {
    pub fn new(initial: StateVector) -> Self {
        SimConfig { dt: 1e-3, duration: 30.0, initial, log_decimation: 10, steady_window: (10.0, 30.0), angle_limit: std::f64::consts::FRAC_PI_2 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.duration > 0.0) || self.log_decimation == 0 {
            return Err(CeicError::Parameter("need dt > 0, duration > 0, decimation >= 1".into()));
        }
        let (a, b) = self.steady_window;
        if !(a >= 0.0 && b > a && b <= self.duration + 1e-9) {
            return Err(CeicError::Parameter(format!("steady window ({a}, {b}) must lie inside the run")));
        }
        if !self.initial.is_finite() {
            return Err(CeicError::Parameter("initial state must be finite".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    Diverged { t: f64, reason: String },
    Failed { t: f64, message: String },
}

impl Outcome {
    pub fn completed(&self) -> bool {
        matches!(self, Outcome::Completed)
    }

    pub fn describe(&self) -> String {
        match self {
            Outcome::Completed => "completed".to_string(),
            Outcome::Diverged { t, reason } => format!("diverged at t={t:.3} s ({reason})"),
            Outcome::Failed { t, message } => format!("controller failed at t={t:.3} s ({message})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSample {
    pub target: DVector<f64>,
    pub error: DVector<f64>,
    pub v_ext: DVector<f64>,
    pub v_int: DVector<f64>,
    pub bem_residual: f64,
    pub bem_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub u: DVector<f64>,
    pub levels: Vec<LevelSample>,
    pub realization: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub labels: Vec<String>,
    /// Coordinate labels driven by each level, in chain order.
    pub level_labels: Vec<Vec<String>>,
    pub controller: String,
    pub rows: Vec<LogRow>,
    pub outcome: Outcome,
    /// Largest realization residual over every simulated step.
    pub max_realization: Option<f64>,
    pub bem_failures: usize,
    pub steps: usize,
}

/// Closed loop: control evaluated once per step, then one RK4 step with it held.
pub fn run_simulation(model: &dyn RobotModel, controller: &mut dyn Controller, cfg: &SimConfig) -> Result<TrajectoryLog> {
    cfg.validate()?;
    let labels = model.coordinate_labels();
    let chain = controller.chain().clone();
    let level_labels = (0..chain.level_count())
        .map(|i| chain.coords(i).map(|c| labels[chain.order()[c]].clone()).collect())
        .collect();
    let kinds = model.coordinate_kinds();
    let mut log = TrajectoryLog {
        labels,
        level_labels,
        controller: controller.name().to_string(),
        rows: Vec::new(),
        outcome: Outcome::Completed,
        max_realization: None,
        bem_failures: 0,
        steps: 0,
    };
    let check_realization = controller.realizes_internal_accelerations();
    controller.reset();
    let mut s = cfg.initial.clone();
    let steps = cfg.steps();
    for k in 0..=steps {
        let out = match controller.compute(model, &s) {
            Ok(o) => o,
            Err(e) => {
                log.outcome = Outcome::Failed { t: s.t, message: e.to_string() };
                break;
            }
        };
        if !out.all_bem_converged() {
            log.bem_failures += 1;
        }
        let realization = if check_realization { realization_residual(&chain, model, &s, &out).ok() } else { None };
        if let Some(l) = realization {
            log.max_realization = Some(log.max_realization.map_or(l, |m: f64| m.max(l)));
        }
        if k % cfg.log_decimation == 0 || k == steps {
            log.rows.push(LogRow {
                t: s.t,
                q: s.q.clone(),
                qdot: s.qdot.clone(),
                u: out.u.clone(),
                levels: out
                    .levels
                    .iter()
                    .map(|l| LevelSample {
                        target: l.target.clone(),
                        error: l.error.clone(),
                        v_ext: l.v_ext.clone(),
                        v_int: l.v_int.clone(),
                        bem_residual: l.bem_residual,
                        bem_iterations: l.bem_iterations,
                    })
                    .collect(),
                realization,
            });
        }
        if k == steps {
            break;
        }
        let next = match rk4_step(model, &s, &out.u, cfg.dt) {
            Ok(n) => n,
            Err(e) => {
                log.outcome = Outcome::Diverged { t: s.t, reason: e.to_string() };
                break;
            }
        };
        // exact multiples of dt keep the time grid free of round-off drift
        s = StateVector::new(next.q, next.qdot, (k + 1) as f64 * cfg.dt + cfg.initial.t);
        log.steps = k + 1;
        if !s.is_finite() {
            log.outcome = Outcome::Diverged { t: s.t, reason: "non-finite state".into() };
            break;
        }
        if let Some(j) = (0..s.dof()).find(|&j| kinds[j] == CoordinateKind::Revolute && s.q[j].abs() > cfg.angle_limit) {
            log.outcome = Outcome::Diverged { t: s.t, reason: format!("|{}| = {:.3} rad", log.labels[j], s.q[j].abs()) };
            break;
        }
    }
    Ok(log)
}

impl TrajectoryLog {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend(self.labels.iter().map(|l| format!("q_{l}")));
        h.extend(self.labels.iter().map(|l| format!("qd_{l}")));
        let inputs = self.rows.first().map_or(1, |r| r.u.len());
        h.extend((0..inputs).map(|i| format!("u{i}")));
        for (i, labs) in self.level_labels.iter().enumerate() {
            for l in labs {
                h.push(format!("target_{l}"));
                h.push(format!("err_{l}"));
                h.push(format!("vext_{l}"));
                h.push(format!("vint_{l}"));
            }
            if i > 0 {
                h.push(format!("bem_res_{i}"));
                h.push(format!("bem_iter_{i}"));
            }
        }
        h.push("realization_residual".to_string());
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![format!("{:.6}", r.t)];
            cells.extend(r.q.iter().chain(r.qdot.iter()).chain(r.u.iter()).map(|v| format!("{v:.9e}")));
            for (i, l) in r.levels.iter().enumerate() {
                for c in 0..l.target.len() {
                    let vint = l.v_int.get(c).copied().unwrap_or(f64::NAN);
                    for v in [l.target[c], l.error[c], l.v_ext[c], vint] {
                        cells.push(format!("{v:.9e}"));
                    }
                }
                if i > 0 {
                    cells.push(format!("{:.3e}", l.bem_residual));
                    cells.push(l.bem_iterations.to_string());
                }
            }
            cells.push(r.realization.map_or(String::new(), |v| format!("{v:.3e}")));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Time series of `(t, error, target)` for one chain coordinate.
    fn series(&self, level: usize, k: usize) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.rows.iter().map(move |r| (r.t, r.levels[level].error[k], r.levels[level].target[k]))
    }

    /// Largest `|q|` over revolute coordinates inside a time window.
    pub fn max_angle_in(&self, model_kinds: &[CoordinateKind], window: (f64, f64)) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.t >= window.0 && r.t <= window.1)
            .flat_map(|r| r.q.iter().zip(model_kinds).filter(|(_, k)| **k == CoordinateKind::Revolute).map(|(q, _)| q.abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub name: String,
    pub coordinate: String,
    pub unit: String,
    pub mean_abs: f64,
    pub std_abs: f64,
    pub amplitude: f64,
    pub rel_mean: f64,
    pub rel_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics {
    pub window: (f64, f64),
    pub samples: usize,
    pub rows: Vec<MetricRow>,
}

/// Mean and population standard deviation of `|x|`.
pub fn abs_stats(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().map(|x| x.abs()).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x.abs() - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Steady-window statistics per coordinate; relative figures use the
/// half peak-to-peak amplitude of the reference (level 0) or the BEM.
pub fn steady_state_errors(log: &TrajectoryLog, window: (f64, f64)) -> Result<ErrorMetrics> {
    let inside = |t: f64| t >= window.0 - 1e-9 && t <= window.1 + 1e-9;
    let samples = log.rows.iter().filter(|r| inside(r.t)).count();
    if samples == 0 {
        return Err(CeicError::Parameter(format!("no samples in steady window ({}, {})", window.0, window.1)));
    }
    let mut rows = Vec::new();
    let mut link = 0;
    for (level, labs) in log.level_labels.iter().enumerate() {
        for (k, lab) in labs.iter().enumerate() {
            let (errs, targets): (Vec<f64>, Vec<f64>) = log.series(level, k).filter(|(t, _, _)| inside(*t)).map(|(_, e, x)| (e, x)).unzip();
            let (mean_abs, std_abs) = abs_stats(&errs);
            let hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = targets.iter().copied().fold(f64::INFINITY, f64::min);
            let amplitude = 0.5 * (hi - lo);
            let name = if level == 0 {
                if labs.len() == 1 { "e_r".to_string() } else { format!("e_r{}", k + 1) }
            } else {
                link += 1;
                format!("e_{link}")
            };
            let unit = if level == 0 { "m" } else { "rad" };
            let rel = |x: f64| if amplitude > 0.0 { 100.0 * x / amplitude } else { f64::NAN };
            rows.push(MetricRow {
                name,
                coordinate: lab.clone(),
                unit: unit.to_string(),
                mean_abs,
                std_abs,
                amplitude,
                rel_mean: rel(mean_abs),
                rel_std: rel(std_abs),
            });
        }
    }
    Ok(ErrorMetrics { window, samples, rows })
}

impl ErrorMetrics {
    pub fn get(&self, name: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Mean absolute errors of the unactuated coordinates strictly decrease outward.
    pub fn ordering_holds(&self) -> bool {
        let links: Vec<f64> = self.rows.iter().filter(|r| r.name != "e_r" && !r.name.starts_with("e_r")).map(|r| r.mean_abs).collect();
        links.windows(2).all(|w| w[0] > w[1])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,coordinate,unit,mean_abs,std_abs,amplitude,rel_mean_pct,rel_std_pct\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.9e},{:.9e},{:.9e},{:.6},{:.6}",
                r.name, r.coordinate, r.unit, r.mean_abs, r.std_abs, r.amplitude, r.rel_mean, r.rel_std
            );
        }
        out
    }

    /// Two-row table: absolute and relative mean ± std per coordinate.
    pub fn to_table(&self) -> String {
        let w = 16;
        let mut out = format!("{:<14}", "");
        for r in &self.rows {
            let _ = write!(out, "{:>w$}", format!("|{}|", r.name));
        }
        out.push('\n');
        let _ = write!(out, "{:<14}", "Absolute");
        for r in &self.rows {
            let _ = write!(out, "{:>w$}", format!("{:.3} ± {:.3}", r.mean_abs, r.std_abs));
        }
        out.push('\n');
        let _ = write!(out, "{:<14}", "Relative (%)");
        for r in &self.rows {
            let _ = write!(out, "{:>w$}", format!("{:.1} ± {:.1}", r.rel_mean, r.rel_std));
        }
        out.push('\n');
        out
    }
}
