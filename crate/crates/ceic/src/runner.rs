//! Scenario execution and artifact files: trajectory, metrics, conditions,
//! summary and a gnuplot script.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cascade::{verify_conditions, ConditionReport};
use crate::dynamics::{CoordinateKind, StateVector};
use crate::error::{CeicError, Result};
use crate::scenario::Scenario;
use crate::sim::{run_simulation, steady_state_errors, ErrorMetrics, Outcome, TrajectoryLog};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub dt: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 1, dt: None }
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub log: TrajectoryLog,
    pub metrics: Option<ErrorMetrics>,
    pub conditions: ConditionReport,
    pub record: RunRecord,
}

/// The scalar facts that go at the top of `metrics.csv` and feed `summary.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub model: String,
    pub controller: String,
    pub outcome: String,
    pub diverged_at: Option<f64>,
    pub dt: f64,
    pub duration: f64,
    pub steps: usize,
    pub window: (f64, f64),
    pub max_realization: Option<f64>,
    pub bem_failures: usize,
    pub max_angle: f64,
    pub conditions: String,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.log.outcome.completed() {
            EXIT_OK
        } else {
            EXIT_DIVERGED
        }
    }
}

/// States used for the condition report: the initial state plus seeded
/// perturbations of it.
pub fn condition_states(initial: &StateVector, kinds: &[CoordinateKind], seed: u64, count: usize) -> Vec<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![initial.clone()];
    for _ in 0..count {
        let q = DVector::from_iterator(
            initial.dof(),
            initial.q.iter().zip(kinds).map(|(&q, k)| match k {
                CoordinateKind::Revolute => q + rng.gen_range(-0.2..0.2),
                CoordinateKind::Prismatic => q + rng.gen_range(-1.0..1.0),
            }),
        );
        let qd = DVector::from_iterator(initial.dof(), (0..initial.dof()).map(|_| rng.gen_range(-0.5..0.5)));
        out.push(StateVector::new(q, qd, initial.t));
    }
    out
}

/// Validates, simulates and returns the report; writes nothing.
pub fn execute(scn: &Scenario, name: &str, opts: &RunOptions) -> Result<RunReport> {
    let mut scn = scn.clone();
    if let Some(dt) = opts.dt {
        scn.simulation.dt = dt;
    }
    let (model, mut controller, cfg) = scn.build()?;
    let kinds = model.coordinate_kinds();
    let states = condition_states(&cfg.initial, &kinds, opts.seed, 24);
    let conditions = verify_conditions(controller.chain(), model.as_ref(), &states);
    let log = run_simulation(model.as_ref(), controller.as_mut(), &cfg)?;
    let metrics = if log.outcome.completed() { steady_state_errors(&log, cfg.steady_window).ok() } else { None };
    let diverged_at = match &log.outcome {
        Outcome::Completed => None,
        Outcome::Diverged { t, .. } | Outcome::Failed { t, .. } => Some(*t),
    };
    let record = RunRecord {
        scenario: name.to_string(),
        model: model.name().to_string(),
        controller: log.controller.clone(),
        outcome: log.outcome.describe(),
        diverged_at,
        dt: cfg.dt,
        duration: cfg.duration,
        steps: log.steps,
        window: cfg.steady_window,
        max_realization: log.max_realization,
        bem_failures: log.bem_failures,
        max_angle: log.max_angle_in(&kinds, cfg.steady_window),
        conditions: if conditions.all_pass() { "pass".into() } else { "fail".into() },
    };
    Ok(RunReport { name: name.to_string(), log, metrics, conditions, record })
}

impl RunRecord {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:e}"));
        vec![
            ("scenario", self.scenario.clone()),
            ("model", self.model.clone()),
            ("controller", self.controller.clone()),
            ("outcome", self.outcome.clone()),
            ("diverged_at", self.diverged_at.map_or("none".to_string(), |t| format!("{t}"))),
            ("dt", format!("{}", self.dt)),
            ("duration", format!("{}", self.duration)),
            ("steps", self.steps.to_string()),
            ("window", format!("{} {}", self.window.0, self.window.1)),
            ("max_realization_residual", opt(self.max_realization)),
            ("bem_failures", self.bem_failures.to_string()),
            ("max_window_angle", format!("{:e}", self.max_angle)),
            ("conditions", self.conditions.clone()),
        ]
    }

    fn from_pairs(lines: &[(String, String)]) -> Result<Self> {
        let get = |k: &str| {
            lines
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| CeicError::Config(format!("metrics.csv lacks '# {k}='")))
        };
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| CeicError::Config(format!("bad number for {k}"))) };
        let optnum = |k: &str| -> Result<Option<f64>> {
            let v = get(k)?;
            if v == "none" {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| CeicError::Config(format!("bad number for {k}")))
            }
        };
        let w = get("window")?;
        let mut ws = w.split_whitespace().map(|x| x.parse::<f64>());
        let window = match (ws.next(), ws.next()) {
            (Some(Ok(a)), Some(Ok(b))) => (a, b),
            _ => return Err(CeicError::Config("bad window".into())),
        };
        Ok(RunRecord {
            scenario: get("scenario")?,
            model: get("model")?,
            controller: get("controller")?,
            outcome: get("outcome")?,
            diverged_at: optnum("diverged_at")?,
            dt: num("dt")?,
            duration: num("duration")?,
            steps: num("steps")? as usize,
            window,
            max_realization: optnum("max_realization_residual")?,
            bem_failures: num("bem_failures")? as usize,
            max_angle: num("max_window_angle")?,
            conditions: get("conditions")?,
        })
    }
}

/// `metrics.csv`: `# key=value` lines, then one row per coordinate.
pub fn metrics_csv(record: &RunRecord, metrics: Option<&ErrorMetrics>) -> String {
    let mut out = String::new();
    for (k, v) in record.pairs() {
        let _ = writeln!(out, "# {k}={v}");
    }
    match metrics {
        Some(m) => out.push_str(&m.to_csv()),
        None => out.push_str("name,coordinate,unit,mean_abs,std_abs,amplitude,rel_mean_pct,rel_std_pct\n"),
    }
    out
}

/// Parses `metrics.csv` back into the record and the metric rows.
pub fn parse_metrics_csv(text: &str) -> Result<(RunRecord, Option<ErrorMetrics>)> {
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(kv) = line.strip_prefix("# ") {
            if let Some((k, v)) = kv.split_once('=') {
                pairs.push((k.to_string(), v.to_string()));
            }
        } else if !line.starts_with("name,") && !line.trim().is_empty() {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 8 {
                return Err(CeicError::Config(format!("metrics row has {} cells: {line}", c.len())));
            }
            let f = |i: usize| c[i].parse::<f64>().map_err(|_| CeicError::Config(format!("bad cell {}", c[i])));
            rows.push(crate::sim::MetricRow {
                name: c[0].to_string(),
                coordinate: c[1].to_string(),
                unit: c[2].to_string(),
                mean_abs: f(3)?,
                std_abs: f(4)?,
                amplitude: f(5)?,
                rel_mean: f(6)?,
                rel_std: f(7)?,
            });
        }
    }
    let record = RunRecord::from_pairs(&pairs)?;
    let metrics = if rows.is_empty() {
        None
    } else {
        let samples = 0;
        Some(ErrorMetrics { window: record.window, samples, rows })
    };
    Ok((record, metrics))
}

/// Human-readable summary built only from what `metrics.csv` holds.
pub fn summary_text(record: &RunRecord, metrics: Option<&ErrorMetrics>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario:    {}", record.scenario);
    let _ = writeln!(out, "model:       {}", record.model);
    let _ = writeln!(out, "controller:  {}", record.controller);
    let _ = writeln!(out, "outcome:     {}", record.outcome);
    let _ = writeln!(out, "steps:       {} of dt = {} s (duration {} s)", record.steps, record.dt, record.duration);
    let _ = writeln!(out, "conditions:  {}", record.conditions);
    let _ = writeln!(out, "BEM misses:  {}", record.bem_failures);
    if let Some(l) = record.max_realization {
        let _ = writeln!(out, "max |qdd_a^(j) - v_j^int|: {l:.3e}");
    }
    if let Some(m) = metrics {
        let _ = writeln!(out, "\nsteady-window errors, t in [{}, {}] s (cart in m, links in rad):", record.window.0, record.window.1);
        out.push_str(&m.to_table());
        let _ = writeln!(out, "max link angle in window: {:.3} rad", record.max_angle);
        let _ = writeln!(out, "link ordering |e_1| > |e_2| > ...: {}", if m.ordering_holds() { "holds" } else { "violated" });
    }
    out
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).map_or(0, |i| i + 1)
}

/// Gnuplot script over `trajectory.csv`.
pub fn plot_script(log: &TrajectoryLog, title: &str) -> String {
    let h = log.header();
    let mut out = String::new();
    let _ = writeln!(out, "# gnuplot -p plot.gp");
    let _ = writeln!(out, "set datafile separator ','\nset key autotitle columnhead\nset grid\nset xlabel 't (s)'");
    let _ = writeln!(out, "set multiplot layout 3,1 title '{title}'");
    let act = &log.level_labels[0];
    let mut parts = Vec::new();
    for l in act {
        parts.push(format!("'trajectory.csv' using 1:{} with lines", col(&h, &format!("q_{l}"))));
        parts.push(format!("'trajectory.csv' using 1:{} with lines dt 2", col(&h, &format!("target_{l}"))));
    }
    let _ = writeln!(out, "set ylabel 'm'\nplot {}", parts.join(", \\\n     "));
    let links: Vec<&String> = log.level_labels[1..].iter().flatten().collect();
    let mut parts = Vec::new();
    for l in &links {
        parts.push(format!("'trajectory.csv' using 1:{} with lines", col(&h, &format!("q_{l}"))));
        parts.push(format!("'trajectory.csv' using 1:{} with lines dt 2", col(&h, &format!("target_{l}"))));
    }
    let _ = writeln!(out, "set ylabel 'rad'\nplot {}", parts.join(", \\\n     "));
    let parts: Vec<String> = links.iter().map(|l| format!("'trajectory.csv' using 1:{} with lines", col(&h, &format!("err_{l}")))).collect();
    let _ = writeln!(out, "set ylabel 'error (rad)'\nplot {}", parts.join(", \\\n     "));
    let _ = writeln!(out, "unset multiplot");
    out
}

/// Writes the five artifacts into `dir`.
pub fn write_artifacts(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("trajectory.csv"), report.log.to_csv())?;
    std::fs::write(dir.join("metrics.csv"), metrics_csv(&report.record, report.metrics.as_ref()))?;
    let mut cond = report.conditions.to_text();
    cond.push('\n');
    cond.push_str(&report.conditions.to_csv());
    std::fs::write(dir.join("conditions.txt"), cond)?;
    std::fs::write(dir.join("summary.txt"), summary_text(&report.record, report.metrics.as_ref()))?;
    std::fs::write(dir.join("plot.gp"), plot_script(&report.log, &report.name))?;
    Ok(())
}

/// Rebuilds `summary.txt` from a run directory without simulating.
pub fn regenerate_summary(dir: &Path) -> Result<String> {
    let text = std::fs::read_to_string(dir.join("metrics.csv"))?;
    let (record, metrics) = parse_metrics_csv(&text)?;
    Ok(summary_text(&record, metrics.as_ref()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or("scenario".to_string(), |s| s.to_string_lossy().into_owned())
}

/// `run <file>`: returns the exit code and the directory written, if any.
pub fn run_file(path: &Path, out: Option<&Path>, opts: &RunOptions) -> (i32, Option<PathBuf>, String) {
    let scn = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => return (EXIT_CONFIG, None, e.to_string()),
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&scn.output.dir));
    let report = match execute(&scn, &stem(path), opts) {
        Ok(r) => r,
        Err(e) => return (EXIT_CONFIG, None, e.to_string()),
    };
    if let Err(e) = write_artifacts(&report, &dir) {
        return (EXIT_CONFIG, None, e.to_string());
    }
    let text = summary_text(&report.record, report.metrics.as_ref());
    (report.exit_code(), Some(dir), text)
}

/// Side-by-side table of two finished runs.
pub fn compare_text(a: &RunReport, b: &RunReport) -> String {
    let mut out = String::new();
    let status = |r: &RunReport| match r.record.diverged_at {
        None => "completed".to_string(),
        Some(t) => format!("diverged at t={t:.3} s"),
    };
    let _ = writeln!(out, "{}: {} / {}: {}", a.record.controller.to_uppercase(), status(a), b.record.controller.to_uppercase(), status(b));
    let _ = writeln!(out, "{:<10}{:>16}{:>16}{:>16}", "", a.name, b.name, "difference");
    match (&a.metrics, &b.metrics) {
        (Some(ma), Some(mb)) => {
            for ra in &ma.rows {
                if let Some(rb) = mb.get(&ra.name) {
                    let _ = writeln!(out, "{:<10}{:>16.6}{:>16.6}{:>16.6}", format!("|{}|", ra.name), ra.mean_abs, rb.mean_abs, rb.mean_abs - ra.mean_abs);
                }
            }
        }
        _ => {
            let _ = writeln!(out, "(metrics need both runs to complete)");
        }
    }
    out
}

fn compare_plot(a: &RunReport, b: &RunReport) -> String {
    let h = a.log.header();
    let mut out = String::from("# gnuplot -p compare.gp\nset datafile separator ','\nset grid\nset xlabel 't (s)'\n");
    let labels: Vec<&String> = a.log.level_labels.iter().flatten().collect();
    let _ = writeln!(out, "set multiplot layout {},1", labels.len());
    for l in labels {
        let c = col(&h, &format!("q_{l}"));
        let _ = writeln!(
            out,
            "plot '{}/trajectory.csv' using 1:{c} with lines title '{} {l}', '{}/trajectory.csv' using 1:{c} with lines title '{} {l}'",
            a.name, a.name, b.name, b.name
        );
    }
    out.push_str("unset multiplot\n");
    out
}

/// `compare <a> <b>`: both runs in parallel, artifacts in `out/<name>/`.
pub fn compare_files(pa: &Path, pb: &Path, out: Option<&Path>, opts: &RunOptions) -> (i32, String) {
    let (sa, sb) = match (Scenario::load(pa), Scenario::load(pb)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (EXIT_CONFIG, e.to_string()),
    };
    if sa.system != sb.system || sa.reference != sb.reference {
        return (EXIT_CONFIG, "scenarios differ in their system or reference sections".into());
    }
    let (mut na, mut nb) = (stem(pa), stem(pb));
    if na == nb {
        na.push_str("_a");
        nb.push_str("_b");
    }
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| execute(&sa, &na, opts));
        let hb = s.spawn(|| execute(&sb, &nb, opts));
        (ha.join().expect("run a"), hb.join().expect("run b"))
    });
    let (ra, rb) = match (ra, rb) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (EXIT_CONFIG, e.to_string()),
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out/compare"));
    let text = compare_text(&ra, &rb);
    let written = write_artifacts(&ra, &dir.join(&ra.name))
        .and_then(|_| write_artifacts(&rb, &dir.join(&rb.name)))
        .and_then(|_| std::fs::write(dir.join("compare.txt"), &text).map_err(Into::into))
        .and_then(|_| std::fs::write(dir.join("compare.gp"), compare_plot(&ra, &rb)).map_err(Into::into));
    match written {
        Ok(()) => (EXIT_OK, text),
        Err(e) => (EXIT_CONFIG, e.to_string()),
    }
}
