//! Cascade of virtually actuated subsystems `S^0, S^1, ..., S^{k+1}`.
//!
//! Level `i + 1` is the Schur complement of level `i` with respect to its
//! actuated block. Each intermediate level virtually actuates `n`
//! coordinates and the last one keeps the remaining `z`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{RobotModel, StateVector};
use crate::error::{CeicError, Result};
use crate::linalg;

/// `D`, `H`, `B` of one cascade level, actuated block first.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMatrices {
    pub index: usize,
    pub d: DMatrix<f64>,
    pub h: DVector<f64>,
    pub b: DMatrix<f64>,
    /// Rows/columns of the (virtually) actuated block.
    pub n_a: usize,
}

impl LevelMatrices {
    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.dim() - self.n_a
    }

    pub fn d_aa(&self) -> DMatrix<f64> {
        self.d.view((0, 0), (self.n_a, self.n_a)).into_owned()
    }

    pub fn d_au(&self) -> DMatrix<f64> {
        self.d.view((0, self.n_a), (self.n_a, self.n_u())).into_owned()
    }

    pub fn d_ua(&self) -> DMatrix<f64> {
        self.d.view((self.n_a, 0), (self.n_u(), self.n_a)).into_owned()
    }

    pub fn d_uu(&self) -> DMatrix<f64> {
        self.d.view((self.n_a, self.n_a), (self.n_u(), self.n_u())).into_owned()
    }

    pub fn h_a(&self) -> DVector<f64> {
        self.h.rows(0, self.n_a).into_owned()
    }

    pub fn h_u(&self) -> DVector<f64> {
        self.h.rows(self.n_a, self.n_u()).into_owned()
    }

    pub fn b_a(&self) -> DMatrix<f64> {
        self.b.rows(0, self.n_a).into_owned()
    }

    pub fn b_u(&self) -> DMatrix<f64> {
        self.b.rows(self.n_a, self.n_u()).into_owned()
    }

    /// Input that makes the actuated block accelerate at `v`.
    ///
    /// The unactuated accelerations are eliminated exactly by solving
    /// `[D_{:,u}  -B] [q̈_u; u] = -H - D_{:,a} v`.
    pub fn input_for_acceleration(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let (dim, na, ni) = (self.dim(), self.n_a, self.b.ncols());
        if na != ni {
            return Err(CeicError::Dimension { context: "virtual input count", expected: na, got: ni });
        }
        let mut a = DMatrix::zeros(dim, dim);
        a.view_mut((0, 0), (dim, dim - na)).copy_from(&self.d.columns(na, dim - na));
        a.view_mut((0, dim - na), (dim, ni)).copy_from(&(-&self.b));
        let rhs = -&self.h - self.d.columns(0, na) * v;
        let sol = linalg::solve(&a, &rhs, &format!("level {} input elimination", self.index))?;
        Ok(sol.rows(dim - na, ni).into_owned())
    }

    /// Accelerations of all level coordinates under input `u`.
    pub fn accelerations(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        linalg::solve(&self.d, &(&self.b * u - &self.h), &format!("level {} inertia", self.index))
    }
}

/// Schur reduction of `level` onto its unactuated block.
pub fn reduce(level: &LevelMatrices, next_n_a: usize) -> Result<LevelMatrices> {
    let (na, nu) = (level.n_a, level.n_u());
    if next_n_a == 0 || next_n_a > nu {
        return Err(CeicError::Dimension { context: "next level size", expected: nu, got: next_n_a });
    }
    let ni = level.b.ncols();
    let mut rhs = DMatrix::zeros(na, nu + 1 + ni);
    rhs.view_mut((0, 0), (na, nu)).copy_from(&level.d_au());
    rhs.set_column(nu, &level.h_a());
    rhs.view_mut((0, nu + 1), (na, ni)).copy_from(&level.b_a());
    let y = linalg::solve_mat(&level.d_aa(), &rhs, &format!("D_aa at level {}", level.index)).map_err(|e| match e {
        CeicError::Singular { sigma_min, .. } => CeicError::Singular {
            context: format!("D_aa at level {}", level.index),
            sigma_min,
        },
        other => other,
    })?;
    let dua = level.d_ua();
    let d = level.d_uu() - &dua * y.columns(0, nu);
    let h = level.h_u() - &dua * y.column(nu);
    let b = level.b_u() - &dua * y.columns(nu + 1, ni);
    Ok(LevelMatrices { index: level.index + 1, d, h, b, n_a: next_n_a })
}

/// Which unactuated coordinates become virtually actuated, level by level.
///
/// `unactuated_order` permutes the unactuated block of the model partition;
/// consecutive groups of `n` are assigned to levels 1, 2, ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    pub unactuated_order: Vec<usize>,
}

impl PartitionPlan {
    pub fn identity(m: usize) -> Self {
        PartitionPlan { unactuated_order: (0..m).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeChain {
    n: usize,
    m: usize,
    /// Model index of each chain-ordered coordinate.
    order: Vec<usize>,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl CascadeChain {
    fn assemble(model: &dyn RobotModel, plan: &PartitionPlan, sizes: Vec<usize>) -> Result<Self> {
        let p = model.partition();
        let (n, m) = (p.n(), p.m());
        let mut seen = vec![false; m];
        if plan.unactuated_order.len() != m {
            return Err(CeicError::Dimension { context: "partition plan", expected: m, got: plan.unactuated_order.len() });
        }
        for &k in &plan.unactuated_order {
            if k >= m || seen[k] {
                return Err(CeicError::Parameter(format!("plan {:?} is not a permutation", plan.unactuated_order)));
            }
            seen[k] = true;
        }
        let ord = p.ordering();
        let order = ord[..n].iter().copied().chain(plan.unactuated_order.iter().map(|&k| ord[n + k])).collect();
        let offsets = sizes.iter().scan(0, |acc, s| {
            let o = *acc;
            *acc += s;
            Some(o)
        });
        Ok(CascadeChain { n, m, order, offsets: offsets.collect(), sizes })
    }

    /// Levels `S^0 .. S^{k+1}` with no rank check.
    pub fn with_plan(model: &dyn RobotModel, plan: &PartitionPlan) -> Result<Self> {
        let n = model.partition().n();
        let m = model.partition().m();
        let mut sizes = vec![n];
        let mut left = m;
        while left > n {
            sizes.push(n);
            left -= n;
        }
        sizes.push(left);
        Self::assemble(model, plan, sizes)
    }

    /// The one-shot split `[actuated | all unactuated]` used by plain EIC.
    pub fn single_split(model: &dyn RobotModel) -> Result<Self> {
        let p = model.partition();
        Self::assemble(model, &PartitionPlan::identity(p.m()), vec![p.n(), p.m()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of intermediate virtually actuated levels.
    pub fn k(&self) -> usize {
        self.sizes.len() - 2
    }

    /// Coordinates left in the last level.
    pub fn z(&self) -> usize {
        *self.sizes.last().expect("chain has levels")
    }

    pub fn level_count(&self) -> usize {
        self.sizes.len()
    }

    /// `(n_a, n_u)` of every level.
    pub fn dims(&self) -> Vec<(usize, usize)> {
        let total = self.n + self.m;
        self.sizes.iter().zip(&self.offsets).map(|(&s, &o)| (s, total - o - s)).collect()
    }

    /// Chain-ordered index range of the coordinates actuated at level `i`.
    pub fn coords(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.sizes[i]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn to_chain(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(v.len(), self.order.iter().map(|&k| v[k]))
    }

    pub fn to_model(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (c, &k) in self.order.iter().enumerate() {
            out[k] = v[c];
        }
        out
    }

    /// Level-0 matrices in chain order.
    pub fn root(&self, model: &dyn RobotModel, s: &StateVector) -> Result<LevelMatrices> {
        if s.q.len() != model.dof() || s.qdot.len() != model.dof() {
            return Err(CeicError::Dimension { context: "state vs model", expected: model.dof(), got: s.q.len() });
        }
        let (d, c, g, b) = model.matrices(&s.q, &s.qdot);
        let h = &c * &s.qdot + g;
        let o = &self.order;
        let level = LevelMatrices {
            index: 0,
            d: DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(o[i], o[j])]),
            h: DVector::from_fn(h.len(), |i, _| h[o[i]]),
            b: DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(o[i], j)]),
            n_a: self.sizes[0],
        };
        if !level.d.iter().chain(level.h.iter()).chain(level.b.iter()).all(|x| x.is_finite()) {
            return Err(CeicError::NonFinite { context: "model evaluation", t: s.t });
        }
        Ok(level)
    }

    /// Every level evaluated at `s`.
    pub fn levels(&self, model: &dyn RobotModel, s: &StateVector) -> Result<Vec<LevelMatrices>> {
        let mut out = vec![self.root(model, s)?];
        for i in 1..self.sizes.len() {
            let next = reduce(&out[i - 1], self.sizes[i])?;
            out.push(next);
        }
        Ok(out)
    }

    /// Accelerations (model order) rebuilt from the last level upward.
    pub fn reconstruct_accelerations(&self, levels: &[LevelMatrices], u: &DVector<f64>) -> Result<DVector<f64>> {
        let last = levels.last().expect("levels");
        let mut tail = last.accelerations(u)?;
        for lv in levels[..levels.len() - 1].iter().rev() {
            let rhs = &lv.b_a() * u - lv.h_a() - lv.d_au() * &tail;
            let qa = linalg::solve(&lv.d_aa(), &rhs, &format!("D_aa at level {}", lv.index))?;
            let mut joined = DVector::zeros(qa.len() + tail.len());
            joined.rows_mut(0, qa.len()).copy_from(&qa);
            joined.rows_mut(qa.len(), tail.len()).copy_from(&tail);
            tail = joined;
        }
        Ok(self.to_model(&tail))
    }
}

/// Builds the cascade and checks that every level's `B_a` has full rank at `reference`.
pub fn build_chain(model: &dyn RobotModel, plan: &PartitionPlan, reference: &StateVector) -> Result<CascadeChain> {
    let chain = CascadeChain::with_plan(model, plan)?;
    let levels = chain.levels(model, reference)?;
    for lv in &levels {
        let r = linalg::scaled_rank(&lv.b_a(), lv.d.norm());
        if r < lv.n_a {
            return Err(CeicError::Construction {
                level: lv.index,
                reason: format!("B_a has rank {r}, needs {}", lv.n_a),
            });
        }
    }
    Ok(chain)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelCondition {
    pub state: usize,
    pub level: usize,
    pub rank_d_aa: usize,
    pub rank_d_au: usize,
    pub rank_b_a: usize,
    pub sv_d_aa: Vec<f64>,
    pub sv_d_au: Vec<f64>,
    pub sv_b_a: Vec<f64>,
    /// `‖D_aa^{(i+1)} - B_a^{(i+1)} (B_a^{(i)})^{-1} D_{au,i+1}^{(i)}‖`, absent on the last level.
    pub nondegeneracy: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EicDiagnostic {
    pub state: usize,
    pub rank: usize,
    pub deficiency: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub model: String,
    pub dims: Vec<(usize, usize)>,
    pub levels: Vec<LevelCondition>,
    pub eic: Vec<EicDiagnostic>,
    pub errors: Vec<(usize, String)>,
}

/// Relative size under which the non-degeneracy term counts as zero.
pub const NONDEGENERACY_TOL: f64 = 1e-8;

/// `rank(D_ua D_ua⁺)` and `m - rank` for the model's own partition.
pub fn eic_rank(model: &dyn RobotModel, s: &StateVector) -> Result<(usize, usize)> {
    let mm = crate::dynamics::eval_terms(model, s)?;
    let dua = mm.d_ua();
    let prod = &dua * linalg::pinv(&dua);
    let r = linalg::numerical_rank(&prod);
    Ok((r, model.partition().m() - r))
}

pub fn verify_conditions(chain: &CascadeChain, model: &dyn RobotModel, states: &[StateVector]) -> ConditionReport {
    let mut report = ConditionReport {
        model: model.name().to_string(),
        dims: chain.dims(),
        levels: Vec::new(),
        eic: Vec::new(),
        errors: Vec::new(),
    };
    for (si, s) in states.iter().enumerate() {
        match eic_rank(model, s) {
            Ok((rank, deficiency)) => report.eic.push(EicDiagnostic { state: si, rank, deficiency }),
            Err(e) => report.errors.push((si, e.to_string())),
        }
        let levels = match chain.levels(model, s) {
            Ok(l) => l,
            Err(e) => {
                report.errors.push((si, e.to_string()));
                continue;
            }
        };
        for (i, lv) in levels.iter().enumerate() {
            let (daa, dau, ba) = (lv.d_aa(), lv.d_au(), lv.b_a());
            let sv = |a: &DMatrix<f64>| linalg::singular_values(a).iter().copied().collect::<Vec<_>>();
            let nondegeneracy = levels.get(i + 1).and_then(|next| {
                let cols = dau.columns(0, next.n_a).into_owned();
                let ba_inv_dau = linalg::solve_mat(&ba, &cols, "B_a").ok()?;
                let term = next.d_aa() - next.b_a() * ba_inv_dau;
                Some(term.norm())
            });
            let (rank_d_aa, rank_d_au, rank_b_a) =
                (linalg::numerical_rank(&daa), linalg::scaled_rank(&dau, lv.d.norm()), linalg::scaled_rank(&ba, lv.d.norm()));
            let scale = levels.get(i + 1).map(|n| n.d_aa().norm()).unwrap_or(1.0);
            let pass = rank_d_aa == lv.n_a
                && rank_d_au == lv.n_a.min(lv.n_u())
                && rank_b_a == lv.n_a
                && nondegeneracy.is_none_or(|v| v > NONDEGENERACY_TOL * scale);
            report.levels.push(LevelCondition {
                state: si,
                level: i,
                rank_d_aa,
                rank_d_au,
                rank_b_a,
                sv_d_aa: sv(&daa),
                sv_d_au: sv(&dau),
                sv_b_a: sv(&ba),
                nondegeneracy,
                pass,
            });
        }
    }
    report
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.errors.is_empty() && self.levels.iter().all(|l| l.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,level,rank_d_aa,rank_d_au,rank_b_a,smin_d_aa,smin_d_au,smin_b_a,nondegeneracy,pass\n");
        let smin = |v: &[f64]| v.iter().copied().reduce(f64::min).map_or(String::new(), |x| format!("{x:e}"));
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                l.state,
                l.level,
                l.rank_d_aa,
                l.rank_d_au,
                l.rank_b_a,
                smin(&l.sv_d_aa),
                smin(&l.sv_d_au),
                smin(&l.sv_b_a),
                l.nondegeneracy.map_or("".to_string(), |v| format!("{v:e}")),
                l.pass as u8
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model: {}", self.model);
        let dims: Vec<String> = self.dims.iter().map(|(a, u)| format!("{a}|{u}")).collect();
        let _ = writeln!(out, "levels (actuated|unactuated): {}", dims.join("  "));
        let states = self.levels.iter().map(|l| l.state + 1).max().unwrap_or(0);
        let _ = writeln!(out, "states checked: {states}");
        for i in 0..self.dims.len() {
            let rows: Vec<&LevelCondition> = self.levels.iter().filter(|l| l.level == i).collect();
            if rows.is_empty() {
                continue;
            }
            let failed = rows.iter().filter(|l| !l.pass).count();
            let nd_min = rows.iter().filter_map(|l| l.nondegeneracy).fold(f64::INFINITY, f64::min);
            let smin_ba = rows.iter().flat_map(|l| l.sv_b_a.iter().copied()).fold(f64::INFINITY, f64::min);
            let _ = write!(out, "level {i}: {} of {} states pass, min sigma(B_a) = {smin_ba:.3e}", rows.len() - failed, rows.len());
            if nd_min.is_finite() {
                let _ = write!(out, ", min non-degeneracy = {nd_min:.3e}");
            }
            out.push('\n');
        }
        if let Some(worst) = self.eic.iter().max_by_key(|d| d.deficiency) {
            let rank = self.eic.iter().map(|d| d.rank).max().unwrap_or(0);
            let _ = writeln!(out, "EIC rank(D_ua D_ua^+) = {rank}, deficiency = {}", worst.deficiency);
        }
        for (s, e) in &self.errors {
            let _ = writeln!(out, "state {s}: {e}");
        }
        let _ = writeln!(out, "result: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        out
    }
}
