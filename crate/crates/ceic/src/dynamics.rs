//! Manipulator-form dynamics `D q̈ + C q̇ + G = B u` with an actuated/unactuated split.

use nalgebra::{DMatrix, DVector};

use crate::error::{CeicError, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub t: f64,
}

impl StateVector {
    pub fn new(q: DVector<f64>, qdot: DVector<f64>, t: f64) -> Self {
        StateVector { q, qdot, t }
    }

    pub fn from_slices(q: &[f64], qdot: &[f64], t: f64) -> Self {
        StateVector::new(DVector::from_column_slice(q), DVector::from_column_slice(qdot), t)
    }

    pub fn rest(dof: usize) -> Self {
        StateVector::new(DVector::zeros(dof), DVector::zeros(dof), 0.0)
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && linalg::is_finite_vec(&self.q) && linalg::is_finite_vec(&self.qdot)
    }
}

/// Maps model coordinates onto the `[actuated | unactuated]` order.
///
/// `ordering[k]` is the model index of the k-th partitioned coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    m: usize,
    ordering: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, m: usize, ordering: Vec<usize>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(CeicError::Parameter(format!(
                "partition needs n >= 1 and m >= 1, got n = {n}, m = {m}"
            )));
        }
        if ordering.len() != n + m {
            return Err(CeicError::Dimension {
                context: "partition ordering",
                expected: n + m,
                got: ordering.len(),
            });
        }
        let mut seen = vec![false; n + m];
        for &k in &ordering {
            if k >= n + m || seen[k] {
                return Err(CeicError::Parameter(format!(
                    "partition ordering {ordering:?} is not a permutation"
                )));
            }
            seen[k] = true;
        }
        Ok(Partition { n, m, ordering })
    }

    /// Actuated coordinates first, in model order.
    pub fn natural(n: usize, m: usize) -> Self {
        Partition::new(n, m, (0..n + m).collect()).expect("natural partition")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dof(&self) -> usize {
        self.n + self.m
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn highly_underactuated(&self) -> bool {
        self.n < self.m
    }

    /// Model-order vector to partition order.
    pub fn permute(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(v.len(), self.ordering.iter().map(|&k| v[k]))
    }

    /// Partition-order vector back to model order.
    pub fn unpermute(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (p, &k) in self.ordering.iter().enumerate() {
            out[k] = v[p];
        }
        out
    }

    pub fn permute_rows(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(self.ordering[i], j)])
    }

    pub fn permute_square(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let o = &self.ordering;
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(o[i], o[j])])
    }
}

/// Coordinate kind, used for units and the divergence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateKind {
    Prismatic,
    Revolute,
}

impl CoordinateKind {
    pub fn unit(self) -> &'static str {
        match self {
            CoordinateKind::Prismatic => "m",
            CoordinateKind::Revolute => "rad",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorMatrices {
    pub d: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub g: DVector<f64>,
    pub b: DMatrix<f64>,
    pub h: DVector<f64>,
    /// Size of the leading actuated block.
    pub n: usize,
}

impl ManipulatorMatrices {
    /// Builds the set and fills `H = C q̇ + G`.
    pub fn new(d: DMatrix<f64>, c: DMatrix<f64>, g: DVector<f64>, b: DMatrix<f64>, qdot: &DVector<f64>, n: usize) -> Self {
        let h = &c * qdot + &g;
        ManipulatorMatrices { d, c, g, b, h, n }
    }

    pub fn dof(&self) -> usize {
        self.d.nrows()
    }

    fn m(&self) -> usize {
        self.dof() - self.n
    }

    pub fn d_aa(&self) -> DMatrix<f64> {
        self.d.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn d_au(&self) -> DMatrix<f64> {
        self.d.view((0, self.n), (self.n, self.m())).into_owned()
    }

    pub fn d_ua(&self) -> DMatrix<f64> {
        self.d.view((self.n, 0), (self.m(), self.n)).into_owned()
    }

    pub fn d_uu(&self) -> DMatrix<f64> {
        self.d.view((self.n, self.n), (self.m(), self.m())).into_owned()
    }

    pub fn h_a(&self) -> DVector<f64> {
        self.h.rows(0, self.n).into_owned()
    }

    pub fn h_u(&self) -> DVector<f64> {
        self.h.rows(self.n, self.m()).into_owned()
    }

    pub fn b_a(&self) -> DMatrix<f64> {
        self.b.rows(0, self.n).into_owned()
    }

    pub fn b_u(&self) -> DMatrix<f64> {
        self.b.rows(self.n, self.m()).into_owned()
    }

    fn is_finite(&self) -> bool {
        self.d.iter().chain(self.c.iter()).chain(self.g.iter()).chain(self.b.iter()).all(|v| v.is_finite())
    }
}

/// A hand-coded dynamics evaluator in its natural coordinate order.
pub trait RobotModel: Send + Sync {
    fn name(&self) -> &str;

    fn dof(&self) -> usize;

    fn n_inputs(&self) -> usize;

    fn partition(&self) -> &Partition;

    /// `(D, C, G, B)` in natural order.
    fn matrices(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>);

    fn coordinate_labels(&self) -> Vec<String>;

    fn coordinate_kinds(&self) -> Vec<CoordinateKind>;

    /// Potential energy, when the model knows it.
    fn potential_energy(&self, _q: &DVector<f64>) -> Option<f64> {
        None
    }

    /// Physical parameters as `(name, value)` pairs for reports.
    fn metadata(&self) -> Vec<(String, f64)> {
        Vec::new()
    }
}

fn check_dims(model: &dyn RobotModel, s: &StateVector) -> Result<()> {
    if s.q.len() != model.dof() || s.qdot.len() != model.dof() {
        return Err(CeicError::Dimension {
            context: "state vs model",
            expected: model.dof(),
            got: s.q.len().max(s.qdot.len()),
        });
    }
    Ok(())
}

/// Evaluates the model and returns the matrices in partition order.
pub fn eval_terms(model: &dyn RobotModel, s: &StateVector) -> Result<ManipulatorMatrices> {
    check_dims(model, s)?;
    let (d, c, g, b) = model.matrices(&s.q, &s.qdot);
    let p = model.partition();
    let mm = ManipulatorMatrices::new(
        p.permute_square(&d),
        p.permute_square(&c),
        p.permute(&g),
        p.permute_rows(&b),
        &p.permute(&s.qdot),
        p.n(),
    );
    if !mm.is_finite() {
        return Err(CeicError::NonFinite { context: "model evaluation", t: s.t });
    }
    Ok(mm)
}

/// Accelerations in natural order solving `D q̈ + H = B u`.
pub fn forward_dynamics(model: &dyn RobotModel, s: &StateVector, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_dims(model, s)?;
    if u.len() != model.n_inputs() {
        return Err(CeicError::Dimension { context: "input vector", expected: model.n_inputs(), got: u.len() });
    }
    let (d, c, g, b) = model.matrices(&s.q, &s.qdot);
    let rhs = &b * u - &c * &s.qdot - g;
    linalg::solve(&d, &rhs, "forward dynamics inertia matrix")
}

/// Kinetic plus potential energy, `None` if the model has no potential.
pub fn total_energy(model: &dyn RobotModel, s: &StateVector) -> Option<f64> {
    let (d, _, _, _) = model.matrices(&s.q, &s.qdot);
    let kinetic = 0.5 * s.qdot.dot(&(&d * &s.qdot));
    model.potential_energy(&s.q).map(|v| kinetic + v)
}
