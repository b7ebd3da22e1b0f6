use nalgebra::{DMatrix, DVector};

use crate::dynamics::{CoordinateKind, Partition, RobotModel};
use crate::error::{CeicError, Result};

/// Presents another model with its coordinates listed in a different order.
///
/// Coordinate `k` of the wrapper is coordinate `perm[k]` of the inner model.
/// The partition is carried over so the actuated/unactuated split is the same
/// physical one.
pub struct Relabeled<M: RobotModel> {
    inner: M,
    perm: Vec<usize>,
    partition: Partition,
    name: String,
}

impl<M: RobotModel> Relabeled<M> {
    pub fn new(inner: M, perm: Vec<usize>) -> Result<Self> {
        let dof = inner.dof();
        let mut inv = vec![usize::MAX; dof];
        if perm.len() != dof {
            return Err(CeicError::Dimension { context: "relabel permutation", expected: dof, got: perm.len() });
        }
        for (k, &p) in perm.iter().enumerate() {
            if p >= dof || inv[p] != usize::MAX {
                return Err(CeicError::Parameter(format!("{perm:?} is not a permutation")));
            }
            inv[p] = k;
        }
        let ip = inner.partition();
        let ordering = ip.ordering().iter().map(|&o| inv[o]).collect();
        let partition = Partition::new(ip.n(), ip.m(), ordering)?;
        let name = format!("{} (relabeled)", inner.name());
        Ok(Relabeled { inner, perm, partition, name })
    }

    fn to_inner(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = v[k];
        }
        out
    }
}

impl<M: RobotModel> RobotModel for Relabeled<M> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dof(&self) -> usize {
        self.inner.dof()
    }

    fn n_inputs(&self) -> usize {
        self.inner.n_inputs()
    }

    fn partition(&self) -> &Partition {
        &self.partition
    }

    fn matrices(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let (d, c, g, b) = self.inner.matrices(&self.to_inner(q), &self.to_inner(qdot));
        let p = &self.perm;
        (
            DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(p[i], p[j])]),
            DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| c[(p[i], p[j])]),
            DVector::from_fn(g.len(), |i, _| g[p[i]]),
            DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(p[i], j)]),
        )
    }

    fn coordinate_labels(&self) -> Vec<String> {
        let l = self.inner.coordinate_labels();
        self.perm.iter().map(|&p| l[p].clone()).collect()
    }

    fn coordinate_kinds(&self) -> Vec<CoordinateKind> {
        let k = self.inner.coordinate_kinds();
        self.perm.iter().map(|&p| k[p]).collect()
    }

    fn potential_energy(&self, q: &DVector<f64>) -> Option<f64> {
        self.inner.potential_energy(&self.to_inner(q))
    }

    fn metadata(&self) -> Vec<(String, f64)> {
        self.inner.metadata()
    }
}
