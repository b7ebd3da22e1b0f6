use nalgebra::{DMatrix, DVector};

use super::{Derived, PendulumParams};
use crate::dynamics::{CoordinateKind, Partition, RobotModel};
use crate::error::Result;

/// Cart with an N-link planar pendulum, coordinates `(x, θ_1, ..., θ_N)`.
///
/// Angles are absolute and measured from the upright vertical.
#[derive(Debug, Clone)]
pub struct CartPendulum {
    params: PendulumParams,
    derived: Derived,
    partition: Partition,
    name: String,
}

impl CartPendulum {
    pub fn new(params: PendulumParams) -> Result<Self> {
        params.validate()?;
        let n = params.links();
        let name = match n {
            1 => "cart-pole".to_string(),
            2 => "double-pendulum cart".to_string(),
            3 => "triple-pendulum cart (n-link)".to_string(),
            _ => format!("{n}-link pendulum cart"),
        };
        Ok(CartPendulum { derived: params.derived(), partition: Partition::natural(1, n), params, name })
    }

    pub fn params(&self) -> &PendulumParams {
        &self.params
    }
}

pub fn cart_pole_model(params: PendulumParams) -> Result<CartPendulum> {
    if params.links() != 1 {
        return Err(crate::error::CeicError::Parameter("cart-pole takes exactly one link".into()));
    }
    CartPendulum::new(params)
}

pub fn double_pendulum_cart_model(params: PendulumParams) -> Result<CartPendulum> {
    if params.links() != 2 {
        return Err(crate::error::CeicError::Parameter("double pendulum takes exactly two links".into()));
    }
    CartPendulum::new(params)
}

impl RobotModel for CartPendulum {
    fn name(&self) -> &str {
        &self.name
    }

    fn dof(&self) -> usize {
        self.params.links() + 1
    }

    fn n_inputs(&self) -> usize {
        1
    }

    fn partition(&self) -> &Partition {
        &self.partition
    }

    fn matrices(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let n = self.params.links();
        let (mm, ii, l, g) = (&self.derived.moment, &self.derived.inertia, &self.params.lengths, self.params.gravity);
        let mut d = DMatrix::zeros(n + 1, n + 1);
        let mut c = DMatrix::zeros(n + 1, n + 1);
        let mut gv = DVector::zeros(n + 1);
        d[(0, 0)] = self.derived.total_mass;
        for j in 0..n {
            let th = q[j + 1];
            d[(0, j + 1)] = -mm[j] * th.cos();
            d[(j + 1, 0)] = d[(0, j + 1)];
            d[(j + 1, j + 1)] = ii[j];
            c[(0, j + 1)] = mm[j] * qdot[j + 1] * th.sin();
            gv[j + 1] = -mm[j] * g * th.sin();
            for i in 0..n {
                if i == j {
                    continue;
                }
                // coupling between links i and j goes through the outer link's moment
                let k = mm[i.max(j)] * l[i.min(j)];
                let dth = q[i + 1] - q[j + 1];
                d[(i + 1, j + 1)] = k * dth.cos();
                c[(i + 1, j + 1)] = k * dth.sin() * qdot[j + 1];
            }
        }
        let mut b = DMatrix::zeros(n + 1, 1);
        b[(0, 0)] = 1.0;
        (d, c, gv, b)
    }

    fn coordinate_labels(&self) -> Vec<String> {
        std::iter::once("x".to_string()).chain((1..=self.params.links()).map(|j| format!("theta{j}"))).collect()
    }

    fn coordinate_kinds(&self) -> Vec<CoordinateKind> {
        std::iter::once(CoordinateKind::Prismatic)
            .chain(std::iter::repeat_n(CoordinateKind::Revolute, self.params.links()))
            .collect()
    }

    fn potential_energy(&self, q: &DVector<f64>) -> Option<f64> {
        let g = self.params.gravity;
        Some(self.derived.moment.iter().enumerate().map(|(j, m)| m * g * q[j + 1].cos()).sum())
    }

    fn metadata(&self) -> Vec<(String, f64)> {
        self.params.metadata()
    }
}
