use nalgebra::{DMatrix, DVector};

use super::{Derived, PendulumParams};
use crate::dynamics::{CoordinateKind, Partition, RobotModel, StateVector};
use crate::error::{CeicError, Result};

/// Triple inverted pendulum on a cart, coordinates `(x, θ_1, θ_2, θ_3)`.
///
/// The matrices are written entry by entry. The
/// Coriolis entry `C[2][1]` uses `sin(θ_2 - θ_1)`, which keeps `Ḋ - 2C`
/// skew-symmetric.
#[derive(Debug, Clone)]
pub struct TriplePendulumCart {
    params: PendulumParams,
    derived: Derived,
    partition: Partition,
}

impl TriplePendulumCart {
    pub fn new(params: PendulumParams) -> Result<Self> {
        params.validate()?;
        if params.links() != 3 {
            return Err(CeicError::Parameter(format!(
                "triple pendulum takes three links, got {}",
                params.links()
            )));
        }
        Ok(TriplePendulumCart { derived: params.derived(), partition: Partition::natural(1, 3), params })
    }

    pub fn params(&self) -> &PendulumParams {
        &self.params
    }

    pub fn derived(&self) -> &Derived {
        &self.derived
    }
}

pub fn triple_pendulum_model(params: PendulumParams) -> Result<TriplePendulumCart> {
    TriplePendulumCart::new(params)
}

impl RobotModel for TriplePendulumCart {
    fn name(&self) -> &str {
        "triple-pendulum cart"
    }

    fn dof(&self) -> usize {
        4
    }

    fn n_inputs(&self) -> usize {
        1
    }

    fn partition(&self) -> &Partition {
        &self.partition
    }

    fn matrices(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let Derived { total_mass: mt, moment: m, inertia: i } = &self.derived;
        let (m1, m2, m3) = (m[0], m[1], m[2]);
        let (l1, l2) = (self.params.lengths[0], self.params.lengths[1]);
        let g = self.params.gravity;
        let (t1, t2, t3) = (q[1], q[2], q[3]);
        let (w1, w2, w3) = (qdot[1], qdot[2], qdot[3]);
        let (s1, s2, s3) = (t1.sin(), t2.sin(), t3.sin());
        let (c1, c2, c3) = (t1.cos(), t2.cos(), t3.cos());
        let (s21, s31, s32) = ((t2 - t1).sin(), (t3 - t1).sin(), (t3 - t2).sin());
        let (c21, c31, c32) = ((t2 - t1).cos(), (t3 - t1).cos(), (t3 - t2).cos());

        #[rustfmt::skip]
        let d = DMatrix::from_row_slice(4, 4, &[
            *mt,      -m1 * c1,      -m2 * c2,      -m3 * c3,
            -m1 * c1, i[0],          m2 * l1 * c21, m3 * l1 * c31,
            -m2 * c2, m2 * l1 * c21, i[1],          m3 * l2 * c32,
            -m3 * c3, m3 * l1 * c31, m3 * l2 * c32, i[2],
        ]);
        #[rustfmt::skip]
        let c = DMatrix::from_row_slice(4, 4, &[
            0.0, m1 * w1 * s1,       m2 * w2 * s2,       m3 * w3 * s3,
            0.0, 0.0,                -m2 * l1 * w2 * s21, -m3 * l1 * w3 * s31,
            0.0, m2 * l1 * w1 * s21, 0.0,                -m3 * l2 * w3 * s32,
            0.0, m3 * l1 * w1 * s31, m3 * l2 * w2 * s32, 0.0,
        ]);
        let gv = DVector::from_vec(vec![0.0, -m1 * g * s1, -m2 * g * s2, -m3 * g * s3]);
        let b = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]);
        (d, c, gv, b)
    }

    fn coordinate_labels(&self) -> Vec<String> {
        ["x", "theta1", "theta2", "theta3"].iter().map(|s| s.to_string()).collect()
    }

    fn coordinate_kinds(&self) -> Vec<CoordinateKind> {
        let mut k = vec![CoordinateKind::Revolute; 4];
        k[0] = CoordinateKind::Prismatic;
        k
    }

    fn potential_energy(&self, q: &DVector<f64>) -> Option<f64> {
        let g = self.params.gravity;
        Some((0..3).map(|j| self.derived.moment[j] * g * q[j + 1].cos()).sum())
    }

    fn metadata(&self) -> Vec<(String, f64)> {
        self.params.metadata()
    }
}

/// Residual of the explicit first-level balance equation, with `ẍ` eliminated.
///
/// `thdd` are the link accelerations to test. The result is normalized by
/// the magnitude of the largest term, so an exact solution gives round-off.
/// Returns `None` when `M_1 cos θ_1` or `I_1 M_t - M_1² cos² θ_1` is close
/// to zero.
pub fn s1_closed_form_residual(params: &PendulumParams, s: &StateVector, u: f64, thdd: [f64; 3]) -> Option<f64> {
    const GUARD: f64 = 1e-9;
    let Derived { total_mass: mt, moment: m, inertia: i } = params.derived();
    let (l1, g) = (params.lengths[0], params.gravity);
    let (t1, t2, t3) = (s.q[1], s.q[2], s.q[3]);
    let (w1, w2, w3) = (s.qdot[1], s.qdot[2], s.qdot[3]);
    let (c1, c2, c3) = (t1.cos(), t2.cos(), t3.cos());
    let (s1, s2, s3) = (t1.sin(), t2.sin(), t3.sin());
    let (c21, c31) = ((t2 - t1).cos(), (t3 - t1).cos());
    let (s21, s31) = ((t2 - t1).sin(), (t3 - t1).sin());

    let input = m[0] * c1;
    let lead = i[0] * mt - m[0] * m[0] * c1 * c1;
    if input.abs() < GUARD * mt || lead.abs() < GUARD * mt * i[0] {
        return None;
    }
    let terms = [
        lead * thdd[0],
        m[1] * (l1 * c21 * mt - c1 * c2 * m[0]) * thdd[1],
        m[2] * (l1 * c31 * mt - c1 * c3 * m[0]) * thdd[2],
        -(m[1] * l1 * s21 * w2 * w2 + m[2] * l1 * s31 * w3 * w3 + m[0] * g * s1) * mt,
        m[0] * c1 * (m[0] * s1 * w1 * w1 + m[1] * s2 * w2 * w2 + m[2] * s3 * w3 * w3),
        -input * u,
    ];
    let scale = terms.iter().fold(1e-300f64, |a, t| a.max(t.abs()));
    Some(terms.iter().sum::<f64>() / scale)
}
