//! Concrete cart-pendulum models.

mod chain;
mod relabel;
mod triple;

pub use chain::{cart_pole_model, double_pendulum_cart_model, CartPendulum};
pub use relabel::Relabeled;
pub use triple::{s1_closed_form_residual, triple_pendulum_model, TriplePendulumCart};

use crate::error::{CeicError, Result};

/// Physical parameters of a cart carrying a serial chain of rigid links.
#[derive(Debug, Clone, PartialEq)]
pub struct PendulumParams {
    /// Cart mass (kg).
    pub cart_mass: f64,
    /// Link masses (kg).
    pub masses: Vec<f64>,
    /// Link lengths (m).
    pub lengths: Vec<f64>,
    /// Joint-to-COM distances (m).
    pub com: Vec<f64>,
    /// Link moments of inertia about the COM (kg m²).
    pub inertias: Vec<f64>,
    /// Gravity (m/s²).
    pub gravity: f64,
}

/// Triple pendulum parameters are the general record with three links.
pub type TriplePendulumCartParams = PendulumParams;

/// Lumped constants `M_t`, `M_j`, `I_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub total_mass: f64,
    pub moment: Vec<f64>,
    pub inertia: Vec<f64>,
}

impl PendulumParams {
    /// Uniform links with slender-rod inertia `m l² / 12`.
    pub fn uniform(links: usize, cart_mass: f64, mass: f64, length: f64, com: f64) -> Self {
        PendulumParams {
            cart_mass,
            masses: vec![mass; links],
            lengths: vec![length; links],
            com: vec![com; links],
            inertias: vec![mass * length * length / 12.0; links],
            gravity: 9.81,
        }
    }

    /// Links given per-entry, inertia defaulting to `m l² / 12`.
    pub fn with_links(cart_mass: f64, masses: &[f64], lengths: &[f64], com: &[f64]) -> Self {
        PendulumParams {
            cart_mass,
            masses: masses.to_vec(),
            lengths: lengths.to_vec(),
            com: com.to_vec(),
            inertias: masses.iter().zip(lengths).map(|(m, l)| m * l * l / 12.0).collect(),
            gravity: 9.81,
        }
    }

    pub fn links(&self) -> usize {
        self.masses.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.masses.len();
        if n == 0 {
            return Err(CeicError::Parameter("at least one link is required".into()));
        }
        for (name, v) in [("lengths", &self.lengths), ("com", &self.com), ("inertias", &self.inertias)] {
            if v.len() != n {
                return Err(CeicError::Parameter(format!("{name} has {} entries, expected {n}", v.len())));
            }
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.cart_mass) || !positive(self.gravity) {
            return Err(CeicError::Parameter("cart mass and gravity must be positive".into()));
        }
        for j in 0..n {
            if !positive(self.masses[j]) || !positive(self.lengths[j]) {
                return Err(CeicError::Parameter(format!("link {} needs positive mass and length", j + 1)));
            }
            if !(self.com[j] > 0.0 && self.com[j] <= self.lengths[j]) {
                return Err(CeicError::Parameter(format!("link {} needs 0 < a <= l", j + 1)));
            }
            if !(self.inertias[j].is_finite() && self.inertias[j] >= 0.0) {
                return Err(CeicError::Parameter(format!("link {} has a negative inertia", j + 1)));
            }
        }
        Ok(())
    }

    pub fn derived(&self) -> Derived {
        let n = self.links();
        let above = |j: usize| self.masses[j + 1..].iter().sum::<f64>();
        Derived {
            total_mass: self.cart_mass + self.masses.iter().sum::<f64>(),
            moment: (0..n).map(|j| self.masses[j] * self.com[j] + above(j) * self.lengths[j]).collect(),
            inertia: (0..n)
                .map(|j| {
                    self.inertias[j] + self.masses[j] * self.com[j].powi(2) + above(j) * self.lengths[j].powi(2)
                })
                .collect(),
        }
    }

    pub(crate) fn metadata(&self) -> Vec<(String, f64)> {
        let mut out = vec![("m_c".to_string(), self.cart_mass), ("g".to_string(), self.gravity)];
        for j in 0..self.links() {
            let k = j + 1;
            out.push((format!("m_{k}"), self.masses[j]));
            out.push((format!("l_{k}"), self.lengths[j]));
            out.push((format!("a_{k}"), self.com[j]));
            out.push((format!("J_{k}"), self.inertias[j]));
        }
        out
    }
}
