use nalgebra::{Complex, DMatrix};

use crate::error::{CeicError, Result};

/// Position/velocity gain pairs `(a_i, b_i)`, one pair of square matrices per level.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    pub levels: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl GainSchedule {
    /// One scalar pair per single-coordinate level.
    pub fn scalar(pairs: &[(f64, f64)]) -> Self {
        GainSchedule {
            levels: pairs
                .iter()
                .map(|&(a, b)| (DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b)))
                .collect(),
        }
    }

    /// Per-coordinate pairs grouped into diagonal blocks of the given sizes.
    pub fn grouped(pairs: &[(f64, f64)], sizes: &[usize]) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if pairs.len() != total {
            return Err(CeicError::Dimension { context: "gain pairs", expected: total, got: pairs.len() });
        }
        let mut levels = Vec::new();
        let mut k = 0;
        for &s in sizes {
            let block = &pairs[k..k + s];
            let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(s, block.iter().map(|p| p.0)));
            let b = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(s, block.iter().map(|p| p.1)));
            levels.push((a, b));
            k += s;
        }
        Ok(GainSchedule { levels })
    }

    /// The triple-pendulum gains `a_0 = 0.8, b_0 = 2.5, ..., a_3 = 50, b_3 = 15`.
    pub fn triple_default() -> Self {
        GainSchedule::scalar(&TRIPLE_GAINS)
    }

    pub fn check_dims(&self, sizes: &[usize]) -> Result<()> {
        if self.levels.len() != sizes.len() {
            return Err(CeicError::Dimension { context: "gain levels", expected: sizes.len(), got: self.levels.len() });
        }
        for ((a, b), &s) in self.levels.iter().zip(sizes) {
            if a.shape() != (s, s) || b.shape() != (s, s) {
                return Err(CeicError::Dimension { context: "gain block", expected: s, got: a.nrows() });
            }
        }
        Ok(())
    }
}

pub const TRIPLE_GAINS: [(f64, f64); 4] = [(0.8, 2.5), (35.0, 3.5), (38.0, 4.85), (50.0, 15.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub max_real: f64,
    pub hurwitz: bool,
}

/// Block companion matrix of the error dynamics `ë = -a e - b ė` over all levels.
pub fn error_dynamics_matrix(gains: &GainSchedule) -> DMatrix<f64> {
    let total: usize = gains.levels.iter().map(|(a, _)| a.nrows()).sum();
    let mut a_mat = DMatrix::zeros(2 * total, 2 * total);
    let mut off = 0;
    for (a, b) in &gains.levels {
        let s = a.nrows();
        a_mat.view_mut((2 * off, 2 * off + s), (s, s)).fill_with_identity();
        a_mat.view_mut((2 * off + s, 2 * off), (s, s)).copy_from(&(-a));
        a_mat.view_mut((2 * off + s, 2 * off + s), (s, s)).copy_from(&(-b));
        off += s;
    }
    a_mat
}

pub fn validate_gains(gains: &GainSchedule, sizes: &[usize]) -> Result<StabilityReport> {
    gains.check_dims(sizes)?;
    let eigenvalues: Vec<Complex<f64>> = error_dynamics_matrix(gains).complex_eigenvalues().iter().copied().collect();
    let max_real = eigenvalues.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport { hurwitz: max_real < 0.0, max_real, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_with_unit_gains_has_double_root() {
        let r = validate_gains(&GainSchedule::scalar(&[(1.0, 2.0)]), &[1]).unwrap();
        assert!(r.hurwitz);
        for ev in &r.eigenvalues {
            assert!((ev.re + 1.0).abs() < 1e-6 && ev.im.abs() < 1e-6);
        }
    }

    #[test]
    fn negative_stiffness_fails() {
        let r = validate_gains(&GainSchedule::scalar(&[(-1.0, 2.0)]), &[1]).unwrap();
        assert!(!r.hurwitz);
        assert!((r.max_real - (2f64.sqrt() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn grouped_blocks_are_diagonal() {
        let g = GainSchedule::grouped(&[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)], &[1, 2]).unwrap();
        assert_eq!(g.levels[1].0[(1, 1)], 5.0);
        assert_eq!(g.levels[1].1[(0, 1)], 0.0);
        assert!(g.check_dims(&[1, 1, 1]).is_err());
    }
}
