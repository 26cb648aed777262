//! Phase-type jump-size laws: absorption times of a finite continuous-time
//! Markov chain with initial law `alpha` over `d` transient states and
//! sub-intensity matrix `T`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest deviation of `sum(alpha)` from one that [`PhaseTypeDistribution::normalized`]
/// treats as rounding in a printed representation.
pub const ALPHA_ROUNDING_TOLERANCE: f64 = 1e-3;

const STRUCTURE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhaseTypeRepr", into = "PhaseTypeRepr")]
pub struct PhaseTypeDistribution {
    alpha: Vec<f64>,
    t: DMatrix<f64>,
    exit: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PhaseTypeRepr {
    alpha: Vec<f64>,
    t: Vec<Vec<f64>>,
}

impl TryFrom<PhaseTypeRepr> for PhaseTypeDistribution {
    type Error = Error;

    fn try_from(r: PhaseTypeRepr) -> Result<Self> {
        PhaseTypeDistribution::new(r.alpha, r.t)
    }
}

impl From<PhaseTypeDistribution> for PhaseTypeRepr {
    fn from(p: PhaseTypeDistribution) -> Self {
        PhaseTypeRepr {
            t: p.t_rows(),
            alpha: p.alpha,
        }
    }
}

impl PhaseTypeDistribution {
    /// Builds a representation from the initial law and the rows of `T`,
    /// rejecting anything that is not a valid sub-intensity structure.
    pub fn new(alpha: Vec<f64>, t_rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = alpha.len();
        if d == 0 {
            return Err(Error::InvalidPhaseType("at least one phase is required".into()));
        }
        if t_rows.len() != d || t_rows.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidPhaseType(format!(
                "T must be {d}x{d} to match alpha"
            )));
        }
        if alpha.iter().chain(t_rows.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPhaseType("entries must be finite".into()));
        }
        if alpha.iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidPhaseType("alpha entries must be >= 0".into()));
        }
        let mass: f64 = alpha.iter().sum();
        if mass > 1.0 + STRUCTURE_TOLERANCE {
            return Err(Error::InvalidPhaseType(format!(
                "alpha sums to {mass} > 1"
            )));
        }

        let t = DMatrix::from_fn(d, d, |i, j| t_rows[i][j]);
        let mut exit = Vec::with_capacity(d);
        for i in 0..d {
            if t[(i, i)] >= 0.0 {
                return Err(Error::InvalidPhaseType(format!(
                    "diagonal entry T[{i}][{i}] must be negative"
                )));
            }
            for j in 0..d {
                if i != j && t[(i, j)] < 0.0 {
                    return Err(Error::InvalidPhaseType(format!(
                        "off-diagonal entry T[{i}][{j}] must be >= 0"
                    )));
                }
            }
            let row_sum: f64 = t.row(i).iter().sum();
            let scale = t[(i, i)].abs();
            if row_sum > STRUCTURE_TOLERANCE * scale {
                return Err(Error::InvalidPhaseType(format!(
                    "row {i} of T sums to {row_sum} > 0"
                )));
            }
            exit.push((-row_sum).max(0.0));
        }

        if t.clone().complex_eigenvalues().iter().any(|ev| ev.re >= 0.0) {
            return Err(Error::InvalidPhaseType(
                "T has an eigenvalue with nonnegative real part".into(),
            ));
        }

        Ok(Self { alpha, t, exit })
    }

    /// Like [`new`](Self::new), but first rescales `alpha` to unit mass when its
    /// sum is within [`ALPHA_ROUNDING_TOLERANCE`] of one. Fitted representations
    /// printed to a few decimals often sum to slightly more or less than one.
    pub fn normalized(alpha: Vec<f64>, t_rows: Vec<Vec<f64>>) -> Result<Self> {
        let mass: f64 = alpha.iter().sum();
        let alpha = if mass > 0.0 && (mass - 1.0).abs() <= ALPHA_ROUNDING_TOLERANCE {
            alpha.into_iter().map(|a| a / mass).collect()
        } else {
            alpha
        };
        Self::new(alpha, t_rows)
    }

    /// Exponential law with the given rate (one phase).
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![vec![-rate]])
    }

    pub fn phases(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sub_intensity(&self) -> &DMatrix<f64> {
        &self.t
    }

    /// Exit-rate vector `t = -T 1`.
    pub fn exit_rates(&self) -> &[f64] {
        &self.exit
    }

    pub fn t_rows(&self) -> Vec<Vec<f64>> {
        (0..self.phases())
            .map(|i| self.t.row(i).iter().copied().collect())
            .collect()
    }

    /// Mean absorption time `alpha (-T)^{-1} 1`.
    pub fn mean(&self) -> f64 {
        let d = self.phases();
        let neg_t = -self.t.clone();
        let ones = DVector::from_element(d, 1.0);
        let x = neg_t
            .lu()
            .solve(&ones)
            .expect("sub-intensity matrix is nonsingular by construction");
        self.alpha.iter().zip(x.iter()).map(|(a, v)| a * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_has_unit_exit_rate() {
        let pt = PhaseTypeDistribution::exponential(1.0).unwrap();
        assert_eq!(pt.exit_rates(), &[1.0]);
        assert!((pt.mean() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_positive_row_sum() {
        let err = PhaseTypeDistribution::new(vec![1.0, 0.0], vec![vec![-1.0, 2.0], vec![0.0, -1.0]]);
        assert!(matches!(err, Err(Error::InvalidPhaseType(_))));
    }

    #[test]
    fn rejects_excess_mass_unless_normalized() {
        let rows = vec![vec![-2.0, 1.0], vec![0.5, -3.0]];
        assert!(PhaseTypeDistribution::new(vec![0.6, 0.4001], rows.clone()).is_err());
        let pt = PhaseTypeDistribution::normalized(vec![0.6, 0.4001], rows).unwrap();
        assert!((pt.alpha().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonnegative_diagonal() {
        assert!(PhaseTypeDistribution::new(vec![1.0], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn erlang_two_mean() {
        let pt = PhaseTypeDistribution::new(vec![1.0, 0.0], vec![vec![-2.0, 2.0], vec![0.0, -2.0]])
            .unwrap();
        assert!((pt.mean() - 1.0).abs() < 1e-14);
        assert_eq!(pt.exit_rates(), &[0.0, 2.0]);
    }
}
