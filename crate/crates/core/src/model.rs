//! Spectrally negative phase-type Lévy model
//! `X_t - X_0 = c t + sigma B_t - sum_{n <= N_t} Z_n`, with `N` a Poisson
//! process of rate `rho` and `Z_n` phase-type.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_type::PhaseTypeDistribution;

/// Condition number above which `sI - T` is reported as singular.
pub const RESOLVENT_CONDITION_LIMIT: f64 = 1e12;

/// `|psi(1) - alpha|` below this (times `max(1, |alpha|)`) counts as equality
/// when checking the boundary case of the discounting assumption.
pub const ASSUMPTION_EQUALITY_TOLERANCE: f64 = 1e-12;

const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    /// Drift `c` of the bounded-variation form (per unit time).
    pub drift: f64,
    /// Brownian volatility.
    pub sigma: f64,
    /// Poisson jump rate; zero disables jumps.
    pub rho: f64,
    pub jumps: PhaseTypeDistribution,
}

/// Outcome of [`LevyModel::validate_assumptions`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub psi_at_one: f64,
    pub dpsi_at_one: f64,
    /// `"psi(1) < alpha"` or `"psi(1) = alpha < 0 and psi'(1) < 0"`.
    pub clause: &'static str,
    /// Killing rate `alpha + M / delta`, when the refraction data was supplied.
    pub killing_rate: Option<f64>,
    pub warnings: Vec<String>,
}

impl LevyModel {
    pub fn new(drift: f64, sigma: f64, rho: f64, jumps: PhaseTypeDistribution) -> Result<Self> {
        if !drift.is_finite() || !sigma.is_finite() || !rho.is_finite() {
            return Err(Error::InvalidModel("parameters must be finite".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidModel("sigma must be >= 0".into()));
        }
        if rho < 0.0 {
            return Err(Error::InvalidModel("rho must be >= 0".into()));
        }
        Ok(Self {
            drift,
            sigma,
            rho,
            jumps,
        })
    }

    /// Model whose drift is chosen so that `psi(1) = alpha_rate - gamma`, i.e.
    /// `exp(-(alpha_rate - gamma) t + X_t)` is a martingale.
    pub fn calibrated(
        sigma: f64,
        rho: f64,
        jumps: PhaseTypeDistribution,
        alpha_rate: f64,
        gamma: f64,
    ) -> Result<Self> {
        let mut model = Self::new(0.0, sigma, rho, jumps)?;
        model.drift = model.calibrate_drift(alpha_rate, gamma)?;
        Ok(model)
    }

    /// Drift `c` for which `psi(1) = alpha_rate - gamma`, ignoring the current drift.
    pub fn calibrate_drift(&self, alpha_rate: f64, gamma: f64) -> Result<f64> {
        let target = alpha_rate - gamma;
        if !target.is_finite() {
            return Err(Error::InvalidModel("calibration target must be finite".into()));
        }
        let jump_part = self.jump_transform(Complex64::new(1.0, 0.0))?.re;
        Ok(target - 0.5 * self.sigma * self.sigma - self.rho * (jump_part - 1.0))
    }

    /// Number of transient phases that actually enter the exponent (zero without jumps).
    pub fn effective_phases(&self) -> usize {
        if self.rho > 0.0 {
            self.jumps.phases()
        } else {
            0
        }
    }

    /// `alpha (sI - T)^{-1} t`, the Laplace transform `E[exp(-s Z)]`.
    fn jump_transform(&self, s: Complex64) -> Result<Complex64> {
        let (lu, rhs) = self.resolvent(s)?;
        let x = lu.solve(&rhs).ok_or(singular(s, f64::INFINITY))?;
        Ok(dot_alpha(self.jumps.alpha(), &x))
    }

    fn resolvent(&self, s: Complex64) -> Result<(nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>, DVector<Complex64>)> {
        let t = self.jumps.sub_intensity();
        let d = t.nrows();
        let m = DMatrix::from_fn(d, d, |i, j| {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            diag - Complex64::new(t[(i, j)], 0.0)
        });
        let norm = one_norm(&m);
        let lu = m.lu();
        let inv = lu.try_inverse().ok_or(singular(s, f64::INFINITY))?;
        let condition = norm * one_norm(&inv);
        if !condition.is_finite() || condition > RESOLVENT_CONDITION_LIMIT {
            return Err(singular(s, condition));
        }
        let rhs = DVector::from_iterator(
            d,
            self.jumps.exit_rates().iter().map(|&v| Complex64::new(v, 0.0)),
        );
        Ok((lu, rhs))
    }

    /// `psi(s) = c s + sigma^2 s^2 / 2 + rho (alpha (sI - T)^{-1} t - 1)`.
    pub fn laplace_exponent(&self, s: Complex64) -> Result<Complex64> {
        let mut value = self.drift * s + 0.5 * self.sigma * self.sigma * s * s;
        if self.rho > 0.0 {
            value += self.rho * (self.jump_transform(s)? - 1.0);
        }
        Ok(value)
    }

    /// `psi'(s) = c + sigma^2 s - rho alpha (sI - T)^{-2} t`.
    pub fn laplace_exponent_derivative(&self, s: Complex64) -> Result<Complex64> {
        let mut value = self.drift + self.sigma * self.sigma * s;
        if self.rho > 0.0 {
            let (lu, rhs) = self.resolvent(s)?;
            let x = lu.solve(&rhs).ok_or(singular(s, f64::INFINITY))?;
            let y = lu.solve(&x).ok_or(singular(s, f64::INFINITY))?;
            value -= self.rho * dot_alpha(self.jumps.alpha(), &y);
        }
        Ok(value)
    }

    pub fn psi(&self, s: f64) -> Result<f64> {
        Ok(self.laplace_exponent(Complex64::new(s, 0.0))?.re)
    }

    pub fn dpsi(&self, s: f64) -> Result<f64> {
        Ok(self.laplace_exponent_derivative(Complex64::new(s, 0.0))?.re)
    }

    /// Checks the discounting assumption (`psi(1) < alpha`, or `psi(1) = alpha < 0`
    /// with `psi'(1) < 0`), the exclusion of decreasing paths and, when
    /// `refraction = Some((M, delta))`, positivity of `alpha + M / delta`.
    pub fn validate_assumptions(
        &self,
        alpha_rate: f64,
        refraction: Option<(usize, f64)>,
    ) -> Result<AssumptionReport> {
        let mut warnings = Vec::new();
        if self.sigma == 0.0 {
            if self.drift <= 0.0 {
                return Err(Error::AssumptionViolated {
                    clause: "subordinator exclusion: sigma = 0 requires drift > 0".into(),
                });
            }
            warnings.push(
                "sigma = 0: existence of a density for X_t is not guaranteed by this model".into(),
            );
        }

        let psi_at_one = self.psi(1.0)?;
        let dpsi_at_one = self.dpsi(1.0)?;
        let tol = ASSUMPTION_EQUALITY_TOLERANCE * alpha_rate.abs().max(1.0);
        let clause = if psi_at_one < alpha_rate - tol {
            "psi(1) < alpha"
        } else if (psi_at_one - alpha_rate).abs() <= tol {
            if alpha_rate >= 0.0 {
                return Err(Error::AssumptionViolated {
                    clause: format!(
                        "(ii) psi(1) = alpha requires alpha < 0 (alpha = {alpha_rate})"
                    ),
                });
            }
            if dpsi_at_one >= 0.0 {
                return Err(Error::AssumptionViolated {
                    clause: format!(
                        "(ii) psi(1) = alpha requires psi'(1) < 0 (psi'(1) = {dpsi_at_one})"
                    ),
                });
            }
            "psi(1) = alpha < 0 and psi'(1) < 0"
        } else {
            return Err(Error::AssumptionViolated {
                clause: format!("(i) psi(1) < alpha fails: psi(1) = {psi_at_one}, alpha = {alpha_rate}"),
            });
        };

        let killing_rate = match refraction {
            Some((shape, delta)) => {
                if shape == 0 || !(delta > 0.0) {
                    return Err(Error::AssumptionViolated {
                        clause: "refraction requires M >= 1 and delta > 0".into(),
                    });
                }
                let p = alpha_rate + shape as f64 / delta;
                if !(p > 0.0) {
                    return Err(Error::AssumptionViolated {
                        clause: format!("killing rate alpha + M/delta = {p} must be positive"),
                    });
                }
                Some(p)
            }
            None => None,
        };

        Ok(AssumptionReport {
            psi_at_one,
            dpsi_at_one,
            clause,
            killing_rate,
            warnings,
        })
    }

    /// Largest nonnegative real root of `psi(s) = q`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        if !q.is_finite() {
            return Err(Error::NoRoot {
                target: q,
                reason: "target is not finite".into(),
            });
        }
        // psi is convex on [0, inf); start from its minimiser there.
        let lo = self.argmin_on_positive_axis()?;
        let at_lo = self.psi(lo)? - q;
        if at_lo > 0.0 {
            return Err(Error::NoRoot {
                target: q,
                reason: format!("min psi on [0, inf) is {} > target", at_lo + q),
            });
        }
        if at_lo == 0.0 {
            return Ok(lo);
        }

        let mut hi = lo.max(1.0) * 2.0;
        let mut doublings = 0;
        while self.psi(hi)? - q <= 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::NoRoot {
                    target: q,
                    reason: "bracket doubling cap reached".into(),
                });
            }
        }

        let mut lo = lo;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..300 {
            let f = self.psi(x)? - q;
            if f == 0.0 {
                return Ok(x);
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let df = self.dpsi(x)?;
            let newton = x - f / df;
            let next = if df > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || hi - lo <= f64::EPSILON * hi {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    fn argmin_on_positive_axis(&self) -> Result<f64> {
        if self.dpsi(0.0)? >= 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.dpsi(hi)? < 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::NoRoot {
                    target: 0.0,
                    reason: "psi' has no sign change on [0, inf)".into(),
                });
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.dpsi(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

fn dot_alpha(alpha: &[f64], x: &DVector<Complex64>) -> Complex64 {
    alpha.iter().zip(x.iter()).map(|(a, v)| *a * v).sum()
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn singular(s: Complex64, condition: f64) -> Error {
    Error::SingularResolvent {
        re: s.re,
        im: s.im,
        condition,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case1(gamma: f64) -> LevyModel {
        LevyModel::calibrated(0.2, 1.5, PhaseTypeDistribution::exponential(1.0).unwrap(), -0.02, gamma)
            .unwrap()
    }

    fn deterministic(drift: f64) -> LevyModel {
        LevyModel::new(drift, 0.0, 0.0, PhaseTypeDistribution::exponential(1.0).unwrap()).unwrap()
    }

    #[test]
    fn psi_vanishes_at_origin() {
        let m = case1(0.02);
        assert!(m.psi(0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn case1_calibrated_drift() {
        let m = case1(0.02);
        assert!((m.drift - 0.69).abs() < 1e-14);
        assert!((m.psi(1.0).unwrap() + 0.04).abs() < 1e-14);
    }

    #[test]
    fn degenerate_calibration_returns_alpha() {
        let m = LevyModel::new(0.0, 0.0, 0.0, PhaseTypeDistribution::exponential(1.0).unwrap()).unwrap();
        assert_eq!(m.calibrate_drift(-0.02, 0.0).unwrap(), -0.02);
    }

    #[test]
    fn no_jump_derivative() {
        let m = LevyModel::new(2.0, 1.0, 0.0, PhaseTypeDistribution::exponential(1.0).unwrap()).unwrap();
        assert_eq!(m.dpsi(3.0).unwrap(), 5.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let m = case1(0.02);
        let h = 1e-6;
        let fd = (m.psi(1.0 + h).unwrap() - m.psi(1.0 - h).unwrap()) / (2.0 * h);
        assert!((m.dpsi(1.0).unwrap() - fd).abs() < 1e-6);
        assert!(m.dpsi(50.0).unwrap() > 0.0);
    }

    #[test]
    fn singular_at_negated_eigenvalue() {
        let m = case1(0.02);
        let err = m.laplace_exponent(Complex64::new(-1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularResolvent { .. }));
    }

    #[test]
    fn phi_of_linear_exponent_is_identity() {
        let m = deterministic(1.0);
        for q in [0.0, 0.5, 2.0, 7.25] {
            assert!((m.phi(q).unwrap() - q).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_residual_and_discount_root() {
        let m = case1(0.02);
        let p = 1.98;
        let phi_p = m.phi(p).unwrap();
        assert!((m.psi(phi_p).unwrap() - p).abs() < 1e-10);
        let phi_alpha = m.phi(-0.02).unwrap();
        assert!(phi_alpha > 1.0);
        assert!((m.psi(phi_alpha).unwrap() + 0.02).abs() < 1e-12);
    }

    #[test]
    fn phi_zero_is_positive_root_when_drift_negative_at_origin() {
        // psi'(0) = c - rho E[Z] < 0 for this model
        let m = LevyModel::new(0.5, 0.2, 1.5, PhaseTypeDistribution::exponential(1.0).unwrap()).unwrap();
        assert!(m.dpsi(0.0).unwrap() < 0.0);
        let root = m.phi(0.0).unwrap();
        assert!(root > 0.0);
        assert!(m.psi(root).unwrap().abs() < 1e-12);
    }

    #[test]
    fn assumption_clause_one_passes() {
        let m = case1(0.02);
        let report = m.validate_assumptions(-0.02, Some((1, 0.5))).unwrap();
        assert_eq!(report.clause, "psi(1) < alpha");
        assert_eq!(report.killing_rate, Some(1.98));
    }

    #[test]
    fn boundary_case_with_increasing_psi_fails() {
        let m = case1(0.0);
        assert!(m.dpsi(1.0).unwrap() >= 0.0);
        let err = m.validate_assumptions(-0.02, None).unwrap_err();
        match err {
            Error::AssumptionViolated { clause } => assert!(clause.starts_with("(ii)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decreasing_paths_rejected() {
        let m = LevyModel::new(-0.1, 0.0, 1.5, PhaseTypeDistribution::exponential(1.0).unwrap()).unwrap();
        let err = m.validate_assumptions(-0.02, None).unwrap_err();
        match err {
            Error::AssumptionViolated { clause } => assert!(clause.contains("subordinator")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_killing_rate_rejected() {
        let m = case1(0.02);
        assert!(m.validate_assumptions(-0.02, Some((1, 100.0))).is_err());
    }
}
