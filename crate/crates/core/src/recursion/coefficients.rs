//! Piecewise polynomial-exponential functions
//!
//! ```text
//! f(y) = A + B e^y + sum_i sum_h C[i][h] e^{-xi_i y} y^h
//!          + sum_h D[h] e^{Phi(p) y} y^h + E e^{Phi(alpha) y}
//! ```
//!
//! on the regions cut out by a descending list of thresholds.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectralData;
use crate::sum::CompensatedSum;

use super::extended::ExtReal;

/// Affine map between the log-price `x` seen by callers and the local
/// variable `y` the coefficients are expressed in: `x = origin + y`, and
/// values scale by `scale`.
///
/// The model is spatially homogeneous and the payoff `e^x - K` equals
/// `K (e^{x - log K} - 1)`, so a solve with strike `K` can be carried out with
/// unit strike in `y = x - log K` and rescaled afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frame {
    pub origin: f64,
    pub scale: f64,
}

impl Frame {
    pub const IDENTITY: Frame = Frame {
        origin: 0.0,
        scale: 1.0,
    };

    /// Local variable `y = x - log K`, unit strike.
    pub fn log_moneyness(strike: f64) -> Frame {
        Frame {
            origin: strike.ln(),
            scale: strike,
        }
    }

    pub fn to_local(&self, x: f64) -> f64 {
        x - self.origin
    }

    pub fn to_global(&self, y: f64) -> f64 {
        y + self.origin
    }
}

impl Default for Frame {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Quantities shared by every coefficient set of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct RecursionContext {
    pub spectral: SpectralData,
    /// `Phi(alpha)` for the discount rate.
    pub phi_alpha: f64,
    /// Rate `M / delta` of each exponential in the Erlang refraction time.
    pub lambda: f64,
    /// Strike in local units (1 under [`Frame::log_moneyness`]).
    pub strike: f64,
    pub frame: Frame,
}

impl RecursionContext {
    pub fn new(spectral: SpectralData, phi_alpha: f64, lambda: f64, strike: f64) -> Result<Self> {
        if !(spectral.phi_p > 1.0) {
            return Err(Error::DomainError(format!(
                "Phi(p) = {} must exceed 1 for the upper-region integrals to converge",
                spectral.phi_p
            )));
        }
        if !(phi_alpha > 1.0) {
            return Err(Error::DomainError(format!(
                "Phi(alpha) = {phi_alpha} must exceed 1"
            )));
        }
        if !(spectral.phi_p > phi_alpha) {
            return Err(Error::DomainError(format!(
                "Phi(p) = {} must exceed Phi(alpha) = {phi_alpha}",
                spectral.phi_p
            )));
        }
        Ok(Self {
            spectral,
            phi_alpha,
            lambda,
            strike,
            frame: Frame::IDENTITY,
        })
    }

    /// Same problem with strike `strike`, solved in log-moneyness.
    pub fn in_log_moneyness(mut self) -> Self {
        self.frame = Frame::log_moneyness(self.strike);
        self.strike = 1.0;
        self
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.spectral.roots
    }
}

/// Coefficients `(A, B, C, D, E)` of one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCoefficients {
    pub a: f64,
    pub b: f64,
    /// `c[i][h]`: root index `i`, power `h`.
    pub c: Vec<Vec<Complex64>>,
    pub d: Vec<f64>,
    pub e: f64,
}

impl RegionCoefficients {
    pub fn zero(roots: usize, terms: usize) -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            c: vec![vec![Complex64::new(0.0, 0.0); terms]; roots],
            d: vec![0.0; terms],
            e: 0.0,
        }
    }

    /// Number of polynomial coefficients per exponential (degree + 1).
    pub fn terms(&self) -> usize {
        self.d.len()
    }

    pub fn has_upper_tail_terms(&self) -> bool {
        self.e != 0.0 || self.d.iter().any(|&v| v != 0.0)
    }

    pub fn has_lower_tail_terms(&self) -> bool {
        self.a != 0.0 || self.b != 0.0 || self.c.iter().flatten().any(|z| z.norm() != 0.0)
    }

    fn is_finite(&self) -> bool {
        self.a.is_finite()
            && self.b.is_finite()
            && self.e.is_finite()
            && self.d.iter().all(|v| v.is_finite())
            && self.c.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Value and imaginary residue of `f(x)`.
    pub fn evaluate(&self, ctx: &RecursionContext, x: f64) -> (f64, f64) {
        let spec = &ctx.spectral;
        let mut acc = CompensatedSum::new();
        acc.add(self.a);
        if self.b != 0.0 {
            acc.add(self.b * x.exp());
        }
        let (c_sum, residue, _) = spec.real_sum(|i| poly_exp(&self.c[i], -spec.roots[i], x));
        acc.add(c_sum);
        if self.d.iter().any(|&v| v != 0.0) {
            let mut poly = CompensatedSum::new();
            let mut power = 1.0;
            for &dh in &self.d {
                poly.add(dh * power);
                power *= x;
            }
            acc.add(poly.value() * (spec.phi_p * x).exp());
        }
        if self.e != 0.0 {
            acc.add(self.e * (ctx.phi_alpha * x).exp());
        }
        (acc.value(), residue)
    }

    /// Value and imaginary residue of `f'(x)`.
    pub fn derivative(&self, ctx: &RecursionContext, x: f64) -> (f64, f64) {
        let spec = &ctx.spectral;
        let mut acc = CompensatedSum::new();
        if self.b != 0.0 {
            acc.add(self.b * x.exp());
        }
        let (c_sum, residue, _) = spec.real_sum(|i| {
            let rate = -spec.roots[i];
            let coeffs = &self.c[i];
            // d/dx [e^{rx} P(x)] = e^{rx} (r P(x) + P'(x))
            let deriv: Vec<Complex64> = (0..coeffs.len())
                .map(|h| {
                    let next = coeffs.get(h + 1).copied().unwrap_or_default();
                    rate * coeffs[h] + next * (h as f64 + 1.0)
                })
                .collect();
            poly_exp(&deriv, rate, x)
        });
        acc.add(c_sum);
        if self.d.iter().any(|&v| v != 0.0) {
            let rate = spec.phi_p;
            let mut poly = CompensatedSum::new();
            let mut power = 1.0;
            for h in 0..self.d.len() {
                let next = self.d.get(h + 1).copied().unwrap_or(0.0);
                poly.add((rate * self.d[h] + next * (h as f64 + 1.0)) * power);
                power *= x;
            }
            acc.add(poly.value() * (rate * x).exp());
        }
        if self.e != 0.0 {
            acc.add(ctx.phi_alpha * self.e * (ctx.phi_alpha * x).exp());
        }
        (acc.value(), residue)
    }
}

/// `e^{rate x} sum_h coeffs[h] x^h`.
pub(crate) fn poly_exp(coeffs: &[Complex64], rate: Complex64, x: f64) -> Complex64 {
    // Absent terms stay zero even where the exponential overflows.
    if coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
        return Complex64::new(0.0, 0.0);
    }
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut power = 1.0;
    for c in coeffs {
        re.add(c.re * power);
        im.add(c.im * power);
        power *= x;
    }
    Complex64::new(re.value(), im.value()) * (rate * x).exp()
}

/// Parameter set of `u^{(n,m)}`: thresholds `a_1 >= ... >= a_n` and the
/// coefficients of the `n + 1` regions between them (region 0 lies above `a_1`,
/// region `n` below `a_n`).
///
/// `thresholds`, the coefficients and the `*_local` methods live in the local
/// variable of the context's [`Frame`]; [`CoefficientSet::evaluate`],
/// [`CoefficientSet::derivative`] and [`CoefficientSet::exercise_thresholds`]
/// speak in log-prices.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSet {
    /// Stage index `n >= 1`.
    pub stage: usize,
    /// Sub-step `m` (number of resolvent steps applied within this stage).
    pub substep: usize,
    pub thresholds: Vec<f64>,
    pub regions: Vec<RegionCoefficients>,
    #[serde(skip)]
    pub context: Arc<RecursionContext>,
}

impl CoefficientSet {
    /// Number of polynomial coefficients per exponential, `I + 1`.
    pub fn terms(&self) -> usize {
        self.regions.first().map_or(0, RegionCoefficients::terms)
    }

    /// Polynomial degree bound `I` (−1 for the base case).
    pub fn degree(&self) -> isize {
        self.terms() as isize - 1
    }

    /// Region containing `x`; a point equal to a threshold belongs to the region above it.
    pub fn region_index(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&a| a > x)
    }

    /// `(lower, upper)` limits of region `r`.
    pub fn region_bounds(&self, r: usize) -> (ExtReal, ExtReal) {
        let upper = if r == 0 {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(self.thresholds[r - 1])
        };
        let lower = if r == self.thresholds.len() {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(self.thresholds[r])
        };
        (lower, upper)
    }

    fn residue_check(&self, value: f64, residue: f64, what: &str, x: f64) -> Result<f64> {
        let tol = self.context.spectral.tolerances.imaginary;
        if residue > tol * (1.0 + value.abs()) {
            return Err(Error::ImaginaryResidue {
                residue,
                context: format!("{what} of u^({},{}) at x = {x}", self.stage, self.substep),
            });
        }
        Ok(value)
    }

    pub fn evaluate_local(&self, y: f64) -> Result<f64> {
        let region = &self.regions[self.region_index(y)];
        let (value, residue) = region.evaluate(&self.context, y);
        self.residue_check(value, residue, "value", y)
    }

    pub fn derivative_local(&self, y: f64) -> Result<f64> {
        let region = &self.regions[self.region_index(y)];
        let (value, residue) = region.derivative(&self.context, y);
        self.residue_check(value, residue, "derivative", y)
    }

    /// `u^{(n,m)}(x)` at log-price `x`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let frame = self.context.frame;
        Ok(frame.scale * self.evaluate_local(frame.to_local(x))?)
    }

    /// `d u^{(n,m)} / dx` at log-price `x`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        let frame = self.context.frame;
        Ok(frame.scale * self.derivative_local(frame.to_local(x))?)
    }

    /// Thresholds as log-prices.
    pub fn exercise_thresholds(&self) -> Vec<f64> {
        let frame = self.context.frame;
        self.thresholds.iter().map(|&y| frame.to_global(y)).collect()
    }

    /// Evaluates region `r`'s expression at `x`, regardless of where `x` lies.
    pub fn evaluate_region(&self, r: usize, x: f64) -> f64 {
        self.regions[r].evaluate(&self.context, x).0
    }

    /// Checks the vanishing-coefficient structure of the top and bottom regions.
    pub fn check_corner_conditions(&self) -> Result<()> {
        let top = &self.regions[0];
        let bottom = self.regions.last().expect("at least one region");
        if top.has_upper_tail_terms() {
            return Err(Error::PreconditionViolated(format!(
                "top region of u^({},{}) has nonzero D or E",
                self.stage, self.substep
            )));
        }
        if bottom.has_lower_tail_terms() {
            return Err(Error::PreconditionViolated(format!(
                "bottom region of u^({},{}) has nonzero A, B or C",
                self.stage, self.substep
            )));
        }
        Ok(())
    }

    /// Largest relative jump `|f(a - eps) - f(a + eps)| / (1 + |f(a + eps)|)`
    /// over all thresholds, with the location where it occurs. Non-finite
    /// coefficients or values count as an infinite jump.
    pub fn continuity_residual(&self, offset: f64) -> (f64, f64) {
        let mut worst = (0.0, f64::NAN);
        if self.regions.iter().any(|r| !r.is_finite()) {
            return (f64::INFINITY, self.thresholds.first().copied().unwrap_or(f64::NAN));
        }
        for (k, &a) in self.thresholds.iter().enumerate() {
            let above = self.evaluate_region(k, a + offset);
            let below = self.evaluate_region(k + 1, a - offset);
            let residual = if above.is_finite() && below.is_finite() {
                (above - below).abs() / (1.0 + above.abs())
            } else {
                f64::INFINITY
            };
            if residual > worst.0 || residual.is_nan() {
                worst = (if residual.is_nan() { f64::INFINITY } else { residual }, a);
            }
        }
        worst
    }
}
