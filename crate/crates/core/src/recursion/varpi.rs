//! Closed-form integrals `varpi(s, t, q) = int_s^t e^{-q y} f(y) dy` of one
//! region's polynomial-exponential expression.
//!
//! Every term of `e^{-q y} f(y)` has the shape `e^{c y} P(y)`, whose primitive
//! is `e^{c y} Q(y)` with `Q` from [`integ`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::CompensatedComplexSum;

use super::coefficients::{RecursionContext, RegionCoefficients};
use super::extended::ExtReal;

/// Polynomial `Q` with `(e^{c y} Q(y))' = e^{c y} P(y)`, coefficients ascending.
///
/// For `c = 0` the result has one more coefficient and a zero constant term.
pub fn integ(p: &[Complex64], c: Complex64) -> Vec<Complex64> {
    if p.is_empty() {
        return Vec::new();
    }
    let zero = Complex64::new(0.0, 0.0);
    if c == zero {
        let mut q = vec![zero; p.len() + 1];
        for (h, ph) in p.iter().enumerate() {
            q[h + 1] = ph / (h as f64 + 1.0);
        }
        return q;
    }
    let mut q = vec![zero; p.len()];
    let last = p.len() - 1;
    q[last] = p[last] / c;
    for h in (0..last).rev() {
        q[h] = (p[h] - q[h + 1] * (h as f64 + 1.0)) / c;
    }
    q
}

/// Exponential rate and polynomial of one term of `e^{-q y} f(y)`.
#[derive(Debug, Clone)]
pub(crate) struct Term {
    pub rate: Complex64,
    pub poly: Vec<Complex64>,
}

/// The terms of `e^{-q y} f(y)` in the order A, B, C_0.., D, E. Terms with an
/// all-zero polynomial are kept so that the order is stable.
pub(crate) fn weighted_terms(
    region: &RegionCoefficients,
    ctx: &RecursionContext,
    q: Complex64,
) -> Vec<Term> {
    let real = |v: f64| Complex64::new(v, 0.0);
    let mut terms = Vec::with_capacity(region.c.len() + 4);
    terms.push(Term {
        rate: -q,
        poly: vec![real(region.a)],
    });
    terms.push(Term {
        rate: real(1.0) - q,
        poly: vec![real(region.b)],
    });
    for (xi, c) in ctx.roots().iter().zip(&region.c) {
        terms.push(Term {
            rate: -(xi + q),
            poly: c.clone(),
        });
    }
    terms.push(Term {
        rate: real(ctx.spectral.phi_p) - q,
        poly: region.d.iter().map(|&v| real(v)).collect(),
    });
    terms.push(Term {
        rate: real(ctx.phi_alpha) - q,
        poly: vec![real(region.e)],
    });
    terms
}

fn is_zero(poly: &[Complex64]) -> bool {
    poly.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

/// `e^{c y} Q(y)` with compensated Horner-free summation.
fn primitive_term(rate: Complex64, q: &[Complex64], y: f64) -> Complex64 {
    let mut acc = CompensatedComplexSum::new();
    let mut power = 1.0;
    for coeff in q {
        acc.add(coeff * power);
        power *= y;
    }
    acc.value() * (rate * y).exp()
}

/// A primitive of `e^{-q y} f(y)` on one region, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Primitive {
    parts: Vec<(Complex64, Vec<Complex64>)>,
}

impl Primitive {
    pub fn new(region: &RegionCoefficients, ctx: &RecursionContext, q: Complex64) -> Self {
        let parts = weighted_terms(region, ctx, q)
            .into_iter()
            .filter(|t| !is_zero(&t.poly))
            .map(|t| {
                let q = integ(&t.poly, t.rate);
                (t.rate, q)
            })
            .collect();
        Self { parts }
    }

    /// Value at an extended-real point. Infinite points give zero when every
    /// term decays there and a [`Error::PreconditionViolated`] otherwise.
    pub fn at(&self, y: ExtReal) -> Result<Complex64> {
        match y {
            ExtReal::Finite(v) => {
                let mut acc = CompensatedComplexSum::new();
                for (rate, q) in &self.parts {
                    acc.add(primitive_term(*rate, q, v));
                }
                Ok(acc.value())
            }
            ExtReal::PosInf => {
                if let Some((rate, _)) = self.parts.iter().find(|(r, _)| !(r.re < 0.0)) {
                    return Err(Error::PreconditionViolated(format!(
                        "integral to +inf diverges: term with exponential rate {rate}"
                    )));
                }
                Ok(Complex64::new(0.0, 0.0))
            }
            ExtReal::NegInf => {
                if let Some((rate, _)) = self.parts.iter().find(|(r, _)| !(r.re > 0.0)) {
                    return Err(Error::PreconditionViolated(format!(
                        "integral from -inf diverges: term with exponential rate {rate}"
                    )));
                }
                Ok(Complex64::new(0.0, 0.0))
            }
        }
    }
}

/// `int_s^t e^{-q y} f(y) dy` for the region's expression `f`.
pub fn varpi(
    region: &RegionCoefficients,
    ctx: &RecursionContext,
    s: ExtReal,
    t: ExtReal,
    q: Complex64,
) -> Result<Complex64> {
    if s == t {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if !s.lt(t) {
        return Err(Error::PreconditionViolated(format!(
            "integration limits out of order: s = {s}, t = {t}"
        )));
    }
    let primitive = Primitive::new(region, ctx, q);
    Ok(primitive.at(t)? - primitive.at(s)?)
}
