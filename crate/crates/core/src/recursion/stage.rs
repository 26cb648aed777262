//! Exercise thresholds: the first one in closed form, the later ones as roots
//! of the first-order condition `phi~'(a) - Phi(alpha) phi~(a) = 0`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

use super::coefficients::{CoefficientSet, RecursionContext, RegionCoefficients};

/// `log(Phi(alpha) K / (Phi(alpha) - 1))`.
pub fn first_threshold(phi_alpha: f64, strike: f64) -> Result<f64> {
    if !(phi_alpha > 1.0) {
        return Err(Error::DomainError(format!("Phi(alpha) = {phi_alpha} must exceed 1")));
    }
    if !(strike > 0.0) {
        return Err(Error::DomainError(format!("strike K = {strike} must be positive")));
    }
    // log(K) + log(phi / (phi - 1)), written to keep precision for large phi
    Ok(strike.ln() - (-1.0 / phi_alpha).ln_1p())
}

/// `v^{(1)}`: the payoff `e^x - K` above the first threshold and
/// `(e^{a_1} - K) e^{Phi(alpha) (x - a_1)}` below it.
pub fn base_case(context: Arc<RecursionContext>) -> Result<CoefficientSet> {
    let a1 = first_threshold(context.phi_alpha, context.strike)?;
    let roots = context.spectral.roots.len();
    let mut top = RegionCoefficients::zero(roots, 0);
    top.a = -context.strike;
    top.b = 1.0;
    let mut bottom = RegionCoefficients::zero(roots, 0);
    bottom.e = (a1.exp() - context.strike) * (-context.phi_alpha * a1).exp();
    Ok(CoefficientSet {
        stage: 1,
        substep: 0,
        thresholds: vec![a1],
        regions: vec![top, bottom],
        context,
    })
}

/// Settings of the threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSearch {
    /// The bracket starts at `log K + lower_offset`.
    pub lower_offset: f64,
    /// Stop once `|g| <= tolerance * scale(g)`.
    pub tolerance: f64,
    /// Points of the coarse scan counting sign changes of `g`.
    pub scan_points: usize,
    pub max_iterations: usize,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            lower_offset: 1e-8,
            tolerance: 1e-12,
            scan_points: 200,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdDiagnostics {
    pub stage: usize,
    pub threshold: f64,
    /// `|g|` at the returned point relative to the size of its terms.
    pub relative_residual: f64,
    pub iterations: usize,
    /// Sign changes of `g` seen on the coarse scan of the bracket.
    pub sign_changes: usize,
}

/// `g(a)` and the magnitude of the terms it is built from.
fn first_order(set: &CoefficientSet, a: f64) -> Result<(f64, f64)> {
    let ctx = &set.context;
    let phi = ctx.phi_alpha;
    let u = set.evaluate_local(a)?;
    let du = set.derivative_local(a)?;
    let ea = a.exp();
    let value = ea * (1.0 - phi) + phi * ctx.strike + du - phi * u;
    let scale = ea * (phi - 1.0) + phi * ctx.strike + du.abs() + phi * u.abs();
    Ok((value, scale))
}

/// Finds `a_{n+1}` for `phi~ = phi + u^{(n,M)}` and builds `v^{(n+1)}`.
pub fn advance_stage(
    set: &CoefficientSet,
    search: &ThresholdSearch,
) -> Result<(CoefficientSet, ThresholdDiagnostics)> {
    let ctx = &set.context;
    let previous = *set.thresholds.last().expect("at least one threshold");
    let lo_end = ctx.strike.ln() + search.lower_offset;
    let hi_end = previous;
    let stage = set.stage + 1;
    let no_bracket = || Error::NoBracket {
        stage,
        lo: lo_end,
        hi: hi_end,
    };
    if !(lo_end < hi_end) {
        return Err(no_bracket());
    }

    let sign_changes = count_sign_changes(set, lo_end, hi_end, search.scan_points)?;

    let (g_hi, scale_hi) = first_order(set, hi_end)?;
    let (threshold, relative_residual, iterations) = if g_hi.abs() <= search.tolerance * scale_hi {
        (hi_end, g_hi.abs() / scale_hi, 0)
    } else {
        let (g_lo, _) = first_order(set, lo_end)?;
        if !g_lo.is_finite() || !g_hi.is_finite() || g_lo.signum() == g_hi.signum() {
            return Err(no_bracket());
        }
        hybrid_root(set, (lo_end, g_lo), (hi_end, g_hi), search)?
    };
    if threshold > previous {
        return Err(Error::MonotonicityViolation {
            stage,
            found: threshold,
            previous,
        });
    }

    let phi_tilde = threshold.exp() - ctx.strike + set.evaluate_local(threshold)?;
    let mut regions: Vec<RegionCoefficients> = set
        .regions
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.a -= ctx.strike;
            r.b += 1.0;
            r
        })
        .collect();
    let mut bottom = RegionCoefficients::zero(ctx.spectral.roots.len(), set.terms());
    bottom.e = phi_tilde * (-ctx.phi_alpha * threshold).exp();
    regions.push(bottom);
    let mut thresholds = set.thresholds.clone();
    thresholds.push(threshold);

    let next = CoefficientSet {
        stage,
        substep: 0,
        thresholds,
        regions,
        context: set.context.clone(),
    };
    next.check_corner_conditions()?;
    Ok((
        next,
        ThresholdDiagnostics {
            stage,
            threshold,
            relative_residual,
            iterations,
            sign_changes,
        },
    ))
}

fn count_sign_changes(set: &CoefficientSet, lo: f64, hi: f64, points: usize) -> Result<usize> {
    if points < 2 {
        return Ok(0);
    }
    let mut changes = 0;
    let mut previous: Option<f64> = None;
    for k in 0..points {
        let a = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let (g, _) = first_order(set, a)?;
        if g == 0.0 || !g.is_finite() {
            continue;
        }
        if let Some(p) = previous {
            if p.signum() != g.signum() {
                changes += 1;
            }
        }
        previous = Some(g);
    }
    Ok(changes)
}

/// Bracketed secant with a bisection fallback whenever the secant point
/// leaves the bracket or the bracket fails to halve.
fn hybrid_root(
    set: &CoefficientSet,
    (mut lo, mut g_lo): (f64, f64),
    (mut hi, mut g_hi): (f64, f64),
    search: &ThresholdSearch,
) -> Result<(f64, f64, usize)> {
    let mut width = hi - lo;
    // (point, |g|, scale) of the best point seen so far
    let mut best = (hi, f64::INFINITY, 1.0);
    for iteration in 1..=search.max_iterations {
        let secant = hi - g_hi * (hi - lo) / (g_hi - g_lo);
        let mid = 0.5 * (lo + hi);
        let x = if secant > lo && secant < hi && (hi - lo) <= 0.5 * width {
            secant
        } else {
            mid
        };
        width = hi - lo;
        let (g, scale) = first_order(set, x)?;
        if !g.is_finite() {
            return Err(Error::PrecisionBreakdown {
                stage: set.stage + 1,
                substep: 0,
                residual: f64::INFINITY,
                at: x,
            });
        }
        if g.abs() / scale < best.1 / best.2 {
            best = (x, g.abs(), scale);
        }
        if g.abs() <= search.tolerance * scale {
            return Ok((x, g.abs() / scale, iteration));
        }
        if g.signum() == g_lo.signum() {
            lo = x;
            g_lo = g;
        } else {
            hi = x;
            g_hi = g;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return Ok((best.0, best.1 / best.2, iteration));
        }
    }
    Ok((best.0, best.1 / best.2, search.max_iterations))
}
