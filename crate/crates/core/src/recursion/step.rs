//! One application of `M_x f = lambda int theta^{(p)}(y - x) f(y) dy` to a
//! piecewise expression, carried out on the coefficients.
//!
//! For `x` in region `r`, with `G_r` a primitive of `e^{-Phi(p) y} f_r(y)` and
//! `F_{r,i}` a primitive of `e^{xi_i y} f_r(y)`,
//!
//! ```text
//! M_x f / lambda = Phi'(p) e^{Phi(p) x} [G_r(upper_r) - G_r(x) + sum_{l<r} varpi_l(Phi(p))]
//!                + sum_i kappa_i e^{-xi_i x} [F_{r,i}(x) - F_{r,i}(lower_r) + sum_{l>r} varpi_l(-xi_i)]
//! ```
//!
//! The `x`-dependent parts fold back into the five coefficient families and
//! the constants land on `D_0` and `C_{i,0}`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::spectral::RootKind;
use crate::sum::{CompensatedComplexSum, CompensatedSum};

use super::coefficients::{CoefficientSet, RecursionContext, RegionCoefficients};
use super::extended::ExtReal;
use super::varpi::{integ, weighted_terms, Primitive};

const A: usize = 0;
const B: usize = 1;
const FIRST_C: usize = 2;

/// Output of [`resolvent_step`] together with the largest imaginary part that
/// was discarded from coefficients of real roots (relative to their size).
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub set: CoefficientSet,
    pub imaginary_residue: f64,
}

/// Computes `u^{(n, m+1)} = M u^{(n, m)}`, raising the polynomial degree by one.
pub fn resolvent_step(set: &CoefficientSet) -> Result<StepOutput> {
    let ctx = &*set.context;
    let spec = &ctx.spectral;
    let roots = spec.roots.len();
    let regions = set.regions.len();
    let last = regions - 1;
    let phi = Complex64::new(spec.phi_p, 0.0);

    // Region integrals against e^{-Phi(p) y} and e^{xi_j y}.
    let bounds: Vec<(ExtReal, ExtReal)> = (0..regions).map(|r| set.region_bounds(r)).collect();
    let phi_primitives: Vec<Primitive> = set
        .regions
        .iter()
        .map(|f| Primitive::new(f, ctx, phi))
        .collect();
    let xi_primitives: Vec<Vec<Primitive>> = set
        .regions
        .iter()
        .map(|f| spec.roots.iter().map(|xi| Primitive::new(f, ctx, -xi)).collect())
        .collect();

    let span = |p: &Primitive, (lo, hi): (ExtReal, ExtReal)| -> Result<Complex64> {
        if lo == hi {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(p.at(hi)? - p.at(lo)?)
    };

    // Only regions above some other region enter the Phi(p) sums, and only
    // regions below some other region enter the xi sums.
    let mut phi_spans = Vec::with_capacity(last);
    for r in 0..last {
        phi_spans.push(span(&phi_primitives[r], bounds[r])?);
    }
    let mut xi_spans = vec![vec![Complex64::new(0.0, 0.0); roots]; regions];
    for r in 1..regions {
        for j in 0..roots {
            if !matches!(spec.kinds[j], RootKind::Lower(_)) {
                xi_spans[r][j] = span(&xi_primitives[r][j], bounds[r])?;
            }
        }
    }

    // Constants entering D_0 (regions below the top) and C_{j,0} (regions above the bottom).
    let mut up_constants = vec![Complex64::new(0.0, 0.0); regions];
    for r in 1..regions {
        let mut acc = CompensatedComplexSum::new();
        acc.add(phi_primitives[r].at(bounds[r].1)?);
        for s in &phi_spans[..r] {
            acc.add(*s);
        }
        up_constants[r] = acc.value();
    }
    let mut down_constants = vec![vec![Complex64::new(0.0, 0.0); roots]; regions];
    for r in 0..last {
        for j in 0..roots {
            if matches!(spec.kinds[j], RootKind::Lower(_)) {
                continue;
            }
            let mut acc = CompensatedComplexSum::new();
            acc.add(-xi_primitives[r][j].at(bounds[r].0)?);
            for spans in &xi_spans[r + 1..] {
                acc.add(spans[j]);
            }
            down_constants[r][j] = acc.value();
        }
    }

    let outputs: Vec<(RegionCoefficients, f64)> = (0..regions)
        .into_par_iter()
        .map(|r| {
            transform_region(
                &set.regions[r],
                ctx,
                set.terms() + 1,
                up_constants[r],
                &down_constants[r],
                r > 0,
                r < last,
            )
        })
        .collect();

    let imaginary_residue = outputs.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok(StepOutput {
        set: CoefficientSet {
            stage: set.stage,
            substep: set.substep + 1,
            thresholds: set.thresholds.clone(),
            regions: outputs.into_iter().map(|o| o.0).collect(),
            context: set.context.clone(),
        },
        imaginary_residue,
    })
}

fn pad(mut v: Vec<Complex64>, len: usize) -> Vec<Complex64> {
    v.resize(len, Complex64::new(0.0, 0.0));
    v
}

/// New coefficients of one region. `below_top` / `above_bottom` switch on
/// the families that the corner structure allows.
fn transform_region(
    f: &RegionCoefficients,
    ctx: &RecursionContext,
    terms: usize,
    up_constant: Complex64,
    down_constants: &[Complex64],
    below_top: bool,
    above_bottom: bool,
) -> (RegionCoefficients, f64) {
    let spec = &ctx.spectral;
    let roots = spec.roots.len();
    let lambda = ctx.lambda;
    let phi_prime = spec.phi_prime_p;
    let d_index = FIRST_C + roots;
    let e_index = d_index + 1;

    // hat: -Q of each term of e^{-Phi(p) y} f(y)
    let hat: Vec<Vec<Complex64>> = weighted_terms(f, ctx, Complex64::new(spec.phi_p, 0.0))
        .into_iter()
        .map(|t| pad(integ(&t.poly, t.rate).into_iter().map(|z| -z).collect(), terms))
        .collect();
    // Q^{(i)} of each term of e^{xi_i y} f(y), for every root i
    let check: Vec<Vec<Vec<Complex64>>> = spec
        .roots
        .iter()
        .map(|xi| {
            weighted_terms(f, ctx, -xi)
                .into_iter()
                .map(|t| pad(integ(&t.poly, t.rate), terms))
                .collect()
        })
        .collect();

    // sum_i kappa_i Q^{(i)}_k[h] for a real-valued family k, pairs folded as 2 Re.
    let folded = |k: usize, h: usize| -> f64 {
        let (value, _, _) = spec.real_sum(|i| spec.weights[i] * check[i][k][h]);
        value
    };
    let real_family = |k: usize, h: usize| -> f64 {
        let mut acc = CompensatedSum::new();
        acc.add(phi_prime * hat[k][h].re);
        acc.add(folded(k, h));
        lambda * acc.value()
    };

    let mut out = RegionCoefficients::zero(roots, terms);
    let mut residue: f64 = 0.0;
    if above_bottom {
        out.a = real_family(A, 0);
        out.b = real_family(B, 0);
        for j in 0..roots {
            match spec.kinds[j] {
                RootKind::Lower(partner) => {
                    out.c[j] = out.c[partner].iter().map(|z| z.conj()).collect();
                }
                kind => {
                    let k = FIRST_C + j;
                    for h in 0..terms {
                        let mut acc = CompensatedComplexSum::new();
                        acc.add(phi_prime * hat[k][h]);
                        for i in 0..roots {
                            acc.add(spec.weights[i] * check[i][k][h]);
                        }
                        if h == 0 {
                            acc.add(spec.weights[j] * down_constants[j]);
                        }
                        let mut value = lambda * acc.value();
                        if kind == RootKind::Real {
                            if value.norm() > 0.0 {
                                residue = residue.max(value.im.abs() / value.norm());
                            }
                            value.im = 0.0;
                        }
                        out.c[j][h] = value;
                    }
                }
            }
        }
    }
    if below_top {
        for h in 0..terms {
            let mut value = real_family(d_index, h);
            if h == 0 {
                let constant = up_constant;
                if constant.norm() > 0.0 {
                    residue = residue.max(constant.im.abs() / constant.norm());
                }
                value += lambda * phi_prime * constant.re;
            }
            out.d[h] = value;
        }
        out.e = real_family(e_index, 0);
    }
    (out, residue)
}

/// Applies [`resolvent_step`] `count` times.
pub fn apply_steps(set: &CoefficientSet, count: usize) -> Result<CoefficientSet> {
    let mut current = set.clone();
    for _ in 0..count {
        current = resolvent_step(&current)?.set;
    }
    Ok(current)
}
