//! Shared fixtures and independent numerical oracles for the integration tests.
#![allow(dead_code)]

use refract_core::{LevyModel, PhaseTypeDistribution};

pub const SIGMA: f64 = 0.2;
pub const RHO: f64 = 1.5;
pub const ALPHA: f64 = -0.02;
pub const STRIKE: f64 = 100.0;
pub const DELTA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Exponential,
    Weibull,
    FoldedNormal,
}

pub const CASES: [Case; 3] = [Case::Exponential, Case::Weibull, Case::FoldedNormal];

const WEIBULL_ALPHA: [f64; 6] = [0.0, 0.0007, 0.9961, 0.0, 0.0001, 0.0031];
const WEIBULL_T: [[f64; 6]; 6] = [
    [-5.6546, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6066, -5.6847, 0.0, 0.0166, 0.0089, 5.0526],
    [0.2156, 4.3616, -5.6485, 0.9162, 0.1424, 0.0126],
    [5.6247, 0.0, 0.0, -5.6786, 0.0, 0.0],
    [0.0107, 0.0, 0.0, 5.7247, -5.7420, 0.0],
    [0.0136, 0.0, 0.0, 0.0024, 5.7022, -5.7183],
];

const FOLDED_ALPHA: [f64; 6] = [0.0052, 0.0659, 0.7446, 0.0398, 0.0043, 0.1403];
const FOLDED_T: [[f64; 6]; 6] = [
    [-4.0488, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.1320, -4.0012, 0.0, 0.0455, 3.7040, 0.0044],
    [0.2367, 0.8595, -4.2831, 0.1897, 0.2918, 2.3724],
    [3.1532, 0.0, 0.0, -4.0229, 0.0, 0.0],
    [0.2497, 0.0, 0.0, 3.7024, -4.0124, 0.0],
    [0.0434, 2.1947, 0.0938, 0.1704, 0.1217, -4.9612],
];

fn rows(t: &[[f64; 6]; 6]) -> Vec<Vec<f64>> {
    t.iter().map(|r| r.to_vec()).collect()
}

pub fn jumps(case: Case) -> PhaseTypeDistribution {
    match case {
        Case::Exponential => PhaseTypeDistribution::exponential(1.0).unwrap(),
        Case::Weibull => PhaseTypeDistribution::normalized(WEIBULL_ALPHA.to_vec(), rows(&WEIBULL_T)).unwrap(),
        Case::FoldedNormal => PhaseTypeDistribution::normalized(FOLDED_ALPHA.to_vec(), rows(&FOLDED_T)).unwrap(),
    }
}

pub fn model(case: Case, gamma: f64) -> LevyModel {
    LevyModel::calibrated(SIGMA, RHO, jumps(case), ALPHA, gamma).unwrap()
}

pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // The second test stops refinement once the correction is at rounding level.
        if depth == 0 || !delta.is_finite() || delta.abs() <= 15.0 * tol || delta.abs() <= 1e-15 * (left.abs() + right.abs()) {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate, its distance from the embedded 7-point Gauss
/// rule, and the integral of `|f|` on the same nodes.
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let centre = f(c);
    let mut k = GK_WEIGHTS[7] * centre;
    let mut g = GAUSS_WEIGHTS[3] * centre;
    let mut abs = GK_WEIGHTS[7] * centre.abs();
    for j in 0..7 {
        let left = f(c - h * GK_NODES[j]);
        let right = f(c + h * GK_NODES[j]);
        k += GK_WEIGHTS[j] * (left + right);
        abs += GK_WEIGHTS[j] * (left.abs() + right.abs());
        if j % 2 == 1 {
            g += GAUSS_WEIGHTS[j / 2] * (left + right);
        }
    }
    (k * h, ((k - g) * h).abs(), abs * h.abs())
}

/// Adaptive Gauss-Kronrod quadrature with absolute tolerance `tol`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err, abs) = kronrod(f, a, b);
        if depth == 0 || !err.is_finite() || err <= tol || err <= 1e-14 * abs {
            return value;
        }
        let m = 0.5 * (a + b);
        refine(f, a, m, 0.5 * tol, depth - 1) + refine(f, m, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    refine(f, a, b, tol, 30)
}

/// Gauss-Kronrod over `[a, b]` split at the given interior points.
pub fn gauss_kronrod_split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    split_points(a, b, breaks).windows(2).map(|w| gauss_kronrod(f, w[0], w[1], tol)).sum()
}

fn split_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut points = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(f64::total_cmp);
    points.extend(inner);
    points.push(b);
    points
}

/// Quadrature over `[a, b]` split at the given interior points (kinks or jumps).
pub fn simpson_split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    split_points(a, b, breaks).windows(2).map(|w| simpson(f, w[0], w[1], tol)).sum()
}

/// Central difference `f'(x)`.
pub fn central_difference<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Bisection root of a continuous function with a sign change on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

pub mod random {
    //! Random coefficient sets that respect the corner structure and conjugate symmetry.

    use std::sync::Arc;

    use num_complex::Complex64;
    use rand::Rng;
    use refract_core::recursion::{CoefficientSet, RecursionContext, RegionCoefficients};
    use refract_core::spectral::{spectral_roots, RootKind};
    use refract_core::LevyModel;

    /// Context for `p = alpha + shape / delta`, strike 1.
    pub fn context(model: &LevyModel, shape: usize) -> Arc<RecursionContext> {
        let lambda = shape as f64 / super::DELTA;
        let spectral = spectral_roots(model, super::ALPHA + lambda).unwrap();
        let phi_alpha = model.phi(super::ALPHA).unwrap();
        Arc::new(RecursionContext::new(spectral, phi_alpha, lambda, 1.0).unwrap())
    }

    fn unit<R: Rng>(rng: &mut R) -> f64 {
        rng.random_range(-1.0..1.0)
    }

    /// One region's coefficients; `lower` / `upper` are its finite limits, if any.
    /// Each term is of order one at the nearer finite limit.
    pub fn region<R: Rng>(
        ctx: &RecursionContext,
        terms: usize,
        lower: Option<f64>,
        upper: Option<f64>,
        rng: &mut R,
    ) -> RegionCoefficients {
        let spec = &ctx.spectral;
        let mut f = RegionCoefficients::zero(spec.roots.len(), terms);
        if let Some(lo) = lower {
            f.a = unit(rng);
            f.b = unit(rng) * (-lo).exp();
            for j in 0..spec.roots.len() {
                let scale = (spec.roots[j].re * lo).exp();
                match spec.kinds[j] {
                    RootKind::Real => {
                        f.c[j] = (0..terms).map(|_| Complex64::new(unit(rng) * scale, 0.0)).collect();
                    }
                    RootKind::Upper(_) => {
                        f.c[j] = (0..terms)
                            .map(|_| Complex64::new(unit(rng), unit(rng)) * scale)
                            .collect();
                    }
                    RootKind::Lower(partner) => {
                        f.c[j] = f.c[partner].iter().map(|z| z.conj()).collect();
                    }
                }
            }
        }
        if let Some(hi) = upper {
            let d_scale = (-spec.phi_p * hi).exp();
            f.d = (0..terms).map(|_| unit(rng) * d_scale).collect();
            f.e = unit(rng) * (-ctx.phi_alpha * hi).exp();
        }
        f
    }

    /// A set with `thresholds` thresholds in `[-1.5, 1.5]` and polynomial degree `degree`.
    pub fn set<R: Rng>(ctx: Arc<RecursionContext>, thresholds: usize, degree: usize, rng: &mut R) -> CoefficientSet {
        let mut a: Vec<f64> = (0..thresholds).map(|_| rng.random_range(-1.5..1.5)).collect();
        a.sort_by(|x, y| y.total_cmp(x));
        let terms = degree + 1;
        let regions = (0..=thresholds)
            .map(|r| {
                let upper = (r > 0).then(|| a[r - 1]);
                let lower = (r < thresholds).then(|| a[r]);
                region(&ctx, terms, lower, upper, rng)
            })
            .collect();
        CoefficientSet {
            stage: 1,
            substep: 0,
            thresholds: a,
            regions,
            context: ctx,
        }
    }
}

pub mod oracle {
    //! Quadrature versions of the operators the solver computes in closed form.

    use num_complex::Complex64;
    use refract_core::recursion::{CoefficientSet, RecursionContext, RegionCoefficients};

    /// `lambda int theta(y - x) f(y) dy`, with `|y - x| <= 60`, to relative
    /// accuracy `tol`. Returns the value and `lambda int theta |f|` as its scale.
    pub fn resolvent(set: &CoefficientSet, x: f64, tol: f64) -> (f64, f64) {
        let ctx = &set.context;
        let theta = |z: f64| ctx.spectral.resolvent_density(z).unwrap();
        let f = |y: f64| set.evaluate_local(y).unwrap();
        let mut breaks = set.thresholds.clone();
        breaks.push(x);
        let lo = x - 60.0;
        let hi = x + 60.0;
        let scale = super::gauss_kronrod_split(&|y: f64| (theta(y - x) * f(y)).abs(), lo, hi, &breaks, 1e-6);
        let value = super::gauss_kronrod_split(&|y: f64| theta(y - x) * f(y), lo, hi, &breaks, tol * scale);
        (ctx.lambda * value, ctx.lambda * scale)
    }

    /// `int_s^t e^{-q y} f(y) dy` on one region by quadrature, split into real and imaginary parts.
    pub fn region_integral(
        region: &RegionCoefficients,
        ctx: &RecursionContext,
        s: f64,
        t: f64,
        q: Complex64,
        tol: f64,
    ) -> Complex64 {
        let f = |y: f64| region.evaluate(ctx, y).0;
        let re = super::gauss_kronrod(&|y: f64| ((-q * y).exp() * f(y)).re, s, t, tol);
        let im = super::gauss_kronrod(&|y: f64| ((-q * y).exp() * f(y)).im, s, t, tol);
        Complex64::new(re, im)
    }
}
