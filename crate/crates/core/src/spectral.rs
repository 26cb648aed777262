//! Roots of `psi(s) = p` and the closed forms they give for the `p`-scale
//! function and the `p`-resolvent density.
//!
//! For a phase-type model, multiplying `psi(s) - p` by `det(sI - T)` leaves a
//! real polynomial of degree `d + 2` (`d + 1` without a Brownian part). Its
//! largest real root is `Phi(p)`; the remaining roots `-xi_i` all have
//! negative real part, and
//!
//! ```text
//! W(x)     = Phi'(p) e^{Phi(p) x} - sum_i kappa_i e^{-xi_i x},   x >= 0
//! theta(z) = Phi'(p) e^{-Phi(p) z}                               z > 0
//!          = sum_i kappa_i e^{xi_i z}                            z <= 0
//! ```
//!
//! with `kappa_i = -1 / psi'(-xi_i)` and `Phi'(p) = 1 / psi'(Phi(p))`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::poly;
use crate::sum::CompensatedComplexSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootTolerances {
    /// Minimum pairwise distance between roots.
    pub separation: f64,
    /// `|Im| < snap * (1 + |Re|)` puts a root on the real axis.
    pub real_snap: f64,
    /// Allowed `|psi(r) - p|`, relative to `max(1, |p|)`.
    pub residual: f64,
    /// Allowed imaginary residue of assembled real quantities, relative.
    pub imaginary: f64,
    /// Newton polishing steps applied to every companion-matrix root.
    pub newton_steps: usize,
}

impl Default for RootTolerances {
    fn default() -> Self {
        Self {
            separation: 1e-6,
            real_snap: 1e-8,
            residual: 1e-10,
            imaginary: 1e-9,
            newton_steps: 20,
        }
    }
}

/// How a root relates to its complex conjugate in [`SpectralData::roots`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "partner")]
pub enum RootKind {
    Real,
    /// Positive imaginary part; its conjugate is stored at `partner`.
    Upper(usize),
    /// Negative imaginary part; conjugate of the root at `partner`.
    Lower(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData {
    pub p: f64,
    pub phi_p: f64,
    pub phi_prime_p: f64,
    /// `xi_i`, all with positive real part, sorted by real part; conjugate
    /// pairs are adjacent with the upper member first.
    pub roots: Vec<Complex64>,
    /// `kappa_i`, aligned with `roots`.
    pub weights: Vec<Complex64>,
    pub kinds: Vec<RootKind>,
    /// Largest `|psi(r) - p|` over all returned roots, including `Phi(p)`.
    pub max_residual: f64,
    pub tolerances: RootTolerances,
}

/// Computes [`SpectralData`] with default tolerances.
pub fn spectral_roots(model: &LevyModel, p: f64) -> Result<SpectralData> {
    spectral_roots_with(model, p, RootTolerances::default())
}

pub fn spectral_roots_with(
    model: &LevyModel,
    p: f64,
    tol: RootTolerances,
) -> Result<SpectralData> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::DomainError(format!("killing rate p = {p} must be positive")));
    }
    let raw = poly::roots(&cleared_polynomial(model, p));
    let phases = model.effective_phases();
    let expected_negative = if model.sigma > 0.0 { phases + 1 } else { phases };

    let mut polished = Vec::with_capacity(raw.len());
    for r in raw {
        polished.push(polish(model, p, r, tol)?);
    }

    let mut positive: Vec<Complex64> = Vec::new();
    let mut negative: Vec<Complex64> = Vec::new();
    for r in polished {
        if r.re > 0.0 {
            positive.push(r);
        } else {
            negative.push(r);
        }
    }

    let phi_p = positive
        .iter()
        .filter(|z| z.im == 0.0)
        .map(|z| z.re)
        .fold(f64::NAN, f64::max);
    if !phi_p.is_finite() || positive.len() != 1 {
        return Err(Error::NoRoot {
            target: p,
            reason: format!(
                "expected exactly one real root with positive real part, found {:?}",
                positive
            ),
        });
    }
    if negative.len() != expected_negative {
        return Err(Error::CountMismatch {
            expected: expected_negative,
            found: negative.len(),
        });
    }
    if negative.iter().any(|z| z.re >= phi_p) {
        return Err(Error::NoRoot {
            target: p,
            reason: "Phi(p) does not dominate the other roots".into(),
        });
    }

    // Separation check over every root, Phi(p) included.
    let mut all: Vec<Complex64> = negative.clone();
    all.push(Complex64::new(phi_p, 0.0));
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            if (all[i] - all[j]).norm() < tol.separation {
                return Err(Error::RootMultiplicity {
                    first: format!("{}", all[i]),
                    second: format!("{}", all[j]),
                    threshold: tol.separation,
                });
            }
        }
    }

    let (roots, kinds) = pair_conjugates(negative.iter().map(|z| -z).collect())?;

    let mut weights = Vec::with_capacity(roots.len());
    for (i, xi) in roots.iter().enumerate() {
        let w = match kinds[i] {
            RootKind::Lower(partner) => weights_conj(&weights, partner),
            _ => {
                let w = -1.0 / model.laplace_exponent_derivative(-xi)?;
                if kinds[i] == RootKind::Real {
                    Complex64::new(w.re, 0.0)
                } else {
                    w
                }
            }
        };
        weights.push(w);
    }

    let phi_prime_p = 1.0 / model.dpsi(phi_p)?;

    let mut max_residual = (model.psi(phi_p)? - p).abs();
    for xi in &roots {
        max_residual = max_residual.max((model.laplace_exponent(-xi)? - p).norm());
    }
    if max_residual > tol.residual * p.abs().max(1.0) {
        return Err(Error::NoRoot {
            target: p,
            reason: format!("root residual {max_residual:e} above tolerance"),
        });
    }

    Ok(SpectralData {
        p,
        phi_p,
        phi_prime_p,
        roots,
        weights,
        kinds,
        max_residual,
        tolerances: tol,
    })
}

fn weights_conj(weights: &[Complex64], partner: usize) -> Complex64 {
    weights[partner].conj()
}

/// `(sigma^2/2 s^2 + c s - rho - p) det(sI - T) + rho alpha adj(sI - T) t`.
fn cleared_polynomial(model: &LevyModel, p: f64) -> Vec<f64> {
    let quadratic = [
        -model.rho - p,
        model.drift,
        0.5 * model.sigma * model.sigma,
    ];
    if model.rho == 0.0 {
        return quadratic.to_vec();
    }
    let t = model.jumps.sub_intensity();
    let d = t.nrows();
    let (char_desc, adj_terms) = poly::faddeev_leverrier(t);
    let char_asc: Vec<f64> = char_desc.iter().rev().copied().collect();

    let alpha = model.jumps.alpha();
    let exit = model.jumps.exit_rates();
    // adj(sI - T) = sum_{k=1..d} adj_terms[k-1] s^(d-k)
    let mut adj_asc = vec![0.0; d];
    for (k, m) in adj_terms.iter().enumerate() {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += alpha[i] * m[(i, j)] * exit[j];
            }
        }
        adj_asc[d - 1 - k] = acc;
    }
    let jump: Vec<f64> = adj_asc.iter().map(|v| model.rho * v).collect();
    poly::add(&poly::mul(&quadratic, &char_asc), &jump)
}

fn polish(model: &LevyModel, p: f64, start: Complex64, tol: RootTolerances) -> Result<Complex64> {
    let mut z = start;
    for _ in 0..tol.newton_steps {
        let f = model.laplace_exponent(z)? - p;
        let df = model.laplace_exponent_derivative(z)?;
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    if z.im.abs() < tol.real_snap * (1.0 + z.re.abs()) {
        z.im = 0.0;
        // a couple of real Newton steps after snapping
        for _ in 0..2 {
            let f = model.psi(z.re)? - p;
            let df = model.dpsi(z.re)?;
            if df != 0.0 {
                z.re -= f / df;
            }
        }
    }
    Ok(z)
}

/// Orders roots by real part, placing each complex pair as (upper, lower) and
/// forcing exact conjugacy within a pair.
fn pair_conjugates(mut roots: Vec<Complex64>) -> Result<(Vec<Complex64>, Vec<RootKind>)> {
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut out = Vec::with_capacity(roots.len());
    let mut kinds = Vec::with_capacity(roots.len());
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = roots[i];
        if z.im == 0.0 {
            out.push(z);
            kinds.push(RootKind::Real);
            continue;
        }
        let partner = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (roots[a] - z.conj())
                    .norm()
                    .partial_cmp(&(roots[b] - z.conj()).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(j) = partner else {
            return Err(Error::ImaginaryResidue {
                residue: z.im.abs(),
                context: format!("unpaired complex root {z}"),
            });
        };
        if (roots[j] - z.conj()).norm() > 1e-8 * z.norm().max(1.0) {
            return Err(Error::ImaginaryResidue {
                residue: (roots[j] - z.conj()).norm(),
                context: format!("root {z} has no conjugate partner"),
            });
        }
        used[j] = true;
        let upper = if z.im > 0.0 { z } else { z.conj() };
        let idx = out.len();
        out.push(upper);
        kinds.push(RootKind::Upper(idx + 1));
        out.push(upper.conj());
        kinds.push(RootKind::Lower(idx));
    }
    Ok((out, kinds))
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Sum over roots of `term(i)`, with conjugate pairs folded as `2 Re`.
    /// Returns the real value together with the imaginary residue and the
    /// magnitude of the summed terms (for relative checks).
    pub fn real_sum(&self, mut term: impl FnMut(usize) -> Complex64) -> (f64, f64, f64) {
        let mut acc = CompensatedComplexSum::new();
        let mut magnitude = 0.0;
        for (i, kind) in self.kinds.iter().enumerate() {
            match kind {
                RootKind::Real => {
                    let v = term(i);
                    magnitude += v.norm();
                    acc.add(v);
                }
                RootKind::Upper(_) => {
                    let v = term(i);
                    magnitude += 2.0 * v.norm();
                    acc.add(Complex64::new(2.0 * v.re, 0.0));
                }
                RootKind::Lower(_) => {}
            }
        }
        let total = acc.value();
        (total.re, total.im.abs(), magnitude)
    }

    fn check_residue(&self, residue: f64, magnitude: f64, context: &str) -> Result<()> {
        if residue > self.tolerances.imaginary * magnitude.max(f64::MIN_POSITIVE) && residue > 0.0 {
            return Err(Error::ImaginaryResidue {
                residue,
                context: context.into(),
            });
        }
        Ok(())
    }

    /// `W^{(p)}(x)`; zero for `x < 0`.
    pub fn scale_function(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        let (sum, residue, magnitude) =
            self.real_sum(|i| self.weights[i] * (-self.roots[i] * x).exp());
        self.check_residue(residue, magnitude, "scale function")?;
        Ok(self.phi_prime_p * (self.phi_p * x).exp() - sum)
    }

    /// Density `theta^{(p)}(z)` of the `p`-resolvent at displacement `z = y - x`.
    pub fn resolvent_density(&self, z: f64) -> Result<f64> {
        if z > 0.0 {
            return Ok(self.phi_prime_p * (-self.phi_p * z).exp());
        }
        let (sum, residue, magnitude) =
            self.real_sum(|i| self.weights[i] * (self.roots[i] * z).exp());
        self.check_residue(residue, magnitude, "resolvent density")?;
        Ok(sum)
    }
}
