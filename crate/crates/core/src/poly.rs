//! Real polynomials in ascending-coefficient order and their complex roots.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Characteristic polynomial `det(sI - A)` and the adjugate terms of `sI - A`
/// by the Faddeev-LeVerrier recursion.
///
/// Returns `(c, m)` with `det(sI - A) = sum_k c[k] s^(d-k)` (so `c[0] = 1`) and
/// `adj(sI - A) = sum_{k=1..d} m[k-1] s^(d-k)`.
pub fn faddeev_leverrier(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DMatrix<f64>>) {
    let d = a.nrows();
    let identity = DMatrix::<f64>::identity(d, d);
    let mut coeffs = Vec::with_capacity(d + 1);
    coeffs.push(1.0);
    let mut adj_terms = Vec::with_capacity(d);
    let mut m = DMatrix::<f64>::zeros(d, d);
    for k in 1..=d {
        m = a * &m + &identity * coeffs[k - 1];
        let am = a * &m;
        coeffs.push(-am.trace() / k as f64);
        adj_terms.push(m.clone());
    }
    (coeffs, adj_terms)
}

/// Product of two ascending-order polynomials.
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum of two ascending-order polynomials.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// All complex roots of an ascending-order polynomial, as eigenvalues of its
/// companion matrix. Trailing zero coefficients are dropped first.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|&v| v == 0.0) {
        c.pop();
    }
    let degree = c.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = c[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -c[i] / lead;
    }
    companion.complex_eigenvalues().iter().copied().collect()
}
