mod common;

use common::*;
use num_complex::Complex64;
use refract_core::model::LevyModel;
use refract_core::spectral::{spectral_roots, RootKind};
use refract_core::PhaseTypeDistribution;

const RATES: [f64; 2] = [1.98, 5.98];

#[test]
fn laplace_exponent_matches_exponential_jump_formula() {
    let m = model(Case::Exponential, 0.02);
    for s in [0.1, 0.5, 1.0, 2.5, 7.0] {
        let direct = m.drift * s + 0.5 * SIGMA * SIGMA * s * s + RHO * (1.0 / (1.0 + s) - 1.0);
        assert!((m.psi(s).unwrap() - direct).abs() < 1e-13, "s = {s}");
    }
    assert!((m.psi(1.0).unwrap() + 0.04).abs() < 1e-12);
}

#[test]
fn calibration_hits_target_for_every_case() {
    for case in CASES {
        for gamma in [0.02, 0.05, 0.1] {
            let m = model(case, gamma);
            assert!((m.psi(1.0).unwrap() - (ALPHA - gamma)).abs() < 1e-12);
        }
    }
}

#[test]
fn jump_transform_matches_quadrature_of_density() {
    // E[e^{-sZ}] for Z ~ PH via quadrature of alpha e^{Tz} t, with e^{Tz} from nalgebra's exp.
    for case in [Case::Weibull, Case::FoldedNormal] {
        let m = model(case, 0.02);
        let pt = jumps(case);
        let t = pt.sub_intensity().clone();
        let exit = nalgebra::DVector::from_column_slice(pt.exit_rates());
        let alpha = nalgebra::RowDVector::from_row_slice(pt.alpha());
        let density = |z: f64| (&alpha * (&t * z).exp() * &exit)[(0, 0)];
        for s in [0.3, 1.0, 3.0] {
            let transform = simpson(&|z: f64| (-s * z).exp() * density(z), 0.0, 30.0, 1e-12);
            let direct = m.drift * s + 0.5 * SIGMA * SIGMA * s * s + RHO * (transform - 1.0);
            assert!((m.psi(s).unwrap() - direct).abs() < 1e-8, "{case:?} s = {s}");
        }
    }
}

#[test]
fn phi_matches_bisection() {
    for case in CASES {
        let m = model(case, 0.02);
        for q in [0.5, 1.0, 1.98, 5.98] {
            let oracle = bisect(&|s: f64| m.psi(s).unwrap() - q, 1e-9, 200.0, 1e-13);
            assert!((m.phi(q).unwrap() - oracle).abs() < 1e-9, "{case:?} q = {q}");
        }
    }
}

#[test]
fn phi_prime_matches_finite_difference() {
    for case in CASES {
        let m = model(case, 0.1);
        for p in RATES {
            let spec = spectral_roots(&m, p).unwrap();
            let fd = central_difference(&|q: f64| m.phi(q).unwrap(), p, 1e-5);
            assert!(rel_err(spec.phi_prime_p, fd) < 1e-7, "{case:?} p = {p}");
        }
    }
}

#[test]
fn weights_match_finite_difference_of_exponent() {
    for case in CASES {
        let m = model(case, 0.02);
        for p in RATES {
            let spec = spectral_roots(&m, p).unwrap();
            assert_eq!(spec.len(), m.jumps.phases() + 1);
            for (xi, kappa) in spec.roots.iter().zip(&spec.weights) {
                let h = Complex64::new(1e-6, 0.0);
                let s = -xi;
                let dpsi = (m.laplace_exponent(s + h).unwrap() - m.laplace_exponent(s - h).unwrap()) / (2.0 * h);
                let want = -1.0 / dpsi;
                assert!((kappa - want).norm() < 1e-6 * want.norm(), "{case:?} p = {p} xi = {xi}");
                assert!((m.laplace_exponent(s).unwrap() - p).norm() < 1e-10 * p.max(1.0));
            }
        }
    }
}

#[test]
fn conjugate_pairs_have_conjugate_weights() {
    let spec = spectral_roots(&model(Case::FoldedNormal, 0.1), 5.98).unwrap();
    for (i, kind) in spec.kinds.iter().enumerate() {
        if let RootKind::Upper(j) = kind {
            assert_eq!(spec.roots[*j], spec.roots[i].conj());
            assert!((spec.weights[*j] - spec.weights[i].conj()).norm() < 1e-12 * spec.weights[i].norm());
        }
    }
}

#[test]
fn scale_function_laplace_transform() {
    for case in CASES {
        let m = model(case, 0.02);
        for p in RATES {
            let spec = spectral_roots(&m, p).unwrap();
            for shift in [1.0, 2.0, 3.0] {
                let s = spec.phi_p + shift;
                let upper = 60.0 / shift;
                let integral = simpson(&|x: f64| (-s * x).exp() * spec.scale_function(x).unwrap(), 0.0, upper, 1e-13);
                let want = 1.0 / (m.psi(s).unwrap() - p);
                assert!(rel_err(integral, want) < 1e-6, "{case:?} p = {p} s = {s}");
            }
        }
    }
}

#[test]
fn resolvent_density_has_mass_one_over_p() {
    for case in CASES {
        let m = model(case, 0.1);
        for p in RATES {
            let spec = spectral_roots(&m, p).unwrap();
            let theta = |z: f64| spec.resolvent_density(z).unwrap();
            let mass = simpson_split(&theta, -60.0, 60.0, &[0.0], 1e-13);
            assert!(rel_err(mass, 1.0 / p) < 1e-6, "{case:?} p = {p}");
        }
    }
}

#[test]
fn resolvent_density_is_the_discounted_occupation_density_of_a_drift() {
    // Without jumps and Brownian part X_t = x + c t, so theta(z) = e^{-p z / c} / c for z > 0.
    let m = LevyModel::new(2.0, 1e-3, 0.0, PhaseTypeDistribution::exponential(1.0).unwrap()).unwrap();
    let spec = spectral_roots(&m, 1.0).unwrap();
    for z in [0.1, 0.5, 1.0] {
        assert!(rel_err(spec.resolvent_density(z).unwrap(), (-0.5 * z).exp() / 2.0) < 1e-5);
    }
}

#[test]
fn scale_function_nonnegative_and_nondecreasing() {
    for case in CASES {
        let spec = spectral_roots(&model(case, 0.02), 1.98).unwrap();
        let mut previous = 0.0;
        for k in 0..=200 {
            let w = spec.scale_function(k as f64 * 0.025).unwrap();
            assert!(w >= -1e-12 && w >= previous - 1e-12, "{case:?} at {k}");
            previous = w;
        }
    }
}

#[test]
fn phi_strictly_increasing() {
    for case in CASES {
        let m = model(case, 0.02);
        let values: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&q| m.phi(q).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]), "{case:?}: {values:?}");
    }
}
