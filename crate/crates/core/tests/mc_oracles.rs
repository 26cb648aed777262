mod common;

use common::*;
use refract_core::mc::{
    estimate_expectation, estimate_with, path_rng, sample_phase_type, simulate_terminal, BrownianScheme, Horizon,
    PathSimulator, PhaseTypeSampler, SimulationConfig,
};
use refract_core::recursion::{solve, RecursionTolerances, SolveParams};
use refract_core::{LevyModel, PhaseTypeDistribution};

fn sample_stats(draws: &[f64]) -> (f64, f64) {
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn exponential_jump_mean() {
    let pt = PhaseTypeDistribution::exponential(1.0).unwrap();
    let sampler = PhaseTypeSampler::new(&pt);
    let mut rng = path_rng(11, 0);
    let draws: Vec<f64> = (0..1_000_000).map(|_| sampler.sample(&mut rng)).collect();
    let (mean, se) = sample_stats(&draws);
    assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    assert!(draws.iter().all(|&z| z > 0.0));
}

#[test]
fn fitted_jump_means_match_matrix_inverse() {
    for case in [Case::Weibull, Case::FoldedNormal] {
        let pt = jumps(case);
        // alpha (-T)^{-1} 1 from nalgebra's LU
        let neg_t = -pt.sub_intensity().clone();
        let ones = nalgebra::DVector::from_element(pt.phases(), 1.0);
        let solved = neg_t.lu().solve(&ones).unwrap();
        let analytic: f64 = pt.alpha().iter().zip(solved.iter()).map(|(a, s)| a * s).sum();
        let mut rng = path_rng(12, 0);
        let draws: Vec<f64> = (0..400_000).map(|_| sample_phase_type(&pt, &mut rng)).collect();
        let (mean, se) = sample_stats(&draws);
        assert!((mean - analytic).abs() < 3.0 * se, "{case:?}: {mean} vs {analytic}");
        assert!(draws.iter().all(|&z| z > 0.0));
    }
}

#[test]
fn brownian_variance_without_jumps() {
    let m = LevyModel::new(0.3, 0.2, 0.0, PhaseTypeDistribution::exponential(1.0).unwrap()).unwrap();
    for scheme in [BrownianScheme::RandomWalk, BrownianScheme::Gaussian] {
        let sim = PathSimulator::new(&m, 100, scheme);
        let draws: Vec<f64> = (0..100_000).map(|i| sim.terminal(0.0, 2.0, &mut path_rng(13, i))).collect();
        let (mean, _) = sample_stats(&draws);
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((var / (0.04 * 2.0) - 1.0).abs() < 0.05, "{scheme:?}: {var}");
    }
}

#[test]
fn exponential_moment_matches_laplace_exponent() {
    let m = model(Case::Exponential, 0.02);
    let config = SimulationConfig {
        paths: 1_000_000,
        steps_per_interarrival: 100,
        seed: 14,
        horizon: Horizon::Constant { time: 1.0 },
        brownian: BrownianScheme::RandomWalk,
    };
    let est = estimate_with(&m, 0.0, &config, |_, x| Ok(x.exp())).unwrap();
    let want = m.psi(1.0).unwrap().exp();
    assert!((est.mean - want).abs() < 3.0 * est.stderr, "{} vs {want}", est.mean);
}

#[test]
fn discounted_exponential_is_a_martingale() {
    for case in CASES {
        let gamma = 0.1;
        let m = model(case, gamma);
        let config = SimulationConfig {
            paths: 200_000,
            steps_per_interarrival: 100,
            seed: 15,
            horizon: Horizon::Constant { time: 1.0 },
            brownian: BrownianScheme::RandomWalk,
        };
        let x0 = 4.6;
        let est = estimate_with(&m, x0, &config, |t, x| Ok((-(ALPHA - gamma) * t + x - x0).exp())).unwrap();
        assert!((est.mean - 1.0).abs() < 3.0 * est.stderr, "{case:?}: {est:?}");
    }
}

#[test]
fn fixed_seed_is_reproducible_and_interval_is_symmetric() {
    let m = model(Case::FoldedNormal, 0.02);
    let config = SimulationConfig {
        paths: 10_000,
        steps_per_interarrival: 20,
        seed: 16,
        horizon: Horizon::erlang_with_mean(3, DELTA),
        brownian: BrownianScheme::RandomWalk,
    };
    let f = |x: f64| (x - 4.0).max(0.0);
    let a = estimate_expectation(&m, &f, 4.5, ALPHA, &config).unwrap();
    let b = estimate_expectation(&m, &f, 4.5, ALPHA, &config).unwrap();
    assert_eq!(a, b);
    assert!(a.ci_low <= a.mean && a.mean <= a.ci_high);
    assert!(((a.ci_high - a.mean) - 1.959_963_984_540_054 * a.stderr).abs() < 1e-12 * a.mean);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| estimate_expectation(&m, &f, 4.5, ALPHA, &config).unwrap());
    assert_eq!(a, c);
}

#[test]
fn interval_shrinks_like_inverse_root_paths() {
    let m = model(Case::Exponential, 0.02);
    let run = |paths| {
        let config = SimulationConfig {
            paths,
            steps_per_interarrival: 100,
            seed: 17,
            horizon: Horizon::erlang_with_mean(1, DELTA),
            brownian: BrownianScheme::RandomWalk,
        };
        estimate_expectation(&m, &|x: f64| (x.exp() - STRIKE).max(0.0), 5.0, ALPHA, &config).unwrap()
    };
    let ratio = run(10_000).half_width() / run(1_000_000).half_width();
    assert!((ratio / 10.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn terminal_is_exact_for_pure_drift() {
    let m = LevyModel::new(1.0, 0.0, 0.0, PhaseTypeDistribution::exponential(1.0).unwrap()).unwrap();
    let mut rng = path_rng(0, 0);
    assert_eq!(simulate_terminal(&m, 0.0, 2.0, 100, &mut rng), 2.0);
    assert_eq!(simulate_terminal(&m, 1.5, 0.0, 100, &mut rng), 1.5);
}

#[test]
fn closed_form_inside_erlang_intervals_for_exact_model() {
    let m = model(Case::Exponential, 0.02);
    for shape in 1..=5 {
        let params = SolveParams {
            final_continuation: true,
            ..SolveParams::new(ALPHA, STRIKE, DELTA, 1, shape)
        };
        let result = solve(&m, params, &RecursionTolerances::default()).unwrap();
        let closed = result.anchor_value().unwrap().unwrap();
        let misses = (0..5)
            .filter(|seed| {
                let config = SimulationConfig {
                    paths: 200_000,
                    steps_per_interarrival: 100,
                    seed: 100 + seed,
                    horizon: Horizon::erlang_with_mean(shape, DELTA),
                    brownian: BrownianScheme::RandomWalk,
                };
                !estimate_expectation(&m, &result.stages[0], result.thresholds[0], ALPHA, &config)
                    .unwrap()
                    .contains(closed)
            })
            .count();
        assert!(misses <= 1, "M = {shape}: {misses} misses");
    }
}

#[test]
fn zero_value_function_gives_zero_estimate() {
    let m = model(Case::Weibull, 0.02);
    let config = SimulationConfig {
        paths: 100,
        steps_per_interarrival: 10,
        seed: 1,
        horizon: Horizon::Constant { time: DELTA },
        brownian: BrownianScheme::Gaussian,
    };
    let est = estimate_expectation(&m, &|_x: f64| 0.0, 4.0, ALPHA, &config).unwrap();
    assert_eq!((est.mean, est.ci_low, est.ci_high), (0.0, 0.0, 0.0));
}
