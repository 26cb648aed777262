//! Monte Carlo estimates of `E_x[e^{-alpha T} v(X_T)]` for an Erlang or
//! constant horizon `T`.
//!
//! Between jumps the Brownian part is a scaled ±1 random walk with a fixed
//! number of steps per inter-arrival interval (optionally Gaussian). Each path
//! draws from its own ChaCha stream, and paths are reduced in fixed-size
//! chunks merged in chunk order, so a given seed gives the same estimate for
//! any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::phase_type::PhaseTypeDistribution;
use crate::recursion::CoefficientSet;

/// Paths per reduction chunk.
const CHUNK: usize = 4096;
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Horizon {
    /// Sum of `shape` independent exponentials with rate `rate`.
    Erlang { shape: usize, rate: f64 },
    Constant { time: f64 },
}

impl Horizon {
    /// Erlang horizon with mean `delta`.
    pub fn erlang_with_mean(shape: usize, delta: f64) -> Self {
        Horizon::Erlang {
            shape,
            rate: shape as f64 / delta,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Horizon::Erlang { shape, rate } if shape >= 1 && rate > 0.0 && rate.is_finite() => Ok(()),
            Horizon::Constant { time } if time >= 0.0 && time.is_finite() => Ok(()),
            other => Err(Error::Config(format!("invalid horizon {other:?}"))),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Horizon::Erlang { shape, rate } => {
                let exp = Exp::new(rate).expect("validated rate");
                (0..shape).map(|_| exp.sample(rng)).sum()
            }
            Horizon::Constant { time } => time,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrownianScheme {
    /// `sigma sqrt(dt)` times a sum of ±1 steps.
    #[default]
    RandomWalk,
    /// Exact Gaussian increment over each interval.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub paths: usize,
    pub steps_per_interarrival: usize,
    pub seed: u64,
    pub horizon: Horizon,
    #[serde(default)]
    pub brownian: BrownianScheme,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Config("paths must be >= 1".into()));
        }
        if self.steps_per_interarrival == 0 {
            return Err(Error::Config("steps_per_interarrival must be >= 1".into()));
        }
        self.horizon.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub stderr: f64,
    pub paths_used: usize,
}

impl Estimate {
    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn half_width(&self) -> f64 {
        Z_95 * self.stderr
    }
}

/// Something that can be evaluated at a terminal log-price.
pub trait ValueFunction: Sync {
    fn value_at(&self, x: f64) -> Result<f64>;
}

impl ValueFunction for CoefficientSet {
    fn value_at(&self, x: f64) -> Result<f64> {
        self.evaluate(x)
    }
}

impl<F: Fn(f64) -> f64 + Sync> ValueFunction for F {
    fn value_at(&self, x: f64) -> Result<f64> {
        Ok(self(x))
    }
}

/// Absorption-time sampler with precomputed transition tables.
#[derive(Debug, Clone)]
pub struct PhaseTypeSampler {
    /// Cumulative initial distribution; mass beyond the last entry starts absorbed.
    initial: Vec<f64>,
    holding: Vec<Exp<f64>>,
    /// Per state, cumulative probabilities of moving to each transient state;
    /// the remaining mass is absorption.
    moves: Vec<Vec<f64>>,
}

impl PhaseTypeSampler {
    pub fn new(jumps: &PhaseTypeDistribution) -> Self {
        let t = jumps.sub_intensity();
        let d = jumps.phases();
        let initial = cumulative(jumps.alpha().iter().copied());
        let mut holding = Vec::with_capacity(d);
        let mut moves = Vec::with_capacity(d);
        for k in 0..d {
            let rate = -t[(k, k)];
            holding.push(Exp::new(rate).expect("negative diagonal"));
            moves.push(cumulative(
                (0..d).map(|j| if j == k { 0.0 } else { t[(k, j)] / rate }),
            ));
        }
        Self {
            initial,
            holding,
            moves,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let Some(mut state) = pick(&self.initial, rng.random::<f64>()) else {
            return 0.0;
        };
        let mut time = 0.0;
        loop {
            time += self.holding[state].sample(rng);
            match pick(&self.moves[state], rng.random::<f64>()) {
                Some(next) => state = next,
                None => return time,
            }
        }
    }
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Index of the first cumulative entry above `u`, or `None` past the end.
fn pick(cumulative: &[f64], u: f64) -> Option<usize> {
    let k = cumulative.partition_point(|&c| c <= u);
    (k < cumulative.len()).then_some(k)
}

/// One draw of the phase-type jump size.
pub fn sample_phase_type<R: Rng + ?Sized>(jumps: &PhaseTypeDistribution, rng: &mut R) -> f64 {
    PhaseTypeSampler::new(jumps).sample(rng)
}

/// Path simulator for one model.
#[derive(Debug, Clone)]
pub struct PathSimulator<'a> {
    model: &'a LevyModel,
    jumps: PhaseTypeSampler,
    arrivals: Option<Exp<f64>>,
    steps: usize,
    scheme: BrownianScheme,
}

impl<'a> PathSimulator<'a> {
    pub fn new(model: &'a LevyModel, steps_per_interarrival: usize, scheme: BrownianScheme) -> Self {
        Self {
            model,
            jumps: PhaseTypeSampler::new(&model.jumps),
            arrivals: (model.rho > 0.0).then(|| Exp::new(model.rho).expect("positive rate")),
            steps: steps_per_interarrival.max(1),
            scheme,
        }
    }

    fn brownian<R: Rng + ?Sized>(&self, interval: f64, rng: &mut R) -> f64 {
        let sigma = self.model.sigma;
        if sigma == 0.0 || interval == 0.0 {
            return 0.0;
        }
        match self.scheme {
            BrownianScheme::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * interval.sqrt() * z
            }
            BrownianScheme::RandomWalk => {
                let n = self.steps;
                let mut ups = 0u32;
                let mut left = n;
                while left > 0 {
                    let take = left.min(64);
                    let bits = rng.next_u64();
                    let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
                    ups += (bits & mask).count_ones();
                    left -= take;
                }
                let walk = 2.0 * f64::from(ups) - n as f64;
                sigma * (interval / n as f64).sqrt() * walk
            }
        }
    }

    /// `X` at time `horizon` started from `x0`.
    pub fn terminal<R: Rng + ?Sized>(&self, x0: f64, horizon: f64, rng: &mut R) -> f64 {
        let mut x = x0;
        let mut elapsed = 0.0;
        loop {
            let remaining = horizon - elapsed;
            let gap = self.arrivals.map_or(f64::INFINITY, |e| e.sample(rng));
            let interval = gap.min(remaining);
            x += self.model.drift * interval + self.brownian(interval, rng);
            if gap >= remaining {
                return x;
            }
            elapsed += gap;
            x -= self.jumps.sample(rng);
        }
    }
}

pub fn simulate_terminal<R: Rng + ?Sized>(
    model: &LevyModel,
    x0: f64,
    horizon: f64,
    steps_per_interarrival: usize,
    rng: &mut R,
) -> f64 {
    PathSimulator::new(model, steps_per_interarrival, BrownianScheme::RandomWalk).terminal(x0, horizon, rng)
}

/// Generator of path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }
}

/// Mean and 95% interval of `sample(horizon_time, terminal_x)` over the
/// configured number of paths.
pub fn estimate_with<F>(model: &LevyModel, x0: f64, config: &SimulationConfig, sample: F) -> Result<Estimate>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    config.validate()?;
    let simulator = PathSimulator::new(model, config.steps_per_interarrival, config.brownian);
    let chunks = config.paths.div_ceil(CHUNK);
    let partials: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut moments = Moments::default();
            let end = ((c + 1) * CHUNK).min(config.paths);
            for path in c * CHUNK..end {
                let mut rng = path_rng(config.seed, path as u64);
                let horizon = config.horizon.sample(&mut rng);
                let terminal = simulator.terminal(x0, horizon, &mut rng);
                moments.push(sample(horizon, terminal)?);
            }
            Ok(moments)
        })
        .collect();
    let mut total = Moments::default();
    for part in partials {
        total = total.merge(part?);
    }
    let variance = if total.count > 1 {
        total.m2 / (total.count - 1) as f64
    } else {
        0.0
    };
    let stderr = (variance / total.count as f64).sqrt();
    Ok(Estimate {
        mean: total.mean,
        ci_low: total.mean - Z_95 * stderr,
        ci_high: total.mean + Z_95 * stderr,
        stderr,
        paths_used: total.count,
    })
}

/// `E_{x0}[e^{-alpha T} v(X_T)]`.
pub fn estimate_expectation<V: ValueFunction + ?Sized>(
    model: &LevyModel,
    value: &V,
    x0: f64,
    alpha_rate: f64,
    config: &SimulationConfig,
) -> Result<Estimate> {
    estimate_with(model, x0, config, |t, x| Ok((-alpha_rate * t).exp() * value.value_at(x)?))
}
