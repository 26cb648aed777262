use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AssumptionReport, LevyModel};
use crate::spectral::{spectral_roots_with, RootTolerances};

use super::coefficients::{CoefficientSet, Frame, RecursionContext};
use super::stage::{advance_stage, base_case, ThresholdDiagnostics, ThresholdSearch};
use super::step::resolvent_step;

/// Variable in which the coefficients are expressed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinates {
    /// The log-price `x` itself.
    #[default]
    Absolute,
    /// `x - log K` with unit strike. The monomials `y^h e^{Phi(p) y}` stay far
    /// smaller near the thresholds, which postpones cancellation at large `M`
    /// and `N`.
    LogMoneyness,
}

/// Problem data of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveParams {
    /// Discount rate `alpha` (may be negative).
    pub alpha_rate: f64,
    pub strike: f64,
    /// Refraction period `delta`.
    pub delta: f64,
    /// Number of exercise opportunities `N`.
    pub stages: usize,
    /// Erlang shape `M`.
    pub shape: usize,
    /// Also compute `u^{(N, M)}`, the continuation after the last stage.
    pub final_continuation: bool,
    pub coordinates: Coordinates,
}

impl SolveParams {
    pub fn new(alpha_rate: f64, strike: f64, delta: f64, stages: usize, shape: usize) -> Self {
        Self {
            alpha_rate,
            strike,
            delta,
            stages,
            shape,
            final_continuation: false,
            coordinates: Coordinates::Absolute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecursionTolerances {
    /// Allowed `|f(a - eps) - f(a + eps)| / (1 + |f|)` at every threshold.
    pub continuity: f64,
    /// The offset `eps` of the continuity check.
    pub continuity_offset: f64,
    pub roots: RootTolerances,
    pub threshold: ThresholdSearch,
}

impl Default for RecursionTolerances {
    fn default() -> Self {
        Self {
            continuity: 1e-6,
            continuity_offset: 1e-9,
            roots: RootTolerances::default(),
            threshold: ThresholdSearch::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub stage: usize,
    pub substep: usize,
    pub degree: isize,
    pub continuity_residual: f64,
    /// Threshold at which the continuity residual is largest.
    pub worst_at: f64,
    pub imaginary_residue: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub steps: Vec<StepDiagnostics>,
    pub thresholds: Vec<ThresholdDiagnostics>,
    pub root_residual: f64,
    pub assumption: Option<AssumptionReport>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    /// Seconds spent on `Phi(alpha)` and the spectral roots.
    pub root_phase: f64,
    /// Seconds spent in the recursion.
    pub recursion_phase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub params: SolveParams,
    pub phi_alpha: f64,
    /// `a_1 >= a_2 >= ... >= a_N`, as log-prices.
    pub thresholds: Vec<f64>,
    /// `v^{(n)}` for `n = 1..=N`.
    pub stages: Vec<CoefficientSet>,
    /// `u^{(n, M)}` for `n = 1..N` (and `n = N` with `final_continuation`).
    pub continuations: Vec<CoefficientSet>,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
}

impl SolveResult {
    pub fn context(&self) -> &Arc<RecursionContext> {
        &self.stages[0].context
    }

    /// `v^{(N)}`.
    pub fn value(&self) -> &CoefficientSet {
        self.stages.last().expect("at least one stage")
    }

    /// `u^{(1, M)}(a_1)`, when the first continuation was computed.
    pub fn anchor_value(&self) -> Option<Result<f64>> {
        self.continuations
            .first()
            .map(|u| u.evaluate(self.thresholds[0]))
    }
}

/// Checks corner structure and continuity of a freshly built set.
fn audit(
    set: &CoefficientSet,
    tolerances: &RecursionTolerances,
    imaginary_residue: f64,
) -> Result<StepDiagnostics> {
    set.check_corner_conditions()?;
    let (residual, at) = set.continuity_residual(tolerances.continuity_offset);
    let at = set.context.frame.to_global(at);
    if !(residual <= tolerances.continuity) {
        return Err(Error::PrecisionBreakdown {
            stage: set.stage,
            substep: set.substep,
            residual,
            at,
        });
    }
    Ok(StepDiagnostics {
        stage: set.stage,
        substep: set.substep,
        degree: set.degree(),
        continuity_residual: residual,
        worst_at: at,
        imaginary_residue,
    })
}

/// Applies `M` resolvent steps, auditing each.
fn continuation(
    set: &CoefficientSet,
    shape: usize,
    tolerances: &RecursionTolerances,
    diagnostics: &mut Diagnostics,
) -> Result<CoefficientSet> {
    let mut current = set.clone();
    for _ in 0..shape {
        let out = resolvent_step(&current)?;
        diagnostics
            .steps
            .push(audit(&out.set, tolerances, out.imaginary_residue)?);
        current = out.set;
    }
    Ok(current)
}

/// Runs the full recursion for `N` exercise opportunities.
pub fn solve(
    model: &LevyModel,
    params: SolveParams,
    tolerances: &RecursionTolerances,
) -> Result<SolveResult> {
    if params.stages == 0 {
        return Err(Error::InvalidModel("number of exercise opportunities N must be >= 1".into()));
    }
    if !(params.strike > 0.0) {
        return Err(Error::InvalidModel(format!("strike K = {} must be positive", params.strike)));
    }
    let mut diagnostics = Diagnostics {
        assumption: Some(model.validate_assumptions(
            params.alpha_rate,
            Some((params.shape, params.delta)),
        )?),
        ..Diagnostics::default()
    };
    let lambda = params.shape as f64 / params.delta;
    let p = params.alpha_rate + lambda;

    let root_start = Instant::now();
    let phi_alpha = model.phi(params.alpha_rate)?;
    let spectral = spectral_roots_with(model, p, tolerances.roots)?;
    diagnostics.root_residual = spectral.max_residual;
    let mut context = RecursionContext::new(spectral, phi_alpha, lambda, params.strike)?;
    if params.coordinates == Coordinates::LogMoneyness {
        context = context.in_log_moneyness();
    }
    let frame: Frame = context.frame;
    let context = Arc::new(context);
    let root_phase = root_start.elapsed().as_secs_f64();

    let recursion_start = Instant::now();
    let mut current = base_case(context)?;
    diagnostics.steps.push(audit(&current, tolerances, 0.0)?);
    let mut stages = vec![current.clone()];
    let mut continuations = Vec::new();
    for _ in 1..params.stages {
        let u = continuation(&current, params.shape, tolerances, &mut diagnostics)?;
        let (next, mut threshold_diag) = advance_stage(&u, &tolerances.threshold)?;
        threshold_diag.threshold = frame.to_global(threshold_diag.threshold);
        diagnostics.thresholds.push(threshold_diag);
        diagnostics.steps.push(audit(&next, tolerances, 0.0)?);
        continuations.push(u);
        stages.push(next.clone());
        current = next;
    }
    if params.final_continuation {
        continuations.push(continuation(&current, params.shape, tolerances, &mut diagnostics)?);
    }
    let recursion_phase = recursion_start.elapsed().as_secs_f64();

    Ok(SolveResult {
        params,
        phi_alpha,
        thresholds: current.exercise_thresholds(),
        stages,
        continuations,
        diagnostics,
        timings: Timings {
            root_phase,
            recursion_phase,
        },
    })
}
