//! Closed-form recursion for the value functions of the refracted multiple
//! stopping problem.

mod coefficients;
mod extended;
mod solve;
mod stage;
mod step;
mod varpi;

pub use coefficients::{CoefficientSet, Frame, RecursionContext, RegionCoefficients};
pub use extended::ExtReal;
pub use solve::{
    solve, Coordinates, Diagnostics, RecursionTolerances, SolveParams, SolveResult, StepDiagnostics, Timings,
};
pub use stage::{advance_stage, base_case, first_threshold, ThresholdDiagnostics, ThresholdSearch};
pub use step::{apply_steps, resolvent_step, StepOutput};
pub use varpi::{integ, varpi, Primitive};
