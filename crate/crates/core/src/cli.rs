//! Command-line front end: `solve`, `compare-mc` and `eval`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GridConfig, ProblemConfig};
use crate::error::{Error, Result};
use crate::mc::{estimate_expectation, Estimate, Horizon};
use crate::recursion::{solve, Diagnostics, SolveResult, Timings};
use crate::spectral::SpectralData;

#[derive(Debug, Parser)]
#[command(name = "refract", version, about = "Refracted multiple stopping under phase-type Levy models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for all stages and write thresholds.csv, values.csv and summary.json.
    Solve(CommonArgs),
    /// Compare closed-form values at the first threshold with Monte Carlo.
    CompareMc(CommonArgs),
    /// Print the value function of the last stage at the given points.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(allow_negative_numbers = true)]
        x: Vec<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration, or a summary.json from an earlier solve.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Value grid as `lo:hi:n`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Erlang shapes for `compare-mc`, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    pub m_list: Option<Vec<usize>>,
    /// Monte Carlo paths per estimate.
    #[arg(long)]
    pub paths: Option<usize>,
}

impl CommonArgs {
    /// Loads the configuration and applies flag overrides.
    pub fn load(&self) -> Result<ProblemConfig> {
        let mut config = ProblemConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.numerics.mc.seed = seed;
        }
        if let Some(grid) = &self.grid {
            config.numerics.grid = GridConfig::parse(grid)?;
        }
        if let Some(list) = &self.m_list {
            config.numerics.mc.m_list = list.clone();
        }
        if let Some(paths) = self.paths {
            config.numerics.mc.paths = paths;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Serialize)]
struct ModelSummary {
    drift: f64,
    sigma: f64,
    rho: f64,
    psi_at_one: f64,
}

#[derive(Debug, Serialize)]
struct TimingSummary {
    root_phase: f64,
    recursion_phase: f64,
    /// `root+recursion` in seconds.
    split: String,
}

impl From<Timings> for TimingSummary {
    fn from(t: Timings) -> Self {
        Self {
            root_phase: t.root_phase,
            recursion_phase: t.recursion_phase,
            split: format!("{:.3}+{:.3}", t.root_phase, t.recursion_phase),
        }
    }
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a ProblemConfig,
    model: ModelSummary,
    phi_alpha: f64,
    roots: &'a SpectralData,
    thresholds: &'a [f64],
    timings: TimingSummary,
    diagnostics: &'a Diagnostics,
}

/// Files written by [`cmd_solve`].
#[derive(Debug, Clone)]
pub struct SolveOutputs {
    pub thresholds: PathBuf,
    pub values: PathBuf,
    pub summary: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn run_solve(config: &ProblemConfig) -> Result<SolveResult> {
    let model = config.levy_model()?;
    solve(&model, config.solve_params(), &config.tolerances())
}

pub fn cmd_solve(config: &ProblemConfig, out_dir: &Path) -> Result<(SolveResult, SolveOutputs)> {
    let model = config.levy_model()?;
    let result = solve(&model, config.solve_params(), &config.tolerances())?;
    let outputs = SolveOutputs {
        thresholds: out_dir.join(&config.outputs.thresholds),
        values: out_dir.join(&config.outputs.values),
        summary: out_dir.join(&config.outputs.summary),
    };

    let mut csv = String::from("stage,threshold\n");
    for (n, a) in result.thresholds.iter().enumerate() {
        writeln!(csv, "{},{}", n + 1, fmt_f64(*a)).unwrap();
    }
    write(&outputs.thresholds, &csv)?;

    let grid = config.numerics.grid.points();
    let rows: Vec<Result<String>> = grid
        .par_iter()
        .map(|&x| {
            let mut row = fmt_f64(x);
            for stage in &result.stages {
                row.push(',');
                row.push_str(&fmt_f64(stage.evaluate(x)?));
            }
            Ok(row)
        })
        .collect();
    let mut csv = String::from("x");
    for n in 1..=result.stages.len() {
        write!(csv, ",v{n}").unwrap();
    }
    csv.push('\n');
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    write(&outputs.values, &csv)?;

    let summary = Summary {
        config,
        model: ModelSummary {
            drift: model.drift,
            sigma: model.sigma,
            rho: model.rho,
            psi_at_one: model.psi(1.0)?,
        },
        phi_alpha: result.phi_alpha,
        roots: &result.context().spectral,
        thresholds: &result.thresholds,
        timings: result.timings.into(),
        diagnostics: &result.diagnostics,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    write(&outputs.summary, &json)?;
    Ok((result, outputs))
}

/// One row of `compare.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    /// The Erlang shape, or `None` for the constant horizon.
    pub shape: Option<usize>,
    /// `u^{(1,M)}(a_1)`; absent for the constant horizon.
    pub closed_form: Option<f64>,
    pub estimate: Estimate,
    pub closed_form_timings: Option<Timings>,
    pub mc_seconds: f64,
}

pub fn cmd_compare_mc(config: &ProblemConfig, out_dir: &Path) -> Result<(Vec<CompareRow>, PathBuf)> {
    let model = config.levy_model()?;
    let tolerances = config.tolerances();
    let problem = &config.problem;
    let mc = &config.numerics.mc;
    let mut rows = Vec::new();
    let mut first: Option<SolveResult> = None;
    for &shape in &mc.m_list {
        let mut params = config.solve_params();
        params.stages = 1;
        params.shape = shape;
        params.final_continuation = true;
        let result = solve(&model, params, &tolerances)?;
        let closed = result.anchor_value().expect("final continuation requested")?;
        let start = Instant::now();
        let estimate = estimate_expectation(
            &model,
            &result.stages[0],
            result.thresholds[0],
            problem.alpha_rate,
            &mc.simulation(Horizon::erlang_with_mean(shape, problem.delta)),
        )?;
        rows.push(CompareRow {
            shape: Some(shape),
            closed_form: Some(closed),
            estimate,
            closed_form_timings: Some(result.timings),
            mc_seconds: start.elapsed().as_secs_f64(),
        });
        first.get_or_insert(result);
    }
    if mc.constant {
        let result = match first {
            Some(r) => r,
            None => {
                let mut params = config.solve_params();
                params.stages = 1;
                solve(&model, params, &tolerances)?
            }
        };
        let start = Instant::now();
        let estimate = estimate_expectation(
            &model,
            &result.stages[0],
            result.thresholds[0],
            problem.alpha_rate,
            &mc.simulation(Horizon::Constant { time: problem.delta }),
        )?;
        rows.push(CompareRow {
            shape: None,
            closed_form: None,
            estimate,
            closed_form_timings: None,
            mc_seconds: start.elapsed().as_secs_f64(),
        });
    }

    let mut csv = String::from(
        "horizon,closed_form,mc_mean,ci_low,ci_high,stderr,paths,root_seconds,recursion_seconds,mc_seconds\n",
    );
    for row in &rows {
        let label = row.shape.map_or("const".to_string(), |m| m.to_string());
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        writeln!(
            csv,
            "{label},{},{},{},{},{},{},{},{},{}",
            opt(row.closed_form),
            fmt_f64(row.estimate.mean),
            fmt_f64(row.estimate.ci_low),
            fmt_f64(row.estimate.ci_high),
            fmt_f64(row.estimate.stderr),
            row.estimate.paths_used,
            opt(row.closed_form_timings.map(|t| t.root_phase)),
            opt(row.closed_form_timings.map(|t| t.recursion_phase)),
            fmt_f64(row.mc_seconds),
        )
        .unwrap();
    }
    let path = out_dir.join(&config.outputs.compare);
    write(&path, &csv)?;
    Ok((rows, path))
}

/// `v^{(N)}(x)` for each point.
pub fn cmd_eval(config: &ProblemConfig, xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let result = run_solve(config)?;
    xs.iter().map(|&x| result.value().evaluate(x)).collect()
}

fn dispatch(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Solve(args) => {
            let config = args.load()?;
            let (result, outputs) = cmd_solve(&config, &args.out_dir)?;
            Ok(format!(
                "solved N={} M={}: thresholds [{}], timings {:.3}+{:.3} s, wrote {}",
                config.problem.stages,
                config.problem.shape,
                result.thresholds.iter().map(|a| format!("{a:.6}")).collect::<Vec<_>>().join(", "),
                result.timings.root_phase,
                result.timings.recursion_phase,
                outputs.summary.display()
            ))
        }
        Command::CompareMc(args) => {
            let config = args.load()?;
            let (rows, path) = cmd_compare_mc(&config, &args.out_dir)?;
            let mut text = String::new();
            for row in &rows {
                let label = row.shape.map_or("const".to_string(), |m| format!("M={m}"));
                let closed = row.closed_form.map_or("-".to_string(), |v| format!("{v:.4}"));
                writeln!(
                    text,
                    "{label}: closed form {closed}, MC {:.4} ({:.4}, {:.4})",
                    row.estimate.mean, row.estimate.ci_low, row.estimate.ci_high
                )
                .unwrap();
            }
            write!(text, "wrote {}", path.display()).unwrap();
            Ok(text)
        }
        Command::Eval { common, x } => {
            let config = common.load()?;
            let values = cmd_eval(&config, &x)?;
            Ok(x.iter()
                .zip(&values)
                .map(|(x, v)| format!("{},{}", fmt_f64(*x), fmt_f64(*v)))
                .collect::<Vec<_>>()
                .join("\n"))
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(text) => {
            if !text.is_empty() {
                println!("{text}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            e.exit_code()
        }
    }
}
