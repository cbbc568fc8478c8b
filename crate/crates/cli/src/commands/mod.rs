mod affine;
mod curvature;
mod geodesic;
mod residuals;
mod verify;

use std::io::Write;
use std::path::PathBuf;

use algebroid_core::Point;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector4;

use crate::error::CliResult;
use crate::scenario::Scenario;

/// Whether every check in a command held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Violation,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Violation
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "algebroid", version, about = "Affine-metric algebroid toolkit: identity checks, curvature, charged geodesics and field-equation residuals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML with dotted keys).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario's top-level seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the report (or trajectory) here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> CliResult<Scenario> {
        let mut s = Scenario::load(&self.scenario)?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        Ok(s)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the closed-form connection, curvature, Ricci trace and scalar identity over the grid.
    Verify(ScenarioArgs),
    /// Print R, tr(F∘F), the algebroid scalar and Ricci curvature, and the Einstein blocks at a point.
    Curvature {
        #[command(flatten)]
        common: ScenarioArgs,
        /// Evaluation point `t,x,y,z`.
        #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
        at: Option<Point>,
    },
    /// Integrate a charged geodesic and write its trajectory as CSV.
    Geodesic {
        #[command(flatten)]
        common: ScenarioArgs,
        /// Initial point `t,x,y,z`.
        #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
        at: Option<Point>,
        /// Initial 4-velocity `u0,u1,u2,u3`.
        #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
        velocity: Option<Vector4<f64>>,
        /// Charge-to-mass ratio.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Rescale a timelike velocity to <u,u> = -1 instead of rejecting it.
        #[arg(long)]
        normalize: bool,
        /// Where to write the summary report when the trajectory goes to standard output.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Evaluate the block field-equation residuals over the grid.
    Residuals(ScenarioArgs),
    /// Decompose an affine inner product or build its hat metric.
    Affine {
        #[arg(value_enum)]
        action: AffineAction,
        /// TOML input with `quadratic`/`left`/`right`/`constant` or `bilinear`/`center`/`lambda`.
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AffineAction {
    Decompose,
    HatMetric,
}

fn parse_vector(s: &str) -> Result<Vector4<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected four comma-separated numbers, got {}", parts.len()));
    }
    let mut v = Vector4::zeros();
    for (i, p) in parts.iter().enumerate() {
        v[i] = p.parse().map_err(|e| format!("component {i} (`{p}`): {e}"))?;
    }
    Ok(v)
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<Status> {
    match cli.command {
        Command::Verify(args) => verify::run(&args.load()?, args.out.as_deref(), stdout),
        Command::Curvature { common, at } => curvature::run(&common.load()?, at, common.out.as_deref(), stdout),
        Command::Geodesic {
            common,
            at,
            velocity,
            lambda,
            step,
            steps,
            normalize,
            summary,
        } => {
            let mut s = common.load()?;
            let g = &mut s.geodesic;
            g.x = at.or(g.x);
            g.u = velocity.or(g.u);
            g.lambda = lambda.unwrap_or(g.lambda);
            g.step = step.unwrap_or(g.step);
            g.steps = steps.unwrap_or(g.steps);
            g.normalize |= normalize;
            geodesic::run(&s, common.out.as_deref(), summary.as_deref(), stdout)
        }
        Command::Residuals(args) => residuals::run(&args.load()?, args.out.as_deref(), stdout),
        Command::Affine { action, input, out } => affine::run(action, &input, out.as_deref(), stdout),
    }
}
