use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Construct, verify and exercise holistic discretisations of the 2D real
/// Ginzburg-Landau equation.
///
/// Coefficient arithmetic is exact unless HOLISTIC_MODE=float.
#[derive(Debug, Parser)]
#[command(name = "holistic", version)]
pub struct Cli {
    /// Directory receiving every artifact.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the subgrid slow manifold and report the model coefficients.
    Construct(ConstructArgs),
    /// Reproduce the published coefficient tables cell by cell.
    Verify(VerifyArgs),
    /// Integrate a model in time from a seeded initial field.
    Simulate(SimulateArgs),
    /// Trace equilibrium branches and their bifurcations in alpha.
    Continue(ContinueArgs),
    /// Measure truncation-error convergence on manufactured fields.
    Consistency(ConsistencyArgs),
    /// Plot the subgrid field of every element.
    SubgridPlot(SubgridPlotArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ConstructArgs {
    /// Subgrid intervals per macroscale spacing.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub order_gamma: usize,
    #[arg(long, default_value_t = 3)]
    pub order_alpha: usize,
    /// Truncate by total degree, dropping mixed terms of degree >= max(orders).
    #[arg(long)]
    pub total: bool,
    /// Add the next-order evolution terms from the solvability condition.
    #[arg(long)]
    pub solvability: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Resolution of the constructed reference used for dependent term groups.
    #[arg(long, default_value_t = 16)]
    pub oracle_n: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelChoice {
    /// Closed-form model: centered2, centered4, holistic_g2a2, holistic_g3a3, holistic_g4a4.
    #[arg(long, default_value = "holistic_g3a3", conflicts_with = "model_file")]
    pub model: String,
    /// Model JSON written by `construct`.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelChoice,
    /// Elements per side on [0, pi]^2 with odd symmetry.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 6.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    pub t_end: f64,
    /// Time step; half the explicit stability bound when omitted.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Keep every stride-th state.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Amplitude of the sin(x) sin(y) initial mode.
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    /// Amplitude of the seeded uniform perturbation.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ContinueArgs {
    #[command(flatten)]
    pub model: ModelChoice,
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 30.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 0.5)]
    pub ds_max: f64,
    /// Number of trivial-branch bifurcations to follow (all when omitted).
    #[arg(long)]
    pub branches: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Part {
    Full,
    AlphaLinear,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    SinSin,
    Mixed,
}

#[derive(Debug, Args, Serialize)]
pub struct ConsistencyArgs {
    #[arg(long, default_value = "holistic_g3a3")]
    pub model: String,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Part::Full)]
    pub part: Part,
    #[arg(long, value_enum, default_value_t = Field::SinSin)]
    pub field: Field,
    /// Grid sizes, a doubling sequence.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    pub m_list: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SubgridPlotArgs {
    /// Elements per side on [0, pi]^2.
    #[arg(long, default_value_t = 4)]
    pub elements: usize,
    #[arg(long, default_value_t = 6.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2)]
    pub order_gamma: usize,
    #[arg(long, default_value_t = 2)]
    pub order_alpha: usize,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Amplitude of the sin(x) sin(y) grid field.
    #[arg(long, default_value_t = 0.9)]
    pub amplitude: f64,
    /// Replace the grid field by the nearby equilibrium of the constructed model.
    #[arg(long)]
    pub equilibrium: bool,
}
