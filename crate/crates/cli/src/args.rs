use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "su2dp",
    version,
    about = "Dynamic-programming optimal control on SU(2)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Triangulate, run value iteration and write values.csv / metric.csv.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Follow the optimal policy of a solved field.
    #[command(allow_negative_numbers = true)]
    Trajectory(TrajectoryArgs),
    /// Brute-force minimum times on a probe set.
    #[command(allow_negative_numbers = true)]
    Oracle(OracleArgs),
    /// Repeat the run recorded in a manifest.json.
    Rerun(RerunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SystemName {
    /// U' = (v1 I_x + v2 I_z) U with |v| = 2
    Eq27,
    /// U' = (I_z + v I_x) U with |v| <= vbound
    Example31,
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// Built-in system.
    #[arg(long, value_enum, default_value_t = SystemName::Eq27)]
    pub system: SystemName,
    /// Control bound for example31.
    #[arg(long, default_value_t = 10.0)]
    pub vbound: f64,
    /// JSON system description; overrides --system.
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    /// Discount rate; 0 selects the minimum-time problem. Defaults to the
    /// spec file's value, or 0.5 for built-in systems.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Mesh parameter (longest edge).
    #[arg(long, default_value_t = 0.2)]
    pub h: f64,
    /// Radius of the meshed ball.
    #[arg(long, default_value_t = 2.5)]
    pub rho: f64,
    /// Target radius.
    #[arg(long, default_value_t = 0.2)]
    pub rt: f64,
    /// Number of sampled controls.
    #[arg(long, default_value_t = 16)]
    pub controls: usize,
    /// Stopping threshold on the per-sweep maximum change.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    /// Exterior value (a time for minimum-time solves).
    #[arg(long)]
    pub vcap: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct TrajectoryArgs {
    /// Directory written by `solve`.
    #[arg(long)]
    pub field: PathBuf,
    /// Start point in chart coordinates, "x,y,z".
    #[arg(long, conflicts_with = "probes")]
    pub start: Option<String>,
    /// Built-in probe set.
    #[arg(long, value_enum)]
    pub probes: Option<ProbeSet>,
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
    /// Output directory; defaults to the field directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Duration of one search step.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Hash cell size; defaults to dt times the speed bound.
    #[arg(long)]
    pub quant: Option<f64>,
    #[arg(long, default_value_t = 16)]
    pub controls: usize,
    /// Search horizon.
    #[arg(long, default_value_t = 4.0)]
    pub tmax: f64,
    /// Target radius.
    #[arg(long, default_value_t = 0.2)]
    pub rt: f64,
    #[arg(long, conflicts_with = "probes")]
    pub start: Option<String>,
    #[arg(long, value_enum)]
    pub probes: Option<ProbeSet>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProbeSet {
    /// Radii 0.4, 0.8, 1.2 along each axis.
    Axes,
}
