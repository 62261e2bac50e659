use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::sweep::Grid;

#[derive(Debug, Parser)]
#[command(
    name = "keydist",
    version,
    about = "Secret-key and reconciliation capacities, quantization and protocol simulation"
)]
pub struct Cli {
    /// Worker threads for sweeps and trials.
    #[arg(long, global = true, env = "KEYDIST_JOBS")]
    pub jobs: Option<usize>,

    /// Master seed; overrides any seed in a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Report wall time (in records, or on stderr for CSV output).
    #[arg(long, global = true)]
    pub timing: bool,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity curves against the rate budget R1.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Compare the WSK optimum with the reconciliation optimum on an asymmetric binary source.
    Counterexample(CounterexampleArgs),
    /// Scalar quantization of a Gaussian source.
    Quantize(QuantizeArgs),
    /// Run the key-distillation simulator on a config file.
    Simulate(SimulateArgs),
    /// Numerically optimize the test channel for a configured source.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Subcommand)]
pub enum CapacityCmd {
    /// Binary symmetric cascade X → Y → Z (bits).
    Bsc(BscArgs),
    /// BSC towards Bob, erasure channel towards Eve (bits).
    Bec(BecArgs),
    /// Jointly Gaussian source (nats, with bits columns).
    Gauss(GaussArgs),
}

#[derive(Debug, Args)]
pub struct BscArgs {
    /// Crossover probability from X to Y.
    #[arg(long)]
    pub p: f64,
    /// Crossover probability from Y to Z.
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    /// P[X = 1]; non-uniform priors use the numerical optimizer.
    #[arg(long, default_value_t = 0.5)]
    pub prior: f64,
    /// Rate grid in bits, as scale:start:stop:points.
    #[arg(long, default_value = "linear:0:1:21")]
    pub r1: Grid,
}

#[derive(Debug, Args)]
pub struct BecArgs {
    /// Crossover probability from X to Y.
    #[arg(long)]
    pub p: f64,
    /// Erasure probability of Eve's channel.
    #[arg(long, visible_alias = "eps")]
    pub erasure: f64,
    /// Rate grid in bits.
    #[arg(long, default_value = "linear:0:1:21")]
    pub r1: Grid,
}

#[derive(Debug, Args)]
pub struct GaussArgs {
    /// Correlation between X and Y.
    #[arg(long)]
    pub rho_xy: f64,
    /// Correlation between Y and Z.
    #[arg(long)]
    pub rho_yz: f64,
    /// Defaults to rho_xy · rho_yz (degraded).
    #[arg(long)]
    pub rho_xz: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_x: f64,
    /// Rate grid in nats.
    #[arg(long, default_value = "linear:0:3:31")]
    pub r1: Grid,
    /// Evaluate the degraded WSK expression on a non-degraded source.
    #[arg(long)]
    pub extrapolate: bool,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// P[X = 1]. Unset source parameters take the reference values.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Rate budget in bits; defaults to H(X|Y)/3.
    #[arg(long)]
    pub r1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantizeMode {
    /// Uniform quantizers at Δ = e^{h(X|Y) − R1}: gap against its bound.
    UniformSweep,
    /// MI-optimal partitions with 2..=L cells.
    PartitionOpt,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// Correlation between X and Y.
    #[arg(long, default_value_t = 0.75)]
    pub rho_xy: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_x: f64,
    #[arg(long, value_enum, default_value_t = QuantizeMode::UniformSweep)]
    pub mode: QuantizeMode,
    /// Rate grid in nats, above h(X|Y); defaults to ten points spaced 0.3 apart.
    #[arg(long)]
    pub r1: Option<Grid>,
    /// Largest cell count for partition optimization.
    #[arg(long, default_value_t = 15)]
    pub l_max: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML config with [source], [channel] and [protocol] sections.
    #[arg(required_unless_present = "demo")]
    pub config: Option<PathBuf>,
    /// Use the bundled demo config.
    #[arg(long, conflicts_with = "config")]
    pub demo: bool,
    /// Override the trial count.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Rec,
    Wsk,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// TOML config with a [source] section and an optional [optimizer] section.
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Rec)]
    pub objective: ObjectiveArg,
    /// Rate grid in bits; points above H(X|Y) are clamped to it.
    #[arg(long, default_value = "linear:0:1:11")]
    pub r1: Grid,
}
