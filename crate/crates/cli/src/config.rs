use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "levy-bridge", version, about = "Lévy-bridge information processes: simulation, pricing and checks")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Write CSV here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample paths on a uniform grid; one CSV column per path.
    Simulate(SimulateArgs),
    /// Bond prices at a point, along an x sweep, or along simulated paths.
    Price(PriceArgs),
    /// Call option on the bond, `C_0^t` for each strike.
    Option(OptionArgs),
    /// Transition density `Ψ_{t,u}(x, ·)` of ζ.
    Density(DensityArgs),
    /// Covariance kernels on a grid, or the conditional-mean kernel `a`.
    Kernels(KernelArgs),
    /// Monte Carlo verification report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Process {
    Brownian,
    Bridge,
    Bar,
    Tilde,
    Zeta,
    Eta,
    Kappa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevyKind {
    Gamma,
    Poisson,
    None,
}

/// Noise law and horizon given by flags, for commands that do not need a
/// full model.
#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[arg(long, value_enum, default_value = "gamma")]
    pub levy: LevyKind,
    /// Poisson intensity.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub process: Process,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Model file for eta/kappa. Without one, a Bernoulli(0.5) payoff with
    /// σ = μ = 1 and (for kappa) τ exponential with rate 0.1 is used.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Sweep x over [x-from, x-to] in x-steps intervals (needs --t).
    #[arg(long, allow_hyphen_values = true)]
    pub x_from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_to: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub x_steps: usize,
    /// Price along this many simulated observation paths instead.
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, default_value_t = 256)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OptionArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub t: f64,
    /// Strike(s), comma separated.
    #[arg(long = "K", value_delimiter = ',', required = true)]
    pub strikes: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Model file supplying the noise law and horizon (overrides the flags).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub u: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y_from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y_to: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Brownian,
    Bridge,
    Bar,
    Tilde,
    Hat,
    Zeta,
    A,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeChangeKind {
    /// ψ ≡ 1
    Constant,
    /// ψ(t) = exp(-t)
    Decreasing,
    /// ψ(t) = 1 + t
    Increasing,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kernel: KernelKind,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Signal strength for the hat kernel.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value = "decreasing")]
    pub psi: TimeChangeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Quick,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub suite: Suite,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
