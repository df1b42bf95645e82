//! `rad`: reconstruction-risk bounds, calibration, attack simulation, audits
//! and continuous Monte Carlo from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;
mod setup;

use report::Format;
use setup::PriorArgs;

#[derive(Debug, Parser)]
#[command(name = "rad", version, about = "Reconstruction advantage (RAD) toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate risk bounds for a mechanism at one parameter value or over a grid.
    Bound(BoundArgs),
    /// Find the mechanism parameter that meets a target risk.
    Calibrate(CalibrateArgs),
    /// Simulate an attack and estimate its RAD and ReRo.
    Attack(AttackArgs),
    /// Audit an LDP frequency oracle and report the empirical ε.
    Audit(AuditArgs),
    /// Nested Monte Carlo bound for the exponential mechanism on [0, 1].
    Mc(McArgs),
    /// Calibrate the same mechanism to a RAD target and to a ReRo target.
    Compare(CompareArgs),
    /// Fit an empirical prior from a csv column.
    PriorFit(PriorFitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mech {
    Grr,
    Oue,
    Ss,
    Laplace,
    Gaussian,
    GdpSgd,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MechArgs {
    #[arg(long, value_enum, default_value = "grr")]
    pub mech: Mech,
    /// Privacy budget ε.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Gaussian noise multiplier σ.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Composition rounds for gdp-sgd.
    #[arg(long, default_value_t = 1)]
    pub steps: u32,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// ε grid as start:stop:step.
    #[arg(long, conflicts_with_all = ["eps", "sigma_grid"])]
    pub eps_grid: Option<String>,
    /// σ grid as start:stop:step.
    #[arg(long, conflicts_with_all = ["sigma", "eps_grid"])]
    pub sigma_grid: Option<String>,
    /// Comma-separated bound sources (worst-case, optimal, closed-form, fdp,
    /// epsdelta, perfect-reco, uniform-bb, gdp, rero-eps, rero-fdp).
    #[arg(long, value_delimiter = ',')]
    pub source: Vec<String>,
    /// Every RAD source whose assumptions hold (the default without --source).
    #[arg(long)]
    pub all_applicable: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CalMech {
    Grr,
    Oue,
    Ss,
    /// Subset selection with fixed subset size, solving for the inclusion probability.
    SsP,
    Laplace,
    Gaussian,
    UniformBb,
    GdpSgd,
    ReroEps,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_enum)]
    pub mech: CalMech,
    /// Target risk γ*.
    #[arg(long)]
    pub risk: f64,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 1)]
    pub steps: u32,
    /// Subset size for ss-p.
    #[arg(long)]
    pub omega: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    Optimal,
    Oblivious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimandArg {
    Rad,
    Rero,
}

#[derive(Debug, Clone, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, value_enum, default_value = "optimal")]
    pub attack: AttackKind,
    /// Headline quantity; both are always reported.
    #[arg(long, value_enum, default_value = "rad")]
    pub estimand: EstimandArg,
    /// Trials per target (J); overrides --budget.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Trials per (target, challenger) pair; defaults to J.
    #[arg(long)]
    pub pair_trials: Option<u64>,
    /// Total trial budget, split as ⌊B/m⌋ per target and ⌊B/m²⌋ per pair.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LdpArg {
    Grr,
    Oue,
    Ss,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[arg(long, value_enum)]
    pub mech: LdpArg,
    /// ε the mechanism is run with.
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Compare mode: the ε claimed for the mechanism.
    #[arg(long)]
    pub claimed_eps: Option<f64>,
    /// Largest accepted |ε̃ − claimed ε| in compare mode.
    #[arg(long, default_value_t = 0.15)]
    pub threshold: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    PerOutput,
    SharedBatch,
    ExactInner,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Privacy budgets ε (comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// uniform | uniform:LO,HI | beta:A,B
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    /// Thresholds η (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "0.25")]
    pub eta: Vec<f64>,
    /// Sample sizes N = N_θ = N_z = N_p (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "500")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub repetitions: usize,
    #[arg(long, value_enum, default_value = "per-output")]
    pub sampling: SamplingArg,
    /// Deviation t for the analytic failure-probability bound.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompareMech {
    Grr,
    Oue,
    Ss,
    Laplace,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long, value_enum, default_value = "laplace")]
    pub mech: CompareMech,
    #[arg(long)]
    pub m: usize,
    /// Target risk, used as the RAD target and as the ReRo target.
    #[arg(long)]
    pub risk: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PriorFitArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value = "0")]
    pub column: String,
    #[arg(long)]
    pub no_header: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Config = 1,
    Undefined = 2,
    AuditFail = 3,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Config as u8 } else { Status::Ok as u8 });
        }
    };
    let result = match &cli.command {
        Command::Bound(a) => commands::bound(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Attack(a) => commands::attack(a),
        Command::Audit(a) => commands::audit(a),
        Command::Mc(a) => commands::mc(a),
        Command::Compare(a) => commands::compare(a),
        Command::PriorFit(a) => commands::prior_fit(a),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let status = match e {
                commands::Failure::Lib(rad_core::Error::Unreachable { .. }) => Status::Undefined,
                _ => Status::Config,
            };
            ExitCode::from(status as u8)
        }
    }
}
