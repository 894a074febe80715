use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "ictci", version, about = "Exact confidence intervals and design planning for the Poisson item count technique")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat `key=value` file whose keys mirror the long flag names; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "ICTCI_THREADS")]
    pub threads: Option<usize>,

    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailArg {
    Inclusive,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Expected,
    Quantile,
}

pub const SUBCOMMANDS: &[&str] = &[
    "ci",
    "lambda-min",
    "sample-size",
    "coverage",
    "length-profile",
    "length-vs-lambda",
    "simulate",
];

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Confidence interval for an observed total z.
    Ci(CiArgs),
    /// Smallest Poisson mean meeting the privacy requirement.
    LambdaMin(LambdaMinArgs),
    /// Smallest total sample size meeting a length criterion.
    SampleSize(SampleSizeArgs),
    /// Coverage probability over a grid of pi.
    Coverage(CoverageArgs),
    /// Interval endpoints and length as functions of the observed total.
    LengthProfile(LengthProfileArgs),
    /// Expected length at fixed pi across Poisson means.
    LengthVsLambda(LengthVsLambdaArgs),
    /// Monte Carlo replicates of the survey.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Total sample size, split equally between the groups.
    #[arg(long, required_unless_present_all = ["n1", "n2"])]
    pub n: Option<u64>,
    /// Size of the subtraction group (use with --n2 instead of --n).
    #[arg(long, requires = "n2", conflicts_with = "n")]
    pub n1: Option<u64>,
    #[arg(long, requires = "n1", conflicts_with = "n")]
    pub n2: Option<u64>,
    /// Poisson mean of the neutral count.
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub z: i64,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
    /// Tail convention for the exact endpoints.
    #[arg(long, value_enum, default_value_t = TailArg::Inclusive)]
    pub tail_rule: TailArg,
}

#[derive(Debug, Args)]
pub struct LambdaMinArgs {
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub pi0: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub pi_step: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda_step: f64,
    #[arg(long, default_value_t = 100.0)]
    pub lambda_cap: f64,
}

#[derive(Debug, Args)]
pub struct SampleSizeArgs {
    #[arg(long, value_enum)]
    pub criterion: CriterionArg,
    /// Target interval length.
    #[arg(long)]
    pub d: f64,
    /// Required normalised probability for the quantile criterion.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long)]
    pub pi0: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-3)]
    pub pi_step: f64,
    #[arg(long, default_value_t = 200_000)]
    pub n_cap: u64,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    /// `start:stop:step`, inclusive of stop.
    #[arg(long, default_value = "0.001:0.999:0.001")]
    pub pi_grid: String,
    /// Also report the length-quantile probability for this d.
    #[arg(long)]
    pub d: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LengthProfileArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
    /// Restrict the totals to those plausible for some pi up to this value.
    #[arg(long, default_value_t = 1.0)]
    pub pi_max: f64,
}

#[derive(Debug, Args)]
pub struct LengthVsLambdaArgs {
    #[arg(long)]
    pub pi: f64,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    /// Comma-separated list, or `start:stop:step`.
    #[arg(long, default_value = "0.5,2,8")]
    pub lambdas: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub pi: f64,
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, default_value_t = 1000)]
    pub replicates: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit every report as `replicate,group,y`.
    #[arg(long, conflicts_with = "coverage")]
    pub raw: bool,
    /// Estimate coverage of this interval method instead of listing totals.
    #[arg(long, value_enum)]
    pub coverage: Option<MethodArg>,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
}
