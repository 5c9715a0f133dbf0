use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netputsim_core::response::Reduction;
use netputsim_core::shock::PctDenominator;
use netputsim_core::IndustryId;

mod commands;
mod error;

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "netputsim",
    version,
    about = "Netput system estimation and water price shock simulation"
)]
struct Cli {
    /// Cap on worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write CSV numbers with 6 significant digits instead of 17.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the restricted netput system for each industry in a panel.
    Estimate(EstimateArgs),
    /// Apply a price or exogenous-variable scenario to the baseline farms.
    Simulate(SimulateArgs),
    /// Marginal effects and elasticities at an evaluation point.
    Elasticities(ElasticitiesArgs),
    /// Water demand curves and choke prices for area quartiles.
    DemandCurve(DemandCurveArgs),
    /// Fit, monotonicity and convexity diagnostics.
    Validate(ValidateArgs),
    /// Generate a synthetic panel from known parameters.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Restrict to these industries (repeatable or comma separated).
    #[arg(long, value_parser = parse_industry, value_delimiter = ',')]
    pub industry: Vec<IndustryId>,
    #[arg(long)]
    pub out: PathBuf,
    /// Weight observations by their survey weight.
    #[arg(long)]
    pub weighted_estimation: bool,
    /// Leave a_m, b and D at zero instead of fitting the numeraire equation.
    #[arg(long)]
    pub no_numeraire_equation: bool,
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PctDenominatorArg {
    Scenario,
    Baseline,
}

impl From<PctDenominatorArg> for PctDenominator {
    fn from(v: PctDenominatorArg) -> Self {
        match v {
            PctDenominatorArg::Scenario => PctDenominator::Scenario,
            PctDenominatorArg::Baseline => PctDenominator::Baseline,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Parameter file, one per industry (repeatable).
    #[arg(long, required = true)]
    pub params: Vec<PathBuf>,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_parser = parse_industry, value_delimiter = ',')]
    pub industry: Vec<IndustryId>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "scenario")]
    pub pct_denominator: PctDenominatorArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReductionArg {
    PerFarmWeighted,
    MeanArea,
}

impl From<ReductionArg> for Reduction {
    fn from(v: ReductionArg) -> Self {
        match v {
            ReductionArg::PerFarmWeighted => Reduction::PerFarmWeighted,
            ReductionArg::MeanArea => Reduction::MeanArea,
        }
    }
}

#[derive(Debug, Args)]
pub struct ElasticitiesArgs {
    #[arg(long, required = true)]
    pub params: Vec<PathBuf>,
    /// Panel whose survey-weighted means form the evaluation point.
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Evaluation point JSON, one per industry (repeatable); takes
    /// precedence over --panel.
    #[arg(long)]
    pub eval_point: Vec<PathBuf>,
    /// How per-hectare effects are scaled to farm level for panel points.
    #[arg(long, value_enum, default_value = "per-farm-weighted")]
    pub reduction: ReductionArg,
    #[arg(long, value_parser = parse_industry, value_delimiter = ',')]
    pub industry: Vec<IndustryId>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemandCurveArgs {
    #[arg(long, required = true)]
    pub params: Vec<PathBuf>,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, value_parser = parse_industry, value_delimiter = ',')]
    pub industry: Vec<IndustryId>,
    #[arg(long)]
    pub out: PathBuf,
    /// Raw water price grid as `min:max:points`; by default it spans every
    /// quartile's choke price.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub grid_points: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, required = true)]
    pub params: Vec<PathBuf>,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, value_parser = parse_industry, value_delimiter = ',')]
    pub industry: Vec<IndustryId>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator config JSON; otherwise calibrated defaults per --industry.
    #[arg(long, conflicts_with_all = ["industry", "farms", "noise"])]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_industry, value_delimiter = ',')]
    pub industry: Vec<IndustryId>,
    /// Ground-truth parameters replacing the calibrated ones (repeatable).
    #[arg(long)]
    pub params: Vec<PathBuf>,
    /// Farms per industry.
    #[arg(long)]
    pub farms: Option<usize>,
    /// Noise sd as a fraction of each equation's mean quantity on the model
    /// scale.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_industry(s: &str) -> Result<IndustryId, String> {
    s.parse::<IndustryId>().map_err(|e| e.to_string())
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("NETPUTSIM_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    let ctx = commands::Context {
        format: netputsim_core::output::NumberFormat::from_pretty(cli.pretty),
        pretty: cli.pretty,
    };
    match cli.command {
        Command::Estimate(a) => commands::estimate(&ctx, &a),
        Command::Simulate(a) => commands::simulate(&ctx, &a),
        Command::Elasticities(a) => commands::elasticities(&ctx, &a),
        Command::DemandCurve(a) => commands::demand_curve(&ctx, &a),
        Command::Validate(a) => commands::validate(&ctx, &a),
        Command::Synth(a) => commands::synth(&ctx, &a),
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            CliError::usage(e.render().to_string().trim()).report();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(written) => {
            let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
            println!("{}", serde_json::json!({ "written": files }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
