use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use externet::cli::{self, Command, OutputFormat, RunConfig};

/// Batch diagnostics for public-goods economies: spectral efficiency tests,
/// Lindahl solutions with price certificates, essential agents, and
/// separation-cost bounds over economy JSON files.
#[derive(Parser)]
#[command(name = "externet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a profile (or the status quo) as efficient or improvable.
    Diagnose(CommonArgs),
    /// Solve for the centrality action profile and its Lindahl certificate.
    Solve(CommonArgs),
    /// Pareto weights at an efficient profile (requires --profile).
    Weights(CommonArgs),
    /// Agent-removal sweep at the status quo.
    Essential(CommonArgs),
    /// Separation-cost bound for a partition (requires --partition).
    Separate(CommonArgs),
    /// Cycle-value estimates trace(B^l)^(1/l).
    Cycles(CommonArgs),
    /// Sampled assumption and irreducibility checks.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Economy JSON file.
    #[arg(long, short = 'i')]
    input: PathBuf,

    /// Action profile: inline comma-separated ("1,2,0.5") or a JSON file.
    #[arg(long)]
    profile: Option<String>,

    /// Comma-separated 1-based agent ids forming one side of a split.
    #[arg(long, value_delimiter = ',')]
    partition: Option<Vec<usize>>,

    /// Override the eigenvalue residual tolerance.
    #[arg(long)]
    tol_eig: Option<f64>,

    /// Override the efficiency band around rho = 1.
    #[arg(long)]
    tol_pareto: Option<f64>,

    /// Override the centrality fixed-point residual tolerance.
    #[arg(long)]
    tol_fix: Option<f64>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Export the analyzed benefits network in DOT form.
    #[arg(long)]
    dot: Option<PathBuf>,

    /// Seed for randomized solver restarts.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

fn to_config(command: Command, args: CommonArgs) -> RunConfig {
    RunConfig {
        command,
        input_path: args.input,
        profile: args.profile.as_deref().map(cli::parse_profile_arg),
        partition: args.partition,
        tol_eig: args.tol_eig,
        tol_pareto: args.tol_pareto,
        tol_fix: args.tol_fix,
        output_format: match args.format {
            Format::Json => OutputFormat::Json,
            Format::Table => OutputFormat::Table,
        },
        dot_export: args.dot,
        seed: args.seed,
        max_iter: None,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.command {
        Cmd::Diagnose(a) => to_config(Command::Diagnose, a),
        Cmd::Solve(a) => to_config(Command::Solve, a),
        Cmd::Weights(a) => to_config(Command::Weights, a),
        Cmd::Essential(a) => to_config(Command::Essential, a),
        Cmd::Separate(a) => to_config(Command::Separate, a),
        Cmd::Cycles(a) => to_config(Command::Cycles, a),
        Cmd::Validate(a) => to_config(Command::Validate, a),
    };
    match cli::run(&config) {
        Ok(output) => {
            println!("{}", output.rendered);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
