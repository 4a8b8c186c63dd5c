use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use homsim::correlation::Parallelism;
use homsim::scenario::{parse_config_with, run_scenario_with, write_output, Scenario};
use homsim::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Regenerate Hong-Ou-Mandel coincidence, intensity and g² datasets.
#[derive(Parser, Debug)]
#[command(name = "homsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalised coincidence dip r̂(τ) and g²(τ).
    Dip(CommonArgs),
    /// Long-format R_AB, I_A, I_B maps over (τ, δf).
    Maps(CommonArgs),
    /// Mean port intensities over the full and filtered spectrum.
    Intensities(CommonArgs),
    /// Mean intensities, visibility and maps over the filtered spectrum.
    Filtered(CommonArgs),
    /// g²(τ) with and without detuning swap.
    G2(CommonArgs),
    /// r̂(0) and r̂(τ) for a sweep of uniform ζ half-widths.
    Dephasing(CommonArgs),
    /// Independent-laser model curves.
    Classical(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Number of detuning nodes.
    #[arg(long)]
    nodes: Option<u64>,
    #[arg(long, value_enum)]
    form: Option<Form>,
    #[arg(long, value_enum)]
    envelope: Option<EnvelopeArg>,
    /// Envelope exponent in the coincidence integrand.
    #[arg(short = 'p', value_parser = clap::value_parser!(u8).range(1..=2))]
    p: Option<u8>,
    #[arg(long, value_enum)]
    swap: Option<SwapArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Form {
    Paper,
    Product,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EnvelopeArg {
    Gaussian,
    Unity,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SwapArg {
    Exact,
    Bernoulli,
    Off,
}

impl Command {
    fn split(&self) -> (Scenario, &CommonArgs) {
        match self {
            Command::Dip(a) => (Scenario::Dip, a),
            Command::Maps(a) => (Scenario::Maps, a),
            Command::Intensities(a) => (Scenario::Intensities, a),
            Command::Filtered(a) => (Scenario::Filtered, a),
            Command::G2(a) => (Scenario::G2, a),
            Command::Dephasing(a) => (Scenario::Dephasing, a),
            Command::Classical(a) => (Scenario::Classical, a),
        }
    }
}

fn overrides(scenario: Scenario, args: &CommonArgs) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("scenario".into(), scenario.name().into());
    if let Some(seed) = args.seed {
        m.insert("seed".into(), seed.into());
    }
    if let Some(f) = args.format {
        let v = match f {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        m.insert("format".into(), v.into());
    }
    if let Some(n) = args.nodes {
        m.insert("nodes".into(), n.into());
    }
    if let Some(f) = args.form {
        let v = match f {
            Form::Paper => "paper",
            Form::Product => "product",
        };
        m.insert("form".into(), v.into());
    }
    if let Some(e) = args.envelope {
        let v = match e {
            EnvelopeArg::Gaussian => "gaussian",
            EnvelopeArg::Unity => "unity",
        };
        m.insert("envelope".into(), v.into());
    }
    if let Some(p) = args.p {
        m.insert("p".into(), p.into());
    }
    if let Some(s) = args.swap {
        let v = match s {
            SwapArg::Exact => "exact_half",
            SwapArg::Bernoulli => "bernoulli",
            SwapArg::Off => "off",
        };
        m.insert("swap".into(), v.into());
    }
    m
}

fn error_record(err: &Error) -> Value {
    match err {
        Error::Config { key, message } => json!({
            "error": { "kind": "config", "key": key, "message": message }
        }),
        Error::InvalidArgument(message) => json!({
            "error": { "kind": "config", "message": message }
        }),
        other => json!({
            "error": { "kind": "runtime", "message": other.to_string() }
        }),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (scenario, args) = cli.command.split();
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: "--config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?,
        None => String::new(),
    };
    let cfg = parse_config_with(&text, overrides(scenario, args))?;
    let output = run_scenario_with(&cfg, Parallelism::from_env())?;
    for path in write_output(&output, &args.out)? {
        eprintln!("wrote {}", path.display());
    }
    eprintln!(
        "{} finished in {:.3} s",
        scenario.name(),
        output.wall_time_s
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_record(&err));
            if err.is_config_error() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
