use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use collisim::cli as runner;
use collisim::config::{ConfigFile, ExperimentConfig, OutputFormat, OutputSpec, SweepSpec};
use collisim::{BoundMode, Error, MiHook, NormKind};

#[derive(Parser)]
#[command(name = "collisim", version, about = "Spin-1/2 collision-model simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and emit per-collision records.
    Run(RunArgs),
    /// Evaluate the saturated non-Markovianity over a coupling grid.
    Sweep(SweepArgs),
    /// Run several environment models to saturation and rank them.
    Compare(CompareArgs),
    /// Run with consecutive separate interactions inside each collision.
    Consecutive(ConsecutiveArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML config file; individual flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// System-environment coupling g_se = J_se t.
    #[arg(long)]
    g_se: Option<f64>,
    /// Environment-environment coupling g_ee = J_ee t (radians).
    #[arg(long)]
    g_ee: Option<f64>,
    /// Environment model, e.g. separate:2 or collective:3.
    #[arg(long)]
    env: Option<String>,
    /// Number of collisions.
    #[arg(long)]
    collisions: Option<usize>,
    /// Initial system state of trajectory 1 (zero|one|plus|minus|theta,phi).
    #[arg(long)]
    state1: Option<String>,
    /// Initial system state of trajectory 2.
    #[arg(long)]
    state2: Option<String>,
    /// Initial state of every subenvironment.
    #[arg(long)]
    env_init: Option<String>,
    /// Where the bound inputs are sampled: post-erasure or pre-erasure.
    #[arg(long)]
    bound_mode: Option<String>,
    /// Mutual-information hook: pre-ee or post-ee.
    #[arg(long)]
    mi_hook: Option<String>,
    /// Norm backing the bound terms: trace or operator.
    #[arg(long)]
    norm: Option<String>,
    /// Output file path (stdout CSV when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    sweep_min: Option<f64>,
    #[arg(long)]
    sweep_max: Option<f64>,
    #[arg(long)]
    sweep_steps: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Environment models to compare (repeat the flag). Each uses the
    /// shared flags; g_ee may be attached per model as `spec@g_ee`.
    #[arg(long = "model", required = true)]
    models: Vec<String>,
}

#[derive(Args)]
struct ConsecutiveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Interaction stages in order of increasing distance, as
    /// `range=strength` (repeat the flag).
    #[arg(long = "stage", required = true)]
    stages: Vec<String>,
}

fn parse_enum<T: serde::de::DeserializeOwned>(value: &str, field: &str) -> Result<T, Error> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| Error::Config(format!("{field}: unknown value `{value}`")))
}

fn resolve(common: &CommonArgs, env_override: Option<String>) -> Result<ExperimentConfig, Error> {
    let base = match &common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let bound_mode: Option<BoundMode> = common
        .bound_mode
        .as_deref()
        .map(|v| parse_enum(v, "bound_mode"))
        .transpose()?;
    let mi_hook: Option<MiHook> = common
        .mi_hook
        .as_deref()
        .map(|v| parse_enum(v, "mi_hook"))
        .transpose()?;
    let norm: Option<NormKind> = common
        .norm
        .as_deref()
        .map(|v| parse_enum(v, "norm"))
        .transpose()?;
    let format = match common.format.as_str() {
        "csv" => OutputFormat::Csv,
        "json" => OutputFormat::Json,
        other => return Err(Error::Config(format!("format: unknown value `{other}`"))),
    };
    let initial_pair = match (&common.state1, &common.state2) {
        (None, None) => None,
        (Some(a), Some(b)) => Some([a.clone(), b.clone()]),
        _ => {
            return Err(Error::Config(
                "state1/state2: both must be given to override the initial pair".into(),
            ))
        }
    };
    let overlay = ConfigFile {
        g_se: common.g_se,
        g_ee: common.g_ee,
        env_model: env_override.or_else(|| common.env.clone()),
        collisions: common.collisions,
        initial_pair,
        env_init: common.env_init.clone(),
        bound_mode,
        mi_hook,
        norm,
        sweep: None,
        output: common.output.as_ref().map(|p| OutputSpec {
            path: p.display().to_string(),
            format,
        }),
    };
    base.merged(overlay).resolve()
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            runner::run_experiment(&resolve(&args.common, None)?)?;
        }
        Command::Sweep(args) => {
            // the grid supplies g_ee point by point; no base value needed
            let mut common = args.common.clone();
            common.g_ee = common.g_ee.or(Some(0.0));
            let mut config = resolve(&common, None)?;
            let file_sweep = config.sweep;
            let sweep = match (args.sweep_min, args.sweep_max, args.sweep_steps) {
                (Some(g_ee_min), Some(g_ee_max), Some(steps)) => SweepSpec {
                    g_ee_min,
                    g_ee_max,
                    steps,
                },
                (None, None, None) => file_sweep.ok_or_else(|| {
                    Error::Config(
                        "sweep: give --sweep-min/--sweep-max/--sweep-steps or a [sweep] \
                         section in the config file"
                            .into(),
                    )
                })?,
                _ => {
                    return Err(Error::Config(
                        "sweep: --sweep-min, --sweep-max and --sweep-steps go together".into(),
                    ))
                }
            };
            config.sweep = Some(sweep);
            runner::run_sweep(&config)?;
        }
        Command::Compare(args) => {
            let configs = args
                .models
                .iter()
                .map(|spec| {
                    let (model, g_ee) = match spec.rsplit_once('@') {
                        Some((m, g)) => (
                            m.to_string(),
                            Some(g.parse::<f64>().map_err(|_| {
                                Error::Config(format!("model: bad g_ee in `{spec}`"))
                            })?),
                        ),
                        None => (spec.clone(), None),
                    };
                    let mut common = args.common.clone();
                    if g_ee.is_some() {
                        // this model carries its own g_ee; no base value needed
                        common.g_ee = common.g_ee.or(Some(0.0));
                    }
                    let mut config = resolve(&common, Some(model))?;
                    if let Some(g) = g_ee {
                        config.g_ee = g;
                    }
                    Ok(config)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let report = runner::compare_models(&configs)?;
            for entry in &report.ranking {
                eprintln!(
                    "{} (g_ee = {}): N = {} (saturated at {})",
                    entry.env_model,
                    entry.g_ee,
                    entry.n,
                    entry
                        .saturation_index
                        .map_or("never".to_string(), |k| k.to_string())
                );
            }
        }
        Command::Consecutive(args) => {
            let env = format!("consecutive:{}", args.stages.join(","));
            // the stages carry their own strengths; g_ee is ignored
            let mut common = args.common.clone();
            common.g_ee = common.g_ee.or(Some(0.0));
            runner::consecutive_separate(&resolve(&common, Some(env))?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::UnknownLabel(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
