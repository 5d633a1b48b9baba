use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use actor_tt::config::{LogFormat, RunConfig};
use actor_tt::error::{Error, ErrorClass};
use actor_tt::event_log::log_summary;
use actor_tt::pipeline::{read_log, FeatureSelection, Pipeline, Stage, REPORT_MD};

/// Forecast next-day process throughput time from an event log.
#[derive(Parser)]
#[command(name = "actor-tt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage and write all artifacts.
    Run(RunArgs),
    /// Run a single stage against existing upstream artifacts.
    Stage {
        /// ingest, enrich, panel, features, tune, train, evaluate, importance or report
        name: Stage,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Parse and validate a config file without running anything.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print event, case, resource and activity counts for a log.
    Summary {
        log: PathBuf,
        /// Column mapping and timestamp settings are taken from here.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        format: Option<LogFormat>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `models.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "both")]
    feature_set: FeatureSelection,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Pipeline => 4,
    })
}

fn pipeline(args: &RunArgs) -> Result<Pipeline, Error> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.models.seed = seed;
    }
    let out = args.out.clone().unwrap_or_else(|| config.output.dir.clone());
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    Ok(Pipeline::new(config, out, args.feature_set))
}

fn summary(log: &Path, config: Option<&Path>, format: Option<LogFormat>) -> Result<(), Error> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let format = format.unwrap_or_else(|| LogFormat::infer(log));
    let parsed = read_log(log, format, &cfg.dataset.csv_options())?;
    let s = log_summary(&parsed);
    println!("events:     {}", s.n_events);
    println!("cases:      {}", s.n_cases);
    println!("resources:  {}", s.n_resources);
    println!("activities: {}", s.n_activities);
    if let Some((first, last)) = s.span {
        println!("span:       {first} .. {last}");
    }
    let d = parsed.diagnostics();
    if d.skipped_rows > 0 {
        println!("skipped rows: {} of {}", d.skipped_rows, d.total_rows);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let p = pipeline(&args)?;
            let manifest = p.run()?;
            let n: usize = manifest.stages.iter().map(|s| s.outcome.outputs.len()).sum();
            println!(
                "wrote {} artifacts to {} in {:.1}s",
                n + 1,
                p.out_dir.display(),
                manifest.total_seconds
            );
            if let Ok(report) = std::fs::read_to_string(p.path(REPORT_MD)) {
                println!("\n{report}");
            }
        }
        Command::Stage { name, args } => {
            let outcome = pipeline(&args)?.run_stage(name)?;
            for file in &outcome.outputs {
                println!("{file}");
            }
            for (k, v) in &outcome.counters {
                log::info!("{k}: {v}");
            }
        }
        Command::ValidateConfig { config } => {
            let cfg = RunConfig::load(&config)?;
            println!(
                "ok: {} grid candidates, seed {}, train fraction {}",
                cfg.models.candidates()?.len(),
                cfg.models.seed,
                cfg.evaluation.train_fraction
            );
        }
        Command::Summary { log, config, format } => summary(&log, config.as_deref(), format)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
