use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lmea::{BackendSpec, BuiltinConfig, InstanceKind, RemoteConfig};
use lmea_cli::{
    cmd_baselines, cmd_evolve, cmd_gen, cmd_report, cmd_solve, manifest_path, EvolveMode,
    EvolveOptions, HarnessConfig,
};

#[derive(Parser)]
#[command(name = "lmea", version, about = "Evolutionary TSP benchmark harness")]
struct Cli {
    /// Output directory shared by all commands.
    #[arg(long, global = true, default_value = "lmea-out")]
    out: PathBuf,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instance files and the manifest.
    Gen(GenArgs),
    /// Certify optimal tour lengths for every manifest instance.
    Solve(ManifestArg),
    /// Run the construction heuristics.
    Baselines(BaselineArgs),
    /// Run the evolutionary optimizer.
    Evolve(Box<EvolveArgs>),
    /// Merge result fragments into tables and averaged convergence series.
    Report(ReportArgs),
}

#[derive(Args)]
struct ManifestArg {
    /// Manifest path (default: <out>/manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_delimiter = ',', default_value = "rue,clu")]
    kinds: Vec<InstanceKind>,
    #[arg(long, value_delimiter = ',', default_value = "10,15,20,25")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    per_set: usize,
    /// Master seed (default: the config file's, else 1).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    manifest: ManifestArg,
    /// Seeded repetitions of NN and RI per instance.
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Builtin,
    Remote,
    Scripted,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    manifest: ManifestArg,
    #[arg(long, value_enum, default_value = "lmea")]
    mode: EvolveMode,
    /// Offspring backend (default: the config file's, else builtin).
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Transcript file or directory to replay with the scripted backend.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Chat-completions endpoint for the remote backend.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Retries per generation for remote and scripted backends.
    #[arg(long)]
    retry_budget: Option<u32>,
    #[arg(long)]
    requests_per_minute: Option<f64>,
    /// Runs per instance.
    #[arg(long)]
    runs: Option<usize>,
    /// Population size N.
    #[arg(short = 'N', long)]
    population_size: Option<usize>,
    /// Generations G.
    #[arg(short = 'G', long)]
    generations: Option<usize>,
    /// Stagnation window K.
    #[arg(short = 'K', long)]
    stagnation_window: Option<usize>,
    /// Temperature increment.
    #[arg(long)]
    alpha: Option<f64>,
    /// Keep raising the temperature every stagnant generation after the
    /// first increase instead of resetting the counter.
    #[arg(long)]
    no_reset: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Fragment files (default: every file in <out>/results).
    fragments: Vec<PathBuf>,
}

fn backend_spec(args: &EvolveArgs, current: BackendSpec) -> Result<BackendSpec> {
    let mut spec = match (args.backend, current) {
        (None, spec) => spec,
        (Some(BackendKind::Builtin), BackendSpec::Builtin(b)) => BackendSpec::Builtin(b),
        (Some(BackendKind::Builtin), _) => BackendSpec::Builtin(BuiltinConfig::default()),
        (Some(BackendKind::Remote), BackendSpec::Remote(r)) => BackendSpec::Remote(r),
        (Some(BackendKind::Remote), _) => BackendSpec::Remote(RemoteConfig::default()),
        (Some(BackendKind::Scripted), current) => {
            let Some(transcript) = args.transcript.clone() else {
                bail!("--backend scripted needs --transcript");
            };
            let retry_budget = match current {
                BackendSpec::Scripted { retry_budget, .. } => retry_budget,
                _ => 0,
            };
            BackendSpec::Scripted {
                transcript,
                retry_budget,
            }
        }
    };
    match &mut spec {
        BackendSpec::Remote(r) => {
            if let Some(e) = &args.endpoint {
                r.endpoint = e.clone();
            }
            if let Some(m) = &args.model {
                r.model = m.clone();
            }
            if let Some(b) = args.retry_budget {
                r.retry_budget = b;
            }
            if args.requests_per_minute.is_some() {
                r.requests_per_minute = args.requests_per_minute;
            }
        }
        BackendSpec::Scripted {
            transcript,
            retry_budget,
        } => {
            if let Some(t) = &args.transcript {
                *transcript = t.clone();
            }
            if let Some(b) = args.retry_budget {
                *retry_budget = b;
            }
        }
        BackendSpec::Builtin(_) => {}
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    let mut config = HarnessConfig::load_or_default(cli.config.as_deref())?;
    if cli.workers.is_some() {
        config.workers = cli.workers;
    }
    let out = cli.out.as_path();
    let manifest = |m: &ManifestArg| manifest_path(out, m.manifest.as_deref());
    match cli.command {
        Command::Gen(args) => {
            let seed = args.seed.unwrap_or(config.seed);
            let m = cmd_gen(out, &args.kinds, &args.sizes, args.per_set, seed)?;
            let files: usize = m.sets.iter().map(|s| s.instances.len()).sum();
            println!(
                "wrote {} sets, {files} instances to {}",
                m.sets.len(),
                out.display()
            );
        }
        Command::Solve(args) => {
            let s = cmd_solve(&manifest(&args), out, &config.thread_pool()?)?;
            println!("solved {}, cached {}", s.solved, s.cached);
        }
        Command::Baselines(args) => {
            let reps = args.repetitions.unwrap_or(config.repetitions);
            let f = cmd_baselines(&manifest(&args.manifest), out, reps, &config.thread_pool()?)?;
            println!("{} baseline rows written", f.rows.len());
        }
        Command::Evolve(args) => {
            let mut evolve = config.evolve.clone();
            evolve.backend = backend_spec(&args, evolve.backend)?;
            if let Some(v) = args.population_size {
                evolve.population_size = v;
            }
            if let Some(v) = args.generations {
                evolve.generations = v;
            }
            if let Some(v) = args.stagnation_window {
                evolve.stagnation_window = v;
            }
            if let Some(v) = args.alpha {
                evolve.alpha = v;
            }
            if args.no_reset {
                evolve.reset_after_increase = false;
            }
            let options = EvolveOptions {
                mode: args.mode,
                runs: args.runs.unwrap_or(config.runs),
                config: evolve,
            };
            let f = cmd_evolve(
                &manifest(&args.manifest),
                out,
                &options,
                &config.thread_pool()?,
            )?;
            let hits = f.rows.iter().filter(|r| r.success).count();
            println!("{} runs, {hits} reached the optimum", f.rows.len());
        }
        Command::Report(args) => {
            let table = cmd_report(out, &args.fragments)?;
            print!("{}", table.to_text());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
