use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use markov_adam::config::{load_config, Experiment, Overrides, OUT_DIR_ENV};
use markov_adam::diagnose::diagnose;
use markov_adam::fixture::{builtin, load_fixture};
use markov_adam::harness::{plateau_scan, replicate, summarize, write_artifacts};
use markov_adam::verify::{run_level, Level, VerifyReport};

#[derive(Parser)]
#[command(name = "markov-adam", version, about = "AMSGrad policy gradient and TD experiments on finite MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (flat TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the environment and the config file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of replicate runs
    #[arg(long)]
    seeds: Option<usize>,
    /// Global seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run TD-AMSGrad replicates (and a plateau scan if configured)
    RunTd(RunArgs),
    /// Run policy gradient replicates with AMSGrad or SGD
    RunPg(RunArgs),
    /// Print exact diagnostics for a fixture file (or `builtin:<name>`)
    DiagnoseMdp { fixture: String },
    /// Run the verification suite and print a JSON report
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: Level,
    },
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<()> {
    let file = load_config(&args.config)?;
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let overrides = Overrides {
        seeds: args.seeds,
        seed: args.seed,
        out_dir: args.out.clone(),
        env_out_dir: std::env::var_os(OUT_DIR_ENV).map(PathBuf::from),
    };
    let spec = file.validate(experiment, &base, &overrides)?;
    let started = Instant::now();
    let agg = replicate(&spec, spec.seeds)?;
    let scan = if spec.plateau_alphas.is_empty() { vec![] } else { plateau_scan(&spec, &spec.plateau_alphas)? };
    let summary = summarize(&spec, &agg, scan);
    let stem = match experiment {
        Experiment::Td => "td",
        Experiment::Pg => "pg",
    };
    let (csv, json) = write_artifacts(&spec.out_dir, stem, &agg, &summary)?;
    log::info!("finished in {:.2?}", started.elapsed());
    println!("final mean error {:e} (SE {:e}) over {} seeds", summary.final_mean, summary.final_se, agg.seeds.len());
    if let Some(fit) = &summary.rate_fit {
        println!("tail slope {:.4}, r^2 {:.4}", fit.slope, fit.r_squared);
        if let Some(p) = fit.plateau {
            println!("plateau {p:e}");
        }
    }
    if let Some(r) = summary.plateau_ratio {
        println!("plateau ratio {r:.3}");
    }
    println!("wrote {} and {}", csv.display(), json.display());
    if summary.invariant_violations > 0 {
        bail!("{} invariant violations", summary.invariant_violations);
    }
    Ok(())
}

fn diagnose_cmd(entry: &str) -> Result<()> {
    let fixture = match entry.strip_prefix("builtin:") {
        Some(name) => builtin(name)?,
        None => {
            let path = Path::new(entry);
            if !path.exists() {
                bail!("fixture file not found: {}", path.display());
            }
            load_fixture(path)?
        }
    };
    let d = diagnose(&fixture).with_context(|| format!("diagnosing `{}`", fixture.name))?;
    print!("{d}");
    Ok(())
}

fn verify_cmd(level: Level) -> Result<bool> {
    let checks = run_level(level);
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport {
        level: match level {
            Level::Fast => "fast",
            Level::Full => "full",
        },
        passed,
        checks: &checks,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!("FAILED {}: observed {}; expected {}", c.name, c.observed, c.expected);
    }
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunTd(args) => run(Experiment::Td, args).map(|_| true),
        Command::RunPg(args) => run(Experiment::Pg, args).map(|_| true),
        Command::DiagnoseMdp { fixture } => diagnose_cmd(fixture).map(|_| true),
        Command::Verify { level } => verify_cmd(*level),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
