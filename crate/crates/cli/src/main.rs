use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rationale_core::gateway::GatewayMode;
use rationale_core::pipeline::{Overrides, RunConfig, RunContext};
use rationale_core::Error;

/// Rationale-augmented dialogue classification pipeline.
#[derive(Parser)]
#[command(name = "rationale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, short, default_value = "config.json")]
    config: PathBuf,
    /// Gateway mode: live, replay or record.
    #[arg(long)]
    mode: Option<GatewayMode>,
    /// Output directory, overriding the config.
    #[arg(long, short)]
    output: Option<String>,
    /// Response cache directory, overriding the config.
    #[arg(long)]
    cache: Option<String>,
    /// Accept upstream files written under a different config hash.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the corpus files.
    Ingest(Common),
    /// Generate rationales for every labeled turn.
    Rationalize(Common),
    /// Partition dialogues and draw k-shot training splits.
    Split(Common),
    /// Render classifier inputs for each rationale mode.
    Augment(Common),
    /// Write fine-tuning bundles.
    Export(Common),
    /// Run the binary-probe few-shot classifier on the test split.
    Classify(Common),
    /// Score every predictions file and run significance tests.
    Evaluate(Common),
    /// Render the results grid as CSV and text.
    Report(Common),
    /// Run every stage in order.
    All(Common),
    /// Validate the config and print its hash.
    Check(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Config(problems) => {
                    eprintln!("error: invalid configuration");
                    for p in problems {
                        eprintln!("  - {p}");
                    }
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}

fn run(command: Command) -> rationale_core::Result<()> {
    let (stage, common) = match command {
        Command::Ingest(c) => ("ingest", c),
        Command::Rationalize(c) => ("rationalize", c),
        Command::Split(c) => ("split", c),
        Command::Augment(c) => ("augment", c),
        Command::Export(c) => ("export", c),
        Command::Classify(c) => ("classify", c),
        Command::Evaluate(c) => ("evaluate", c),
        Command::Report(c) => ("report", c),
        Command::All(c) => ("all", c),
        Command::Check(c) => ("check", c),
    };
    let overrides = Overrides {
        gateway_mode: common.mode,
        output_dir: common.output,
        cache_dir: common.cache,
    };
    let config = RunConfig::load(&common.config, &overrides)?;
    let ctx = RunContext::new(config).force(common.force);
    let outcomes = match stage {
        "check" => {
            println!("config ok, hash {}", ctx.hash);
            return Ok(());
        }
        "all" => ctx.run_all()?,
        s => vec![ctx.run_stage(s)?],
    };
    for o in outcomes {
        println!("{:<12} {}", o.stage, o.message);
    }
    Ok(())
}
