use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cfplan_cli::{commands, error_exit_code, Outcome, RunConfig};
use clap::{Parser, Subcommand};

/// Counterfactual meta-action planning, annotation and evaluation.
#[derive(Parser)]
#[command(name = "cfplan", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set planner.stride=1.0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Seed for the scene split and synthetic suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reject unknown fields in scenario files.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build five-stage records and a manifest from every scenario.
    Annotate,
    /// Assign manifest scenes to train/val.
    Split,
    /// Evaluate all nine meta-actions for one scene.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        /// Analysis time in seconds.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Closed-loop replay with the planner in control of the ego.
    Simulate {
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Score validation responses and write reports.
    Evaluate,
    /// Write one prompt per validation sample.
    Prompt,
    /// Score a directory of response files.
    Score {
        #[arg(long)]
        responses: Option<PathBuf>,
    },
    /// Write a seeded synthetic scenario suite.
    Synth {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        collisions: usize,
    },
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref(), &cli.overrides, cli.seed, cli.strict)?;
    let outcome = match cli.command {
        Command::Annotate => {
            let (summary, outcome) = commands::annotate(&cfg)?;
            println!("{}", summary.line());
            outcome
        }
        Command::Split => {
            let (manifest, outcome) = commands::split(&cfg)?;
            println!("{}", commands::split_line(&manifest));
            outcome
        }
        Command::Plan { scene, t } => {
            let (report, outcome) = commands::plan_scene(&cfg, &scene, t)?;
            print!("{}", report.table());
            outcome
        }
        Command::Simulate { scene } => {
            let (report, outcome) = commands::simulate(&cfg, scene)?;
            print!("{}", report.summary());
            outcome
        }
        Command::Evaluate => {
            let (report, outcome) = commands::evaluate(&cfg)?;
            print!("{}", report.to_table());
            outcome
        }
        Command::Prompt => {
            let (n, outcome) = commands::prompt(&cfg)?;
            println!("wrote {n} prompts to {}", cfg.output_dir.join("prompts").display());
            outcome
        }
        Command::Score { responses } => {
            if responses.is_some() {
                cfg.responses_dir = responses;
            }
            let (report, outcome) = commands::score(&cfg)?;
            print!("{}", report.to_table());
            outcome
        }
        Command::Synth { count, collisions } => {
            let (n, outcome) = commands::synth(&cfg, count, collisions)?;
            println!("wrote {n} scenes to {}", cfg.scenario_dir.display());
            outcome
        }
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) => ExitCode::from(o.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
