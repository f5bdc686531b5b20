use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clozeclass::metrics::{aggregate_runs, read_runs, render_table, write_report, ReportRow};
use clozeclass::pipeline::{Pipeline, PipelineConfig, Services, Stage, StageStatus};
use clozeclass::synthetic::{write_workspace, SyntheticSpec};
use clozeclass::{Error, Result};

/// Classify documents from label names alone.
#[derive(Parser, Debug)]
#[command(name = "clozeclass", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Pipeline config file.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,

    /// Rerun stages even when their inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,

    /// Override the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Use cached service responses only.
    #[arg(long, global = true)]
    offline: bool,

    /// Language-model service URL; overrides the config.
    #[arg(long, global = true, env = "CLOZECLASS_ENDPOINT")]
    endpoint: Option<String>,

    /// Log more (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Acquire signal words for the training corpus.
    Signals,
    /// Build static representations and per-token document features.
    Embed,
    /// Assign pseudo labels by similarity to the label names.
    Pseudo,
    /// Drop class-indiscriminative signal words.
    Filter,
    /// Fit the classifier to the pseudo labels.
    Pretrain,
    /// Train the classifier jointly with the latent word model.
    Train,
    /// Predict test documents.
    Predict,
    /// Score predictions against gold labels.
    Eval,
    /// Run every stage in order.
    Run,
    /// Write a planted-topic corpus with filled caches for offline runs.
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 600)]
        train_docs: usize,
        #[arg(long, default_value_t = 300)]
        test_docs: usize,
        /// Corpus generator seed.
        #[arg(long, default_value_t = 7)]
        corpus_seed: u64,
    },
    /// Aggregate per-run scores into a mean/std table.
    Report {
        /// Row label.
        #[arg(long, default_value = "runs")]
        name: String,
        /// Write `<prefix>.txt` and `<prefix>.jsonl` in addition to printing.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Run files (one `{micro_f1, macro_f1}` record per line).
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

fn pipeline(opts: &GlobalOpts) -> Result<Pipeline> {
    let mut config = PipelineConfig::load(&opts.config)?;
    if let Some(seed) = opts.seed {
        config.train.seed = seed;
    }
    if let Some(endpoint) = &opts.endpoint {
        config.service.endpoint = endpoint.clone();
    }
    let services = if opts.offline {
        Services::offline()
    } else {
        Services::http(&config.service.endpoint)
    };
    Ok(Pipeline::new(config, services)?.with_force(opts.force))
}

fn report_status(stage: Stage, status: StageStatus) {
    match status {
        StageStatus::Ran => println!("{stage}: done"),
        StageStatus::Skipped => println!("{stage}: up to date"),
    }
}

fn run(cli: Cli) -> Result<()> {
    let stage = match &cli.command {
        Command::Signals => Some(Stage::Signals),
        Command::Embed => Some(Stage::Embed),
        Command::Pseudo => Some(Stage::Pseudo),
        Command::Filter => Some(Stage::Filter),
        Command::Pretrain => Some(Stage::Pretrain),
        Command::Train => Some(Stage::Train),
        Command::Predict => Some(Stage::Predict),
        Command::Eval => Some(Stage::Eval),
        _ => None,
    };
    if let Some(stage) = stage {
        let p = pipeline(&cli.global)?;
        report_status(stage, p.run_stage(stage)?);
        if stage == Stage::Eval {
            let m = p.read_metrics()?;
            println!("micro_f1 {:.4}  macro_f1 {:.4}", m.micro_f1, m.macro_f1);
        }
        return Ok(());
    }
    match cli.command {
        Command::Run => {
            let p = pipeline(&cli.global)?;
            for stage in Stage::ALL {
                report_status(stage, p.run_stage(stage)?);
            }
            let m = p.read_metrics()?;
            println!("micro_f1 {:.4}  macro_f1 {:.4}", m.micro_f1, m.macro_f1);
        }
        Command::Synth {
            out,
            train_docs,
            test_docs,
            corpus_seed,
        } => {
            let spec = SyntheticSpec {
                train_docs,
                test_docs,
                seed: corpus_seed,
                ..Default::default()
            };
            let config = write_workspace(&out, &spec)?;
            println!("wrote {}", config.display());
        }
        Command::Report { name, output, runs } => {
            let mut all = Vec::new();
            for path in &runs {
                all.extend(read_runs(path)?);
            }
            let rows = [ReportRow {
                name,
                summary: aggregate_runs(&all)?,
            }];
            print!("{}", render_table(&rows));
            if let Some(prefix) = output {
                write_report(&prefix.with_extension("txt"), &prefix.with_extension("jsonl"), &rows)?;
            }
        }
        _ => unreachable!("stage commands handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
