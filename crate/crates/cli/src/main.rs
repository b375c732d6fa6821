use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mtp_stability::harness::{
    dump_replicate, parse_config, run_pipeline, HarnessError, PipelineConfig, Stage,
};
use mtp_stability::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Emit the threshold grid.
    Grid,
    /// Simulate the training set and estimate both error curves.
    Train,
    /// Match thresholds from the error curves.
    Equalize,
    /// Run matched procedures on the evaluation set.
    Evaluate,
    /// Comparison statistics and scatter data from evaluated outcomes.
    Report,
    /// All stages in order.
    Run,
    /// Write one simulated replicate as delimited text.
    Dump,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Grid => Stage::Grid,
            Command::Train => Stage::Train,
            Command::Equalize => Stage::Equalize,
            Command::Evaluate => Stage::Evaluate,
            Command::Report => Stage::Report,
            Command::Run => Stage::Run,
            Command::Dump => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Fdr,
    Pfer,
}

/// Bonferroni vs Benjamini-Hochberg power and stability study.
#[derive(Debug, Parser)]
#[command(name = "mtpsim", version)]
struct Cli {
    /// Stage to run; defaults to `run`.
    #[arg(value_enum)]
    command: Option<Command>,

    /// Same as the positional stage.
    #[arg(long, value_enum)]
    stage: Option<Command>,

    /// TOML configuration document.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides run.output_dir; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (overrides run.workers).
    #[arg(long)]
    workers: Option<usize>,

    /// Equalizing error rate (overrides equalize.metric).
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,

    /// Replicate index for `dump`.
    #[arg(long, default_value_t = 0)]
    replicate: usize,

    /// Make `dump` draw from the control set instead of the training set.
    #[arg(long)]
    control: bool,
}

fn load(cli: &Cli) -> Result<PipelineConfig, HarnessError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(m) = cli.metric {
        cfg.metric = match m {
            MetricArg::Fdr => Metric::Fdr,
            MetricArg::Pfer => Metric::Pfer,
        };
    }
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(HarnessError::Usage("--workers must be at least 1".into()));
        }
        cfg.workers = w;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let command = match (cli.command, cli.stage) {
        (Some(a), Some(b)) if a != b => {
            return Err(HarnessError::Usage(format!(
                "positional stage {a:?} conflicts with --stage {b:?}"
            )))
        }
        (a, b) => a.or(b).unwrap_or(Command::Run),
    };
    let cfg = load(&cli)?;
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    match command.stage() {
        Some(stage) => run_pipeline(&cfg, stage, &dir),
        None => {
            let path = dump_replicate(&cfg, &dir, cli.control, cli.replicate)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (HarnessError::Config(_) | HarnessError::Usage(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
