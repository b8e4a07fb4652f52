//! The `sugmine` command line.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toml::Value;

use self::commands::Context;
use self::config::{resolve, Overrides, ScalarKind};
use self::manifest::RunManifest;
use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "sugmine", version, about = "Suggestion mining from review sentences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat config file of dotted keys (TOML syntax).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Labeled sentences, `label<TAB>text` per line.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Unlabeled sentences, one per line.
    #[arg(long, global = true)]
    pub unlabeled: Option<PathBuf>,
    /// Keep at most this many unlabeled sentences.
    #[arg(long, global = true)]
    pub limit: Option<usize>,
    /// Word vectors, `token v1 ... vN` per line.
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Parse fixture file (JSON lines) used as the parser backend.
    #[arg(long, global = true)]
    pub annotations: Option<PathBuf>,
    /// External parser command reading sentences on stdin.
    #[arg(long, global = true)]
    pub parser_cmd: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Root seed (defaults to the config value).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of cross-validation folds.
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Model variant: `hybrid`, `cnn_only`, `lstm_only`, `lstm_attention` or an ablation.
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// Folds trained in parallel.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Trained model directory (predict).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Sentences to classify, one per line (predict).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Override any config key, e.g. `--set model.lstm_hidden=32`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Class counts and imbalance ratio.
    Stats,
    /// Write stratified fold id lists.
    Folds,
    /// Train one model with early stopping.
    Train,
    /// Train with self-training on an unlabeled pool.
    Selftrain,
    /// k-fold cross-validation report.
    Evaluate,
    /// Cross-validate the ablated variants.
    Ablate,
    /// Classify sentences with a trained model.
    Predict,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::Folds => "folds",
            Command::Train => "train",
            Command::Selftrain => "selftrain",
            Command::Evaluate => "evaluate",
            Command::Ablate => "ablate",
            Command::Predict => "predict",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration: exit 2.
    Usage(String),
    /// Failure while running: exit 1.
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

fn flag_overrides(cli: &Cli) -> Overrides {
    let path = |p: &PathBuf| Value::String(p.display().to_string());
    let mut o: Overrides = Vec::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            o.push((k.to_string(), v));
        }
    };
    put("data.labeled", cli.data.as_ref().map(path));
    put("data.unlabeled", cli.unlabeled.as_ref().map(path));
    put("data.unlabeled_limit", cli.limit.map(|n| Value::Integer(n as i64)));
    put("data.embeddings", cli.embeddings.as_ref().map(path));
    put("data.annotations", cli.annotations.as_ref().map(path));
    put("data.parser_cmd", cli.parser_cmd.clone().map(Value::String));
    put("out", cli.out.as_ref().map(path));
    put("seed", cli.seed.map(|s| Value::Integer(s as i64)));
    put("eval.folds", cli.folds.map(|k| Value::Integer(k as i64)));
    put("eval.jobs", cli.jobs.map(|j| Value::Integer(j as i64)));
    put("model.variant", cli.variant.clone().map(Value::String));
    o
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = resolve(cli.config.as_deref(), &cli.set, flag_overrides(&cli))
        .map_err(|e| CliError::Usage(e.0))?;
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let mut ctx = Context {
        manifest: RunManifest::start(cli.command.name(), &config),
        config,
        model_dir: cli.model.clone(),
        input: cli.input.clone(),
    };
    if let Some(dir) = &ctx.model_dir {
        if cli.command == Command::Predict {
            let scalar = commands::checkpoint_scalar(&dir.join(commands::MODEL_FILE))?;
            ctx.config.scalar = if scalar == "f64" { ScalarKind::F64 } else { ScalarKind::F32 };
        }
    }
    macro_rules! typed {
        ($f:ident) => {
            match ctx.config.scalar {
                ScalarKind::F32 => commands::$f::<f32>(&mut ctx),
                ScalarKind::F64 => commands::$f::<f64>(&mut ctx),
            }
        };
    }
    match cli.command {
        Command::Stats => commands::stats(&mut ctx),
        Command::Folds => commands::folds(&mut ctx),
        Command::Train => typed!(train),
        Command::Selftrain => typed!(selftrain),
        Command::Evaluate => typed!(evaluate),
        Command::Ablate => typed!(ablate),
        Command::Predict => typed!(predict),
    }?;
    let out = ctx.config.out.clone();
    ctx.manifest.config = ctx.config.clone();
    ctx.manifest.write(&out)?;
    Ok(())
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
