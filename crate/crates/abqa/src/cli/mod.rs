//! Command-line front end. Subcommands cover the full pipeline: candidate
//! extraction, alignment and matcher training, assertion ranking, assertion
//! generation, and answer-sentence selection.
//!
//! Configuration is flat key=value: defaults, then `--config FILE`, then
//! repeated `--set KEY=VALUE`, then dedicated flags, each layer overriding
//! the last. Every command writes a manifest of input hashes and metrics
//! next to its output.

mod config;
mod run;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use run::{load_cdssm, load_context, load_generator, load_rnn, Manifest};

use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "abqa", version, about = "Assertion-based question answering pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file of KEY=VALUE lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Single KEY=VALUE override; may be repeated.
    #[arg(long, value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Random seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Manifest path; defaults to OUT.manifest, or abqa.manifest for
    /// commands without an output file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract assertion candidates from parsed passages.
    Extract {
        /// Input instances, one JSON object per line.
        data: PathBuf,
        /// Output path for instances with candidates filled in.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a word translation table on "source ||| target" pairs.
    TrainAlign {
        corpus: PathBuf,
        /// EM iterations; overrides the em_iters key.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also build a phrase table and write it here.
        #[arg(long)]
        phrase_out: Option<PathBuf>,
    },
    /// Train a neural matcher on "question ||| positive ||| negative" lines.
    TrainMatchers {
        triples: PathBuf,
        /// Which matcher to train: cnn or rnn.
        #[arg(long)]
        model: String,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the assertion ranker on labeled candidates.
    TrainRanker {
        data: PathBuf,
        /// Comma-separated feature names; overrides the features key.
        #[arg(long)]
        features: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank candidates with a trained forest; writes id, rank, score,
    /// and the rendered assertion per line.
    Rank {
        model: PathBuf,
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the assertion generator on instances with correct candidates.
    TrainGen {
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode one assertion per instance; writes id and the rendered
    /// assertion, blank when decoding is incomplete.
    Generate {
        ckpt: PathBuf,
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score decoded assertions against correct candidates with BLEU-4.
    EvalGen { ckpt: PathBuf, data: PathBuf },
    /// Train and evaluate answer-sentence selection; always reports the
    /// baseline, plus the chosen assertion strategy when it is not
    /// baseline itself.
    Pbqa {
        /// baseline, rnd, max, ext, or gen.
        strategy: String,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
}

fn build_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(&common.set)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn manifest_path(common: &Common, out: Option<&PathBuf>) -> PathBuf {
    if let Some(path) = &common.manifest {
        return path.clone();
    }
    match out {
        Some(out) => {
            let mut name = out.as_os_str().to_owned();
            name.push(".manifest");
            PathBuf::from(name)
        }
        None => PathBuf::from("abqa.manifest"),
    }
}

fn run_command(cli: &Cli) -> Result<()> {
    let cfg = build_config(&cli.common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Extract { data, out } => {
            run::cmd_extract(&cfg, data, out, &manifest_path(&cli.common, Some(out)))
        }
        Command::TrainAlign {
            corpus,
            iters,
            out,
            phrase_out,
        } => run::cmd_train_align(
            &cfg,
            corpus,
            *iters,
            out,
            phrase_out.as_deref(),
            &manifest_path(&cli.common, Some(out)),
        ),
        Command::TrainMatchers {
            triples,
            model,
            epochs,
            margin,
            out,
        } => run::cmd_train_matchers(
            &cfg,
            triples,
            model,
            *epochs,
            *margin,
            out,
            &manifest_path(&cli.common, Some(out)),
        ),
        Command::TrainRanker { data, features, out } => run::cmd_train_ranker(
            &cfg,
            features.as_deref(),
            data,
            out,
            &manifest_path(&cli.common, Some(out)),
        ),
        Command::Rank { model, data, out } => {
            run::cmd_rank(&cfg, model, data, out, &manifest_path(&cli.common, Some(out)))
        }
        Command::TrainGen { data, out } => {
            run::cmd_train_gen(&cfg, data, out, &manifest_path(&cli.common, Some(out)))
        }
        Command::Generate { ckpt, data, out } => {
            run::cmd_generate(&cfg, ckpt, data, out, &manifest_path(&cli.common, Some(out)))
        }
        Command::EvalGen { ckpt, data } => {
            run::cmd_eval_gen(&cfg, ckpt, data, &manifest_path(&cli.common, None))
        }
        Command::Pbqa { strategy, train, test } => {
            run::cmd_pbqa(&cfg, strategy, train, test, &manifest_path(&cli.common, None))
        }
    })
}

/// Parses argv (including the program name) and runs the command.
/// Returns the process exit code: 0 on success, 1 for usage and
/// configuration errors, 2 for data, I/O, and model errors.
pub fn dispatch(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run_command(&cli) {
        Ok(()) => 0,
        Err(Error::Config(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
