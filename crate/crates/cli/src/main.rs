use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evcoref::config::{RunConfig, Variant};
use evcoref::corpus::{load_corpus, CorpusFormat};
use evcoref::pipeline::{self, ScoreMode, SplitName, Workspace};
use evcoref::Error;

#[derive(Parser)]
#[command(name = "evcoref", version, about = "Event coreference: features, training, clustering and scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit feature models on the train split and write feature matrices.
    Features(RunArgs),
    /// Train the variant's network and save the best checkpoint.
    Train(RunArgs),
    /// Cluster a split and write its chains file.
    Cluster(RunArgs),
    /// Score a system chains file against gold chains.
    Score(ScoreArgs),
    /// Run features, train, cluster and score in sequence.
    Pipeline(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Split to cluster and score.
    #[arg(long, default_value = "test")]
    split: SplitName,
}

#[derive(Args)]
struct ScoreArgs {
    /// Gold chains; defaults to the config's gold file for --split.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// System chains; defaults to the config variant's chains for --split.
    #[arg(long)]
    sys: Option<PathBuf>,
    #[arg(long, default_value = "combined")]
    mode: ScoreMode,
    /// Corpus giving the document of each mention (within-doc mode).
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long, default_value = "test")]
    split: SplitName,
    /// Also write the tab-separated report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(args: &RunArgs) -> evcoref::Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    if args.tau.is_some() {
        cfg.cluster.tau = args.tau;
    }
    if args.delta.is_some() {
        cfg.cluster.delta = args.delta;
    }
    cfg.validate()?;
    log::info!("config {} (seed {})", cfg.hash(), cfg.seed());
    Ok(cfg)
}

fn score(args: &ScoreArgs) -> evcoref::Result<()> {
    let mut cfg = args.config.as_ref().map(RunConfig::load).transpose()?;
    if let (Some(c), Some(v)) = (cfg.as_mut(), args.variant) {
        c.variant = v;
    }
    let ws = cfg.as_ref().map(|c| Workspace::new(&c.paths.output_dir));
    let missing = |what: &str| Error::Config(format!("--{what} is required without --config"));
    let gold = match (&args.gold, &ws) {
        (Some(p), _) => p.clone(),
        (None, Some(ws)) => ws.gold(args.split),
        (None, None) => return Err(missing("gold")),
    };
    let sys = match (&args.sys, &ws, &cfg) {
        (Some(p), ..) => p.clone(),
        (None, Some(ws), Some(c)) => ws.chains(c.variant, args.split),
        _ => return Err(missing("sys")),
    };
    let corpus_path = args.corpus.clone().or_else(|| cfg.as_ref().map(|c| c.paths.corpus.clone()));
    let doc_of: Option<HashMap<String, String>> = match (args.mode, corpus_path) {
        (ScoreMode::WithinDoc, Some(p)) => Some(load_corpus(p, CorpusFormat::Lines)?.doc_of_mention()),
        _ => None,
    };
    let report = pipeline::cmd_score(&gold, &sys, args.mode, doc_of.as_ref())?;
    print!("{}", report.to_table());
    if let Some(out) = &args.out {
        let meta = [
            ("gold", gold.display().to_string()),
            ("sys", sys.display().to_string()),
            ("mode", args.mode.name().to_string()),
        ];
        pipeline::write_report(out, &report, &meta)?;
    }
    Ok(())
}

fn run(cli: Cli) -> evcoref::Result<()> {
    match cli.command {
        Command::Features(args) => {
            let metas = pipeline::cmd_features(&load_config(&args)?)?;
            for m in metas {
                println!("{}: {} mentions, {} features", m.split, m.mention_ids.len(), m.feature_dim);
            }
        }
        Command::Train(args) => {
            let s = pipeline::cmd_train(&load_config(&args)?)?;
            match s.validation {
                Some(v) => println!(
                    "best epoch {}: validation B3 F1 {:.3} at tau {:.3}",
                    s.best_epoch, v.b3_f1, v.tau
                ),
                None => println!("trained {} epochs", s.best_epoch),
            }
        }
        Command::Cluster(args) => {
            let s = pipeline::cmd_cluster(&load_config(&args)?, args.split)?;
            println!("{} chains -> {}", s.chains, s.path.display());
        }
        Command::Score(args) => score(&args)?,
        Command::Pipeline(args) => {
            let out = pipeline::run_pipeline(&load_config(&args)?, args.split)?;
            println!("combined\n{}", out.combined.to_table());
            println!("within-doc\n{}", out.within_doc.to_table());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::Sampler(_) => 3,
        Error::Shape(_) => 4,
        Error::MentionMismatch(_) => 5,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
