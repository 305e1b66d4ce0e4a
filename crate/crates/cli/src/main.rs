//! `topicstream`: detect topics in a timestamped post stream.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use topicstream_core::evaluation::DEFAULT_MATCH_THRESHOLD;
use topicstream_core::runner::Method;
use topicstream_core::synth::SynthSpec;

use config::{KeyValues, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or configuration; nothing was run.
    #[error("{0}")]
    Usage(String),
    /// Input files that could not be read or parsed.
    #[error("{}", chain_text(.0))]
    Data(#[from] anyhow::Error),
}

/// The error and its causes, skipping causes already quoted by the message
/// above them.
fn chain_text(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "topicstream", version, about = "Topic detection over windowed post streams")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the n-gram, anchor-text and reference stores from a corpus.
    BuildBk {
        /// Whitespace-tokenised text files, one document per line.
        #[arg(long, required = true)]
        corpus: Vec<PathBuf>,
        /// Reference corpus for term weighting; defaults to the main corpus.
        #[arg(long)]
        reference: Vec<PathBuf>,
        /// Anchor texts as `phrase<TAB>count` lines.
        #[arg(long)]
        anchors: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long, env = "TOPICSTREAM_MODEL_DIR")]
        out: PathBuf,
    },
    /// Run one method over the stream and write its topics.
    Detect(RunArgs),
    /// Run one method over a grid of parameter values.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the best configuration found.
        #[arg(long)]
        best: Option<PathBuf>,
    },
    /// Score a topics file against a golden standard.
    Eval {
        #[arg(long)]
        topics: PathBuf,
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// The stream the topics came from; limits recall in each window to
        /// the classes its posts carry.
        #[arg(long)]
        posts: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
        threshold: f64,
        /// Metrics JSON; printed when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a labelled stream with planted topics.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// A `key = value` run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    posts: Option<PathBuf>,
    #[arg(long, env = "TOPICSTREAM_MODEL_DIR")]
    models: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides any configuration key, e.g. `--set param.damp=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn key_values(&self) -> Result<KeyValues, CliError> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::load(path)?,
            None => KeyValues::default(),
        };
        if let Some(m) = self.method {
            kv.set("method", m.name(), None);
        }
        for (key, path) in [("posts", &self.posts), ("models", &self.models), ("embeddings", &self.embeddings), ("out", &self.out)] {
            if let Some(p) = path {
                kv.set(key, &p.to_string_lossy(), None);
            }
        }
        for item in &self.overrides {
            kv.apply_override(item)?;
        }
        Ok(kv)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    posts_per_topic: Option<usize>,
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long)]
    noise_rate: Option<f64>,
    #[arg(long)]
    window_seconds: Option<i64>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    background_docs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SynthArgs {
    fn spec(&self) -> SynthSpec {
        let mut s = SynthSpec::default();
        s.topics = self.topics.unwrap_or(s.topics);
        s.posts_per_topic = self.posts_per_topic.unwrap_or(s.posts_per_topic);
        s.windows = self.windows.unwrap_or(s.windows);
        s.noise_rate = self.noise_rate.unwrap_or(s.noise_rate);
        s.window_seconds = self.window_seconds.unwrap_or(s.window_seconds);
        s.embedding_dim = self.embedding_dim.unwrap_or(s.embedding_dim);
        s.background_docs = self.background_docs.unwrap_or(s.background_docs);
        s.seed = self.seed.unwrap_or(s.seed);
        s
    }
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BuildBk { corpus, reference, anchors, n_max, out } => {
            let report = commands::build_bk(&commands::BuildArgs { corpus, reference, anchors, n_max, out: out.clone() })?;
            println!("{report}");
            println!("models written to {}", out.display());
        }
        Command::Detect(args) => {
            let cfg = RunConfig::from_key_values(&args.key_values()?)?;
            let (out, records) = commands::detect(&cfg)?;
            let topics: usize = records.iter().map(|r| r.topics.len()).sum();
            println!("{}: {} windows, {topics} topics written to {}", cfg.method, records.len(), out.display());
        }
        Command::Sweep { run, best } => {
            let kv = run.key_values()?;
            let cfg = RunConfig::from_key_values(&kv)?;
            let outcome = commands::sweep(&cfg)?;
            write_or_print(cfg.out.as_ref(), &outcome.csv)?;
            match outcome.best {
                Some((params, score)) => {
                    let shown: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    eprintln!("best: {} (score {score:.6})", shown.join(" "));
                    if let Some(path) = best {
                        write_or_print(Some(&path), &commands::best_config(&kv, &params))?;
                    }
                }
                None => return Err(CliError::Data(anyhow::anyhow!("every setting failed to produce a score"))),
            }
        }
        Command::Eval { topics, golden, catalog, posts, threshold, out } => {
            let report = commands::eval(&topics, &golden, &catalog, posts.as_deref(), threshold)?;
            let json = serde_json::to_string_pretty(&report).context("serialising metrics")? + "\n";
            write_or_print(out.as_ref(), &json)?;
            let m = &report.metrics;
            eprintln!(
                "P {:.4} R {:.4} F {:.4}{}",
                m.prf.precision,
                m.prf.recall,
                m.prf.f,
                m.fs.map(|f| format!(" MeanFS {:.4}", f.mean_fs)).unwrap_or_default()
            );
        }
        Command::Synth(args) => {
            let files = commands::synth(&args.spec(), &args.out)?;
            println!("stream written to {}", files.posts.display());
            println!(
                "next: topicstream build-bk --corpus {} --anchors {} --out {}",
                files.background.display(),
                files.anchors.display(),
                args.out.join("models").display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
