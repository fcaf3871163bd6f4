use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use igm_core::bayes::PriorDocument;
use igm_harness::commands::{self, ClusterMethod, ModelSpec};
use igm_harness::dataset::{load_rankings, Format};
use igm_harness::experiment::{run_and_write, ExperimentConfig, ScaleName, SearcherName};
use igm_harness::{HarnessError, Result};
use serde::Serialize;

/// Infinite generalized Mallows models for top-t rankings.
#[derive(Parser)]
#[command(name = "igm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the central ordering and dispersion.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tokens")]
        format: Format,
        /// single, general, tied:R or bic.
        #[arg(long, default_value = "single")]
        model: ModelSpec,
        /// bbound, greedy, sortrows or auto.
        #[arg(long, default_value = "auto")]
        searcher: SearcherName,
        #[arg(long)]
        node_budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw top-t orderings from a model.
    Sample {
        /// One value for constant θ or a comma-separated vector; `ln2` style
        /// values are accepted.
        #[arg(long)]
        theta: String,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Center on a random ordering of 1..=M instead of the identity.
        #[arg(long)]
        universe: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consensus ordering of a set of rankings.
    Consensus {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tokens")]
        format: Format,
        #[arg(long, default_value = "auto")]
        searcher: SearcherName,
        #[arg(long)]
        node_budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster rankings.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tokens")]
        format: Format,
        /// ebms, kmeans:K or em:K.
        #[arg(long, default_value = "ebms")]
        method: ClusterMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Kernel scale for ebms: literal, count_weighted or a fixed θ.
        #[arg(long, default_value = "literal")]
        scale: ScaleName,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conjugate posterior update.
    Posterior {
        /// Prior as JSON.
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tokens")]
        format: Format,
        /// Also draw θ from its conditional posterior with this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a replicated experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    emit_text(&(text + "\n"), out)
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(HarnessError::io(path)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(HarnessError::io("<stdout>"))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            input,
            format,
            model,
            searcher,
            node_budget,
            out,
        } => {
            let ds = load_rankings(&input, format)?;
            let report = commands::fit(&ds, model, searcher.searcher(node_budget))?;
            emit(&report, out.as_deref())
        }
        Command::Sample {
            theta,
            t,
            n,
            seed,
            universe,
            out,
        } => {
            let theta = commands::parse_theta_list(&theta)?;
            let ds = commands::sample_dataset(&theta, t, n, seed, universe)?;
            emit_text(&ds.to_text(Format::Ids), out.as_deref())
        }
        Command::Consensus {
            input,
            format,
            searcher,
            node_budget,
            out,
        } => {
            let ds = load_rankings(&input, format)?;
            emit(&commands::consensus(&ds, searcher.searcher(node_budget))?, out.as_deref())
        }
        Command::Cluster {
            input,
            format,
            method,
            seed,
            scale,
            out,
        } => {
            let ds = load_rankings(&input, format)?;
            emit(&commands::cluster(&ds, method, seed, scale)?, out.as_deref())
        }
        Command::Posterior {
            prior,
            input,
            format,
            seed,
            out,
        } => {
            let text = std::fs::read_to_string(&prior).map_err(HarnessError::io(&prior))?;
            let doc: PriorDocument = serde_json::from_str(&text)?;
            let ds = load_rankings(&input, format)?;
            emit(&commands::posterior(&doc, &ds, seed)?, out.as_deref())
        }
        Command::Experiment { config } => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let report = run_and_write(&cfg)?;
            emit(&report.summary_json(), None)
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
}

fn report_error(kind: &str, message: String, line: Option<usize>) {
    let body = serde_json::json!({ "error": ErrorBody { kind, message, line } });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("IGM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("usage", e.kind().to_string(), None);
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.kind(), e.to_string(), e.line());
            ExitCode::FAILURE
        }
    }
}
