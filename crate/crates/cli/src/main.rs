use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use semauto_cli::commands::{self, UserSelection};
use semauto_cli::manifest::RunManifest;
use semauto_core::study::PreferenceModel;
use semauto_core::{KgMode, StyleTag, UserId};
use tracing_subscriber::EnvFilter;

/// Knowledge-graph autoencoder recommender with explanations.
///
/// Log level comes from SEMAUTO_LOG (e.g. `debug`, `semauto=trace`).
#[derive(Parser)]
#[command(name = "semauto", version)]
struct Cli {
    /// Run manifest (TOML).
    #[arg(short, long, global = true, default_value = "semauto.toml", env = "SEMAUTO_MANIFEST")]
    manifest: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `paths.triples`.
    #[arg(long, global = true)]
    triples: Option<PathBuf>,
    /// Overrides `paths.ratings`.
    #[arg(long, global = true)]
    ratings: Option<PathBuf>,
    /// Overrides `paths.mapping`.
    #[arg(long, global = true)]
    mapping: Option<PathBuf>,
    /// Overrides `kg.mode` (semantic, factual or both).
    #[arg(long, global = true)]
    kg_mode: Option<KgMode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the item-feature mask and feature index.
    Build,
    /// Train one autoencoder per user; write models and profiles.
    Train {
        /// `all` or a comma-separated list of user ids.
        #[arg(long, default_value = "all")]
        users: UserSelection,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Print and store a user's top-N list.
    Recommend {
        #[arg(long)]
        user: u32,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Explain a user's top two recommendations.
    Explain {
        #[arg(long)]
        user: u32,
        /// popularity, non_personalized, pointwise or pairwise; default: the manifest's styles.
        #[arg(long, value_parser = parse_style)]
        style: Option<StyleTag>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run a synthetic cohort through the study and report on it.
    Simulate {
        #[arg(long)]
        per_arm: Option<usize>,
        /// affinity or pro_personalized.
        #[arg(long)]
        model: Option<PreferenceModel>,
        /// Comma-separated `style/mode` arms.
        #[arg(long, value_delimiter = ',')]
        arms: Vec<String>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Rebuild the metrics report from the study event log.
    Report {
        /// Comma-separated `style/mode` arms; arms found only in the log are appended.
        #[arg(long, value_delimiter = ',')]
        arms: Vec<String>,
    },
    /// Serve the study protocol over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_style(s: &str) -> Result<StyleTag, String> {
    s.parse().map_err(|e: semauto_core::explain::ExplainError| e.to_string())
}

fn load_manifest(cli: &Cli) -> Result<RunManifest> {
    let mut m = RunManifest::load(&cli.manifest)?;
    if let Some(p) = &cli.output_dir {
        m.output_dir = p.clone();
    }
    if let Some(s) = cli.seed {
        m.seed = s;
    }
    if let Some(p) = &cli.triples {
        m.paths.triples = Some(p.clone());
    }
    if let Some(p) = &cli.ratings {
        m.paths.ratings = Some(p.clone());
    }
    if let Some(p) = &cli.mapping {
        m.paths.mapping = Some(p.clone());
    }
    if let Some(mode) = cli.kg_mode {
        m.kg.mode = mode;
    }
    Ok(m)
}

fn run(cli: Cli) -> Result<()> {
    let mut m = load_manifest(&cli)?;
    match cli.command {
        Command::Build => {
            let s = commands::build(&m)?;
            println!("rows={} cols={} nnz={}", s.rows, s.cols, s.nnz);
        }
        Command::Train { users, jobs, epochs, learning_rate } => {
            if let Some(e) = epochs {
                m.train.epochs = e;
            }
            if let Some(lr) = learning_rate {
                m.train.learning_rate = lr;
            }
            m.validate()?;
            let s = commands::train(&m, &users, jobs)?;
            println!(
                "trained {} users, skipped {}; models in {}",
                s.trained.len(),
                s.skipped.len(),
                m.output_dir.join("models").display()
            );
        }
        Command::Recommend { user, n } => {
            let art = commands::load_artifacts(&m)?;
            let list = commands::recommend_user(&m, &art, UserId(user), n.unwrap_or(m.n))?;
            for (rank, s) in list.items.iter().enumerate() {
                let title = art.catalog.title(s.item).unwrap_or("");
                println!("{}\t{}\t{:.6}\t{title}", rank + 1, s.item, s.score);
            }
            if list.short {
                eprintln!("note: only {} unrated items available", list.items.len());
            }
        }
        Command::Explain { user, style, k } => {
            let art = commands::load_artifacts(&m)?;
            let styles = style.map_or_else(|| m.styles.clone(), |s| vec![s]);
            let (list, bundles) = commands::explain_user(&m, &art, UserId(user), &styles, k.unwrap_or(m.k))?;
            for (rank, s) in list.items.iter().enumerate() {
                println!("{}. {}", rank + 1, art.catalog.title(s.item).unwrap_or(""));
            }
            for b in bundles {
                println!("\n[{}]\n{}", b.style.tag, b.rendered);
            }
        }
        Command::Simulate { per_arm, model, arms, jobs } => {
            if !arms.is_empty() {
                m.study.arms = arms;
            }
            let report = commands::simulate(
                &m,
                per_arm.unwrap_or(m.study.per_arm),
                model.unwrap_or(m.study.preference),
                jobs,
            )?;
            print!("{}", commands::format_report(&report));
            println!("report written to {}", m.output_dir.join(commands::REPORT_FILE).display());
        }
        Command::Report { arms } => {
            if !arms.is_empty() {
                m.study.arms = arms;
            }
            let report = commands::report(&m)?;
            print!("{}", commands::format_report(&report));
            println!("report written to {}", m.output_dir.join(commands::REPORT_FILE).display());
        }
        Command::Serve { bind } => {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().context("starting runtime")?;
            rt.block_on(semauto_cli::run_server(&m, &bind))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("SEMAUTO_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
