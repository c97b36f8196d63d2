use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ndv_core::backend::BackendSpec;
use ndv_core::corpus::{toy, write_articles_jsonl};
use ndv_core::jsonl::read_jsonl;
use ndv_core::nermask::{entity_type_shares, AnnotatedArticle};
use ndv_core::pipeline::{stages, Pipeline, PipelineConfig};

mod eval;
mod serve;

#[derive(Parser)]
#[command(name = "ndv", version, about = "Entity-masked story search over historical newspapers")]
struct Cli {
    /// Pipeline config file (.toml, otherwise JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Copy the articles selected by a corpus spec into <out>/corpus.jsonl.
    Download {
        /// `dataset:years:states`, e.g. `american stories:1900-1910:Ohio,Iowa`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tag entities in a corpus file.
    Ner {
        #[command(flatten)]
        io: InOut,
        /// `stub` or an http(s) URL.
        #[arg(long)]
        backend: Option<BackendSpec>,
    },
    /// Replace tagged entities with [MASK].
    Mask {
        #[command(flatten)]
        io: InOut,
    },
    /// Embed a masked corpus into a store file.
    Embed {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        backend: Option<BackendSpec>,
        #[arg(long)]
        max_chars: Option<usize>,
    },
    /// Tag, mask and embed a corpus file in one pass.
    MaskAndEmbed {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        ner_backend: Option<BackendSpec>,
        #[arg(long)]
        embed_backend: Option<BackendSpec>,
        #[arg(long)]
        max_chars: Option<usize>,
    },
    /// Exact top-k search of a query store against corpus stores.
    Search {
        /// Corpus stores, comma-separated; rows are numbered in this order.
        #[arg(long, value_delimiter = ',', required = true)]
        store: Vec<PathBuf>,
        #[arg(long)]
        query_store: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mask and embed query articles, then search corpus stores.
    SearchNearestStory {
        /// Query articles (JSONL).
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        store: Vec<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-year entity-token shares of a tagged corpus, as JSON lines.
    EntityShares {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write a deterministic synthetic corpus.
    ToyCorpus {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the search API.
    Serve(serve::ServeArgs),
    /// Evaluation arithmetic and annotation-sheet tools.
    #[command(subcommand)]
    Eval(eval::EvalCommand),
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: PipelineConfig = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    Ok(config)
}

fn pipeline(config: PipelineConfig) -> Result<Pipeline> {
    Ok(Pipeline::from_config(config)?)
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let mut config = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Err(e) = config.validate() {
        bail!("invalid config: {e}");
    }

    match cli.command {
        Command::Download { spec, manifest, out } => {
            let rep = stages::download(&spec, &manifest, &out)?;
            for f in &rep.files {
                tracing::info!(file = %f.path.display(), valid = f.valid, invalid = f.invalid, "read");
            }
            println!("{} articles -> {}", rep.articles, rep.output.display());
        }
        Command::Ner { io, backend } => {
            if let Some(b) = backend {
                config.ner_backend = b;
            }
            let n = stages::ner(&pipeline(config)?, &io.input, &io.output)?;
            println!("{n} articles tagged -> {}", io.output.display());
        }
        Command::Mask { io } => {
            let n = stages::mask(&io.input, &io.output)?;
            println!("{n} articles masked -> {}", io.output.display());
        }
        Command::Embed { io, backend, max_chars } => {
            if let Some(b) = backend {
                config.embed_backend = b;
            }
            config.max_chars = max_chars.or(config.max_chars);
            let n = stages::embed(&pipeline(config)?, &io.input, &io.output)?;
            println!("{n} vectors -> {}", io.output.display());
        }
        Command::MaskAndEmbed { io, ner_backend, embed_backend, max_chars } => {
            if let Some(b) = ner_backend {
                config.ner_backend = b;
            }
            if let Some(b) = embed_backend {
                config.embed_backend = b;
            }
            config.max_chars = max_chars.or(config.max_chars);
            let n = stages::mask_and_embed(&pipeline(config)?, &io.input, &io.output)?;
            println!("{n} vectors -> {}", io.output.display());
        }
        Command::Search { store, query_store, k, out } => {
            let n = stages::search(&store, &query_store, k.unwrap_or(config.k), &out)?;
            println!("{n} hits -> {}", out.display());
        }
        Command::SearchNearestStory { queries, store, k, out } => {
            let k = k.unwrap_or(config.k);
            let n = stages::search_nearest_story(&pipeline(config)?, &queries, &store, k, &out)?;
            println!("{n} hits -> {}", out.display());
        }
        Command::EntityShares { input } => {
            let rows: Vec<AnnotatedArticle> = read_jsonl(&input)?;
            for y in entity_type_shares(&rows)? {
                println!("{}", serde_json::to_string(&y)?);
            }
        }
        Command::ToyCorpus { n, out } => {
            let articles = toy::generate(n, config.seed);
            write_articles_jsonl(&out, &articles)?;
            println!("{n} articles -> {}", out.display());
        }
        Command::Serve(args) => serve::run(config, args)?,
        Command::Eval(cmd) => eval::run(cmd)?,
    }
    Ok(())
}
