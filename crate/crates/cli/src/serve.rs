use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use ndv_core::backend::BackendSpec;
use ndv_core::pipeline::PipelineConfig;
use ndv_service::{serve, AppState, Loaded};

#[derive(Args)]
pub struct ServeArgs {
    /// Corpus stores, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    stores: Vec<PathBuf>,
    /// Articles behind the stores (JSONL), for snippets and lookup.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    ner_backend: Option<BackendSpec>,
    #[arg(long)]
    embed_backend: Option<BackendSpec>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

/// Binds first, then loads; `/health` answers 503 until loading finishes.
/// A load failure stops the server.
pub fn run(mut config: PipelineConfig, args: ServeArgs) -> Result<()> {
    if let Some(b) = args.ner_backend {
        config.ner_backend = b;
    }
    if let Some(b) = args.embed_backend {
        config.embed_backend = b;
    }
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .context("bad --host/--port")?;

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        tracing::info!(%addr, "listening");
        let state = AppState::empty();
        let (stores, corpus) = (args.stores, args.corpus);
        let loader = tokio::task::spawn_blocking(move || Loaded::open(config, &stores, &corpus));
        let server = tokio::spawn(serve(listener, state.clone(), async {
            let _ = tokio::signal::ctrl_c().await;
        }));

        let loaded = loader.await?.context("loading index")?;
        tracing::info!(
            total = loaded.index().total(),
            dim = loaded.index().dim(),
            "index loaded"
        );
        state.install(loaded);
        server.await??;
        Ok(())
    })
}
