use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Subcommand;
use ndv_core::corpus::read_articles_jsonl;
use ndv_core::embed::read_store;
use ndv_core::evalkit::{
    export_annotation_sheet, f1_from_pr, mine_hard_negative, pairwise_prf, read_annotation_sheet,
    select_threshold, topic_match_rate, NegativePool, PoolMeta,
};
use ndv_core::jsonl::read_jsonl;
use ndv_core::pipeline::stages::HitRow;
use serde::Deserialize;
use serde_json::json;

#[derive(Subcommand)]
pub enum EvalCommand {
    /// F1 from precision and recall (fractions or percentages).
    F1 {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        r: f64,
    },
    /// Pairwise P/R/F1 of the positive class.
    ///
    /// Each file holds one label per line (true/false, 1/0, positive/negative).
    /// With --threshold, --pred holds cosine scores instead; with
    /// --select-threshold it holds validation scores and the best threshold
    /// is reported.
    Pairs {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, conflicts_with = "select_threshold")]
        threshold: Option<f32>,
        #[arg(long)]
        select_threshold: bool,
    },
    /// Hard negatives for anchor ids, as JSON lines.
    MineNegatives {
        /// Store holding every pool article.
        #[arg(long)]
        pool: PathBuf,
        /// JSON lines of {id, source, story_ids, topic_page_ids}.
        #[arg(long)]
        meta: PathBuf,
        /// One anchor id per line.
        #[arg(long)]
        anchors: PathBuf,
    },
    /// Share of annotated sheet rows marked on topic.
    TopicRate {
        #[arg(long)]
        sheet: PathBuf,
    },
    /// Blank annotation sheet (CSV) from a hits file.
    ExportSheet {
        #[arg(long)]
        hits: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Article files to take headlines from, comma-separated.
        #[arg(long, value_delimiter = ',')]
        articles: Vec<PathBuf>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
struct MetaRow {
    id: String,
    #[serde(flatten)]
    meta: PoolMeta,
}

fn lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn parse_label(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "positive" | "pos" => Some(true),
        "false" | "0" | "negative" | "neg" => Some(false),
        _ => None,
    }
}

fn labels(path: &Path) -> Result<Vec<bool>> {
    lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_label(l).with_context(|| format!("{}:{}: bad label {l:?}", path.display(), i + 1)))
        .collect()
}

fn scores(path: &Path) -> Result<Vec<f32>> {
    lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| l.parse().with_context(|| format!("{}:{}: bad score {l:?}", path.display(), i + 1)))
        .collect()
}

pub fn run(cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::F1 { p, r } => {
            println!("{}", json!({ "precision": p, "recall": r, "f1": f1_from_pr(p, r)? }));
        }
        EvalCommand::Pairs { pred, gold, threshold, select_threshold: select } => {
            let gold = labels(&gold)?;
            if select {
                let (t, prf) = select_threshold(&scores(&pred)?, &gold)?;
                println!("{}", json!({ "threshold": t, "prf": prf }));
            } else {
                let pred = match threshold {
                    Some(t) => scores(&pred)?.into_iter().map(|s| s >= t).collect(),
                    None => labels(&pred)?,
                };
                println!("{}", serde_json::to_string(&pairwise_prf(&pred, &gold)?)?);
            }
        }
        EvalCommand::MineNegatives { pool, meta, anchors } => {
            let store = read_store(&pool)?;
            let meta: HashMap<String, PoolMeta> = read_jsonl::<MetaRow>(&meta)?
                .into_iter()
                .map(|r| (r.id, r.meta))
                .collect();
            let pool = NegativePool::from_store(&store, &meta)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for anchor in lines(&anchors)? {
                let row = match mine_hard_negative(&pool, &anchor) {
                    Ok(c) => json!({
                        "anchor": anchor,
                        "negative": c.id,
                        "cosine": c.cosine,
                        "cross_source": c.cross_source,
                    }),
                    Err(e) => json!({ "anchor": anchor, "error": e.to_string() }),
                };
                writeln!(out, "{row}")?;
            }
        }
        EvalCommand::TopicRate { sheet } => {
            let rows = read_annotation_sheet(File::open(&sheet).with_context(|| format!("opening {}", sheet.display()))?)?;
            let anns = rows
                .iter()
                .enumerate()
                .map(|(i, r)| r.annotation(i + 1))
                .collect::<Result<Vec<_>, _>>()?;
            let on = anns.iter().filter(|a| a.on_topic).count();
            let rate = topic_match_rate(&anns)?;
            println!("{}", json!({ "rate": rate, "on_topic": on, "total": anns.len() }));
        }
        EvalCommand::ExportSheet { hits, k, articles, out } => {
            if k == 0 {
                bail!("k must be at least 1");
            }
            let hits: Vec<HitRow> = read_jsonl(&hits)?;
            let mut headlines = HashMap::new();
            for path in &articles {
                for a in read_articles_jsonl(path)? {
                    if let Some(h) = a.headline {
                        headlines.insert(a.id, h);
                    }
                }
            }
            let n = match &out {
                Some(p) => export_annotation_sheet(File::create(p)?, &hits, k, &headlines)?,
                None => export_annotation_sheet(std::io::stdout().lock(), &hits, k, &headlines)?,
            };
            if let Some(p) = out {
                eprintln!("{n} rows -> {}", p.display());
            }
        }
    }
    Ok(())
}
