//! Evaluation arithmetic and data-construction procedures: F1 from P/R,
//! pairwise same-story classification, positive-pair assembly, hard-negative
//! mining, split bookkeeping and topic-match annotation sheets.

mod f1;
mod mining;
mod pairs;
mod topic;

pub use crate::metrics::Prf;
pub use f1::f1_from_pr;
pub use mining::{mine_hard_negative, NegativeChoice, NegativePool, PoolMeta};
pub use pairs::{
    assemble_positive_pairs, assign_splits, pairwise_classify, pairwise_prf, pairwise_scores,
    select_threshold, split_counts, Label, PairExample, Split, SplitCounts, StoryGroup,
};
pub use topic::{
    export_annotation_sheet, read_annotation_sheet, topic_match_rate, SheetRow, TopicAnnotation,
    SHEET_COLUMNS,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("dimension mismatch in pair {pair}: {a} vs {b}")]
    DimMismatch { pair: usize, a: usize, b: usize },
    #[error("length mismatch: {pred} predictions for {gold} gold labels")]
    Shape { pred: usize, gold: usize },
    #[error("anchor {0:?} is not in the pool")]
    UnknownAnchor(String),
    #[error("no legal negative exists for anchor {0:?}")]
    NoNegativeAvailable(String),
    #[error("pool has {ids} ids but {meta} metadata entries")]
    PoolShape { ids: usize, meta: usize },
    #[error("annotation list is empty")]
    EmptyAnnotations,
    #[error("annotation sheet row {row}: {reason}")]
    Sheet { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
