//! Precision / recall / F1 bookkeeping shared by span scoring and pairwise
//! evaluation.

use serde::{Deserialize, Serialize};

/// A precision/recall/F1 triple, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Builds the triple from precision and recall; F1 is the harmonic mean,
    /// or 0 when both are 0.
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }

    /// Builds the triple from confusion counts.
    ///
    /// Degenerate cases: with no predictions and no gold items the result is
    /// a perfect score; with exactly one side empty the empty side's ratio is 0
    /// (and so is the other one, since there can be no true positives).
    pub fn from_counts(true_pos: usize, n_pred: usize, n_gold: usize) -> Self {
        debug_assert!(true_pos <= n_pred && true_pos <= n_gold);
        if n_pred == 0 && n_gold == 0 {
            return Self::perfect();
        }
        let precision = ratio(true_pos, n_pred);
        let recall = ratio(true_pos, n_gold);
        Self::from_pr(precision, recall)
    }

    pub fn perfect() -> Self {
        Self {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
