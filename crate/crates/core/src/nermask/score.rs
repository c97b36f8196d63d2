use std::collections::HashSet;

use super::EntitySpan;
use crate::metrics::Prf;

/// Span-level precision/recall/F1 with exact boundary matching.
///
/// With `class_agnostic` a predicted span matches a gold span on boundaries
/// alone; otherwise the class must agree too.
pub fn score_spans(gold: &[EntitySpan], pred: &[EntitySpan], class_agnostic: bool) -> Prf {
    let key = |s: &EntitySpan| (s.start, s.end, (!class_agnostic).then_some(s.class));
    let gold: HashSet<_> = gold.iter().map(key).collect();
    let pred: HashSet<_> = pred.iter().map(key).collect();
    let true_pos = gold.intersection(&pred).count();
    Prf::from_counts(true_pos, pred.len(), gold.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nermask::EntityClass::{self, *};
    use proptest::prelude::*;

    fn s(start: usize, end: usize, c: EntityClass) -> EntitySpan {
        EntitySpan::new(start, end, c)
    }

    #[test]
    fn perfect_and_empty() {
        let gold = [s(0, 4, Per), s(6, 9, Loc)];
        assert_eq!(score_spans(&gold, &gold, false), Prf::perfect());
        let p = score_spans(&[s(0, 1, Per), s(2, 3, Per), s(4, 5, Per), s(6, 7, Per)], &[], false);
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
        assert_eq!(score_spans(&[], &[], true), Prf::perfect());
    }

    #[test]
    fn hand_counted_confusion() {
        // gold 4, pred 3, two exact boundary matches (one with a class clash).
        let gold = [s(0, 4, Per), s(10, 15, Loc), s(20, 25, Org), s(30, 31, Misc)];
        let pred = [s(0, 4, Per), s(10, 15, Org), s(21, 25, Org)];
        let p = score_spans(&gold, &pred, true);
        assert!((p.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.recall - 0.5).abs() < 1e-12);
        assert!((p.f1 - 4.0 / 7.0).abs() < 1e-12);

        let strict = score_spans(&gold, &pred, false);
        assert!((strict.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((strict.recall - 0.25).abs() < 1e-12);
    }

    fn arb_spans() -> impl Strategy<Value = Vec<EntitySpan>> {
        prop::collection::vec((0usize..3, 1usize..3, 0usize..4), 0..8).prop_map(|v| {
            let mut pos = 0;
            v.into_iter()
                .map(|(gap, len, c)| {
                    let start = pos + gap;
                    pos = start + len;
                    s(start, pos, EntityClass::ALL[c])
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn swapping_gold_and_pred_swaps_p_and_r(g in arb_spans(), p in arb_spans(), agn: bool) {
            let a = score_spans(&g, &p, agn);
            let b = score_spans(&p, &g, agn);
            prop_assert_eq!(a.precision, b.recall);
            prop_assert_eq!(a.recall, b.precision);
            prop_assert!((a.f1 - b.f1).abs() < 1e-12);
        }
    }
}
