//! Attachment accuracy: overall, punctuation-excluded, and broken down by
//! the dependent's gold POS tag. Punctuation is whatever carries the "."
//! tag; forms are never consulted.

use std::collections::BTreeMap;

use crate::conll::{Treebank, Upos};
use crate::error::{Error, Result};

fn check_shapes(gold: &Treebank, pred: &Treebank) -> Result<()> {
    if gold.sentences.len() != pred.sentences.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} gold sentences vs {} predicted",
            gold.sentences.len(),
            pred.sentences.len()
        )));
    }
    for (i, (g, p)) in gold.sentences.iter().zip(&pred.sentences).enumerate() {
        if g.len() != p.len() {
            return Err(Error::ShapeMismatch(format!(
                "sentence {}: {} gold tokens vs {} predicted",
                i + 1,
                g.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

fn counts(gold: &Treebank, pred: &Treebank, keep: impl Fn(Upos) -> bool) -> Result<(usize, usize)> {
    check_shapes(gold, pred)?;
    let mut correct = 0;
    let mut total = 0;
    for (g, p) in gold.sentences.iter().zip(&pred.sentences) {
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            if keep(gt.upos) {
                total += 1;
                if gt.head == pt.head {
                    correct += 1;
                }
            }
        }
    }
    Ok((correct, total))
}

/// Fraction of tokens whose predicted head matches the gold head.
pub fn uas(gold: &Treebank, pred: &Treebank) -> Result<f64> {
    let (correct, total) = counts(gold, pred, |_| true)?;
    if total == 0 {
        return Err(Error::EmptyInput("no tokens to evaluate".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Attachment score over tokens whose gold tag is not punctuation.
pub fn uas_nonpunct(gold: &Treebank, pred: &Treebank) -> Result<f64> {
    let (correct, total) = counts(gold, pred, |u| u != Upos::Punct)?;
    if total == 0 {
        return Err(Error::EmptyInput(
            "no non-punctuation tokens to evaluate".into(),
        ));
    }
    Ok(correct as f64 / total as f64)
}

/// Attachment accuracy per gold POS tag of the dependent. Tags absent
/// from the gold corpus are absent from the map.
pub fn per_pos_accuracy(gold: &Treebank, pred: &Treebank) -> Result<BTreeMap<Upos, f64>> {
    check_shapes(gold, pred)?;
    let mut correct: BTreeMap<Upos, usize> = BTreeMap::new();
    let mut total: BTreeMap<Upos, usize> = BTreeMap::new();
    for (g, p) in gold.sentences.iter().zip(&pred.sentences) {
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            *total.entry(gt.upos).or_insert(0) += 1;
            if gt.head == pt.head {
                *correct.entry(gt.upos).or_insert(0) += 1;
            }
        }
    }
    Ok(total
        .into_iter()
        .map(|(u, t)| {
            let c = correct.get(&u).copied().unwrap_or(0);
            (u, c as f64 / t as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::Sentence;
    use crate::conll::Upos::*;
    use proptest::prelude::*;

    fn bank(sentences: Vec<Sentence>) -> Treebank {
        Treebank::new("xx", sentences)
    }

    fn sent(pairs: &[(Upos, usize)]) -> Sentence {
        Sentence::from_tag_heads(pairs)
    }

    #[test]
    fn identical_treebanks_score_one() {
        let g = bank(vec![sent(&[(Noun, 2), (Verb, 0), (Punct, 2)])]);
        assert_eq!(uas(&g, &g).unwrap(), 1.0);
        assert_eq!(uas_nonpunct(&g, &g).unwrap(), 1.0);
        for (_, acc) in per_pos_accuracy(&g, &g).unwrap() {
            assert_eq!(acc, 1.0);
        }
    }

    #[test]
    fn all_wrong_scores_zero() {
        let g = bank(vec![sent(&[(Noun, 2), (Verb, 0)])]);
        let p = bank(vec![sent(&[(Noun, 0), (Verb, 1)])]);
        assert_eq!(uas(&g, &p).unwrap(), 0.0);
    }

    #[test]
    fn half_right_is_half() {
        let g = bank(vec![sent(&[(Noun, 2), (Verb, 0), (Det, 1), (Noun, 1)])]);
        let p = bank(vec![sent(&[(Noun, 2), (Verb, 0), (Det, 2), (Noun, 2)])]);
        assert_eq!(uas(&g, &p).unwrap(), 0.5);
    }

    #[test]
    fn punctuation_is_excluded_by_tag() {
        let g = bank(vec![sent(&[
            (Pron, 2),
            (Verb, 0),
            (Det, 4),
            (Noun, 2),
            (Punct, 2),
        ])]);
        let mut wrong = g.clone();
        wrong.sentences[0].tokens[4].head = 0;
        assert_eq!(uas(&g, &wrong).unwrap(), 0.8);
        assert_eq!(uas_nonpunct(&g, &wrong).unwrap(), 1.0);
    }

    #[test]
    fn all_punctuation_has_no_nonpunct_score() {
        let g = bank(vec![sent(&[(Punct, 0), (Punct, 1)])]);
        assert!(matches!(uas_nonpunct(&g, &g), Err(Error::EmptyInput(_))));
        assert_eq!(uas(&g, &g).unwrap(), 1.0);
    }

    #[test]
    fn per_pos_isolates_the_failing_tag() {
        let g = bank(vec![sent(&[(Det, 2), (Noun, 3), (Verb, 0), (Det, 2)])]);
        let mut p = g.clone();
        p.sentences[0].tokens[0].head = 3;
        p.sentences[0].tokens[3].head = 3;
        let acc = per_pos_accuracy(&g, &p).unwrap();
        assert_eq!(acc[&Det], 0.0);
        assert_eq!(acc[&Noun], 1.0);
        assert_eq!(acc[&Verb], 1.0);
        assert!(!acc.contains_key(&Adj));
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let g = bank(vec![sent(&[(Noun, 0)])]);
        let p1 = bank(vec![]);
        assert!(matches!(uas(&g, &p1), Err(Error::ShapeMismatch(_))));
        let p2 = bank(vec![sent(&[(Noun, 0), (Verb, 1)])]);
        assert!(matches!(uas(&g, &p2), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn empty_treebanks_cannot_be_scored() {
        let g = bank(vec![]);
        assert!(matches!(uas(&g, &g), Err(Error::EmptyInput(_))));
    }

    prop_compose! {
        fn arb_pair()(n in 1usize..6)(
            tags in proptest::collection::vec(0usize..12, n),
            gold_picks in proptest::collection::vec(0usize..50, n),
            pred_picks in proptest::collection::vec(0usize..50, n),
        ) -> (Sentence, Sentence) {
            let mk = |picks: &[usize]| {
                let pairs: Vec<(Upos, usize)> = picks
                    .iter()
                    .zip(&tags)
                    .enumerate()
                    .map(|(i, (&p, &t))| (Upos::ALL[t], p % (i + 1)))
                    .collect();
                Sentence::from_tag_heads(&pairs)
            };
            (mk(&gold_picks), mk(&pred_picks))
        }
    }

    proptest! {
        #[test]
        fn uas_is_a_token_weighted_mean(pairs in proptest::collection::vec(arb_pair(), 1..6)) {
            let gold = bank(pairs.iter().map(|(g, _)| g.clone()).collect());
            let pred = bank(pairs.iter().map(|(_, p)| p.clone()).collect());
            let overall = uas(&gold, &pred).unwrap();
            prop_assert!((0.0..=1.0).contains(&overall));
            let mut acc = 0.0;
            for (g, p) in &pairs {
                let s = uas(&bank(vec![g.clone()]), &bank(vec![p.clone()])).unwrap();
                acc += s * g.len() as f64;
            }
            let expect = acc / gold.token_count() as f64;
            prop_assert!((overall - expect).abs() < 1e-12);

            // reordering gold and pred together leaves the score alone
            let gold_rev = bank(gold.sentences.iter().rev().cloned().collect());
            let pred_rev = bank(pred.sentences.iter().rev().cloned().collect());
            prop_assert_eq!(uas(&gold_rev, &pred_rev).unwrap(), overall);
        }
    }
}
