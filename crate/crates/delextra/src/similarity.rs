//! Language similarity from coarse-POS trigram distributions.
//!
//! Each token contributes one trigram (previous tag, tag, next tag), with
//! BOS/EOS sentinels at sentence boundaries, so a sentence of length L
//! yields exactly L trigrams. Similarity of a target to a source is the
//! Kullback-Leibler divergence of the target trigram frequencies from the
//! source ones, taken over the trigrams observed in the target, with
//! natural logarithm. Trigrams missing from the source get a count of 1
//! and the source total is renormalized accordingly.

use std::collections::BTreeMap;

use crate::conll::{Treebank, Upos};
use crate::error::{Error, Result};

/// Inversion floor: KL values below this are clamped before the
/// fourth-power inversion, keeping weights finite for KL = 0 pairs.
pub const IKL_EPSILON: f64 = 1e-3;

/// A tag position in a trigram window; sentinels mark sentence boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TrigramTag {
    Bos,
    Tag(Upos),
    Eos,
}

impl std::fmt::Display for TrigramTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrigramTag::Bos => f.write_str("BOS"),
            TrigramTag::Eos => f.write_str("EOS"),
            TrigramTag::Tag(u) => f.write_str(u.as_str()),
        }
    }
}

pub type Trigram = [TrigramTag; 3];

/// Relative frequencies of coarse-POS trigrams in one corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigramDistribution {
    pub counts: BTreeMap<Trigram, u64>,
    pub total: u64,
}

impl TrigramDistribution {
    pub fn freq(&self, t: &Trigram) -> f64 {
        self.counts.get(t).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

/// Counts one trigram per token over a treebank. Heads are ignored, so
/// plain POS-tagged text works as input.
pub fn trigram_distribution(tb: &Treebank) -> Result<TrigramDistribution> {
    let mut counts: BTreeMap<Trigram, u64> = BTreeMap::new();
    let mut total = 0u64;
    for s in &tb.sentences {
        let n = s.len();
        for i in 1..=n {
            let at = |p: usize| {
                if p == 0 {
                    TrigramTag::Bos
                } else if p > n {
                    TrigramTag::Eos
                } else {
                    TrigramTag::Tag(s.upos_at(p))
                }
            };
            *counts.entry([at(i - 1), at(i), at(i + 1)]).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput(format!(
            "no tokens in corpus {:?}",
            tb.language
        )));
    }
    Ok(TrigramDistribution { counts, total })
}

/// KL divergence of the target trigram distribution from the source one,
/// summed over target-observed trigrams, natural log.
///
/// Source counts of 0 for target-observed trigrams are raised to 1; the
/// source denominator grows by the number of such raised trigrams, so the
/// smoothed source frequencies still sum to at most 1.
pub fn kl_cpos3(tgt: &TrigramDistribution, src: &TrigramDistribution) -> f64 {
    let unseen = tgt
        .counts
        .keys()
        .filter(|t| !src.counts.contains_key(*t))
        .count() as u64;
    let denom = (src.total + unseen) as f64;
    let mut sum = 0.0;
    for (t, &c) in &tgt.counts {
        let f_tgt = c as f64 / tgt.total as f64;
        let src_count = src.counts.get(t).copied().unwrap_or(1).max(1);
        let f_src = src_count as f64 / denom;
        sum += f_tgt * (f_tgt / f_src).ln();
    }
    sum
}

/// One row of a similarity matrix: KL of a fixed target from each source.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub target: String,
    pub entries: BTreeMap<String, f64>,
}

pub fn similarity_row(
    target: &str,
    tgt: &TrigramDistribution,
    sources: &BTreeMap<String, TrigramDistribution>,
) -> SimilarityRow {
    let entries = sources
        .iter()
        .map(|(lang, src)| (lang.clone(), kl_cpos3(tgt, src)))
        .collect();
    SimilarityRow {
        target: target.to_string(),
        entries,
    }
}

/// Picks the source with the smallest KL divergence from the target; ties
/// go to the lexicographically smallest language code.
pub fn select_source(
    tgt: &TrigramDistribution,
    sources: &BTreeMap<String, TrigramDistribution>,
) -> Result<String> {
    let mut best: Option<(&str, f64)> = None;
    for (lang, src) in sources {
        let kl = kl_cpos3(tgt, src);
        if best.map_or(true, |(_, b)| kl < b) {
            best = Some((lang, kl));
        }
    }
    match best {
        Some((lang, _)) => Ok(lang.to_string()),
        None => Err(Error::EmptyInput("no source distributions given".into())),
    }
}

/// Turns a KL divergence into an unnormalized mixing weight: the fourth
/// power of its inverse, with the divergence clamped to `IKL_EPSILON`
/// from below.
pub fn weight_ikl(kl: f64) -> f64 {
    (1.0 / kl.max(IKL_EPSILON)).powi(4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::Sentence;
    use crate::conll::Upos::*;
    use proptest::prelude::*;

    fn dist(tags_per_sentence: &[&[Upos]]) -> TrigramDistribution {
        let sentences = tags_per_sentence
            .iter()
            .map(|tags| Sentence::from_tag_heads(&tags.iter().map(|&t| (t, 0)).collect::<Vec<_>>()))
            .collect();
        trigram_distribution(&Treebank::new("xx", sentences)).unwrap()
    }

    fn raw(counts: &[(Trigram, u64)]) -> TrigramDistribution {
        TrigramDistribution {
            counts: counts.iter().cloned().collect(),
            total: counts.iter().map(|&(_, c)| c).sum(),
        }
    }

    const fn tri(a: TrigramTag, b: TrigramTag, c: TrigramTag) -> Trigram {
        [a, b, c]
    }

    use TrigramTag::{Bos, Eos, Tag};

    #[test]
    fn two_token_sentence_yields_two_trigrams() {
        let d = dist(&[&[Noun, Verb]]);
        assert_eq!(d.total, 2);
        assert_eq!(d.counts.len(), 2);
        let a = tri(Bos, Tag(Noun), Tag(Verb));
        let b = tri(Tag(Noun), Tag(Verb), Eos);
        assert_eq!(d.counts[&a], 1);
        assert_eq!(d.counts[&b], 1);
        assert_eq!(d.freq(&a), 0.5);
    }

    #[test]
    fn single_token_sentence_is_one_trigram() {
        let d = dist(&[&[X]]);
        assert_eq!(d.total, 1);
        assert_eq!(d.freq(&tri(Bos, Tag(X), Eos)), 1.0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let tb = Treebank::new("xx", vec![]);
        assert!(matches!(
            trigram_distribution(&tb),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn doubling_the_corpus_keeps_frequencies() {
        let single = dist(&[&[Noun, Verb, Noun], &[Det, Noun]]);
        let double = dist(&[
            &[Noun, Verb, Noun],
            &[Det, Noun],
            &[Noun, Verb, Noun],
            &[Det, Noun],
        ]);
        assert_eq!(double.total, 2 * single.total);
        for t in single.counts.keys() {
            assert_eq!(single.freq(t), double.freq(t));
        }
    }

    #[test]
    fn self_divergence_is_exactly_zero() {
        let d = dist(&[&[Noun, Verb, Det, Noun], &[Pron, Verb]]);
        assert_eq!(kl_cpos3(&d, &d), 0.0);
    }

    #[test]
    fn fully_unseen_trigram_costs_ln_two() {
        let tgt = raw(&[(tri(Bos, Tag(X), Eos), 1)]);
        let src = raw(&[(tri(Bos, Tag(Noun), Eos), 1)]);
        let kl = kl_cpos3(&tgt, &src);
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-12, "{kl}");
    }

    #[test]
    fn hand_computed_perturbation() {
        let a = tri(Bos, Tag(Noun), Eos);
        let b = tri(Bos, Tag(Verb), Eos);
        let tgt = raw(&[(a, 1), (b, 1)]);
        let src = raw(&[(a, 3), (b, 1)]);
        let expected = 0.5 * (4.0f64 / 3.0).ln();
        assert!((kl_cpos3(&tgt, &src) - expected).abs() < 1e-12);
        assert!((expected - 0.1438).abs() < 1e-4);
    }

    #[test]
    fn divergence_is_nonnegative_without_smoothing() {
        let a = tri(Bos, Tag(Noun), Eos);
        let b = tri(Bos, Tag(Verb), Eos);
        let tgt = raw(&[(a, 2), (b, 3)]);
        let src = raw(&[(a, 9), (b, 1)]);
        assert!(kl_cpos3(&tgt, &src) > 0.0);
    }

    #[test]
    fn source_selection_prefers_zero_divergence() {
        let identical = dist(&[&[Noun, Verb]]);
        let tgt = dist(&[&[Noun, Verb]]);
        let disjoint = dist(&[&[Adj, Adj, Adj]]);
        let sources = BTreeMap::from([("aa".to_string(), identical), ("bb".to_string(), disjoint)]);
        assert_eq!(select_source(&tgt, &sources).unwrap(), "aa");
    }

    #[test]
    fn source_selection_singleton() {
        let tgt = dist(&[&[Noun]]);
        let sources = BTreeMap::from([("only".to_string(), dist(&[&[Verb]]))]);
        assert_eq!(select_source(&tgt, &sources).unwrap(), "only");
    }

    #[test]
    fn source_selection_three_way_ordering() {
        let ab = tri(Bos, Tag(Noun), Eos);
        let c = tri(Bos, Tag(Verb), Eos);
        let tgt = raw(&[(ab, 1)]);
        // a: identical (KL 0); b: halved mass (ln 2); c: disjoint with a
        // larger total (smoothed to ln 4)
        let sources = BTreeMap::from([
            ("a".to_string(), raw(&[(ab, 1)])),
            ("b".to_string(), raw(&[(ab, 1), (c, 1)])),
            ("c".to_string(), raw(&[(c, 3)])),
        ]);
        let kl_a = kl_cpos3(&tgt, &sources["a"]);
        let kl_b = kl_cpos3(&tgt, &sources["b"]);
        let kl_c = kl_cpos3(&tgt, &sources["c"]);
        assert_eq!(kl_a, 0.0);
        assert!((kl_b - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((kl_c - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(select_source(&tgt, &sources).unwrap(), "a");
        let mut tail = sources;
        tail.remove("a");
        assert_eq!(select_source(&tgt, &tail).unwrap(), "b");
    }

    #[test]
    fn selection_is_scale_invariant() {
        let tgt = dist(&[&[Noun, Verb, Det]]);
        let s1 = dist(&[&[Noun, Verb], &[Det, Noun]]);
        let s2 = dist(&[&[Verb, Det, Det]]);
        let once = BTreeMap::from([("p".to_string(), s1), ("q".to_string(), s2)]);
        let twice: BTreeMap<String, TrigramDistribution> = once
            .iter()
            .map(|(k, v)| {
                let doubled = TrigramDistribution {
                    counts: v.counts.iter().map(|(t, c)| (*t, c * 2)).collect(),
                    total: v.total * 2,
                };
                (k.clone(), doubled)
            })
            .collect();
        assert_eq!(
            select_source(&tgt, &once).unwrap(),
            select_source(&tgt, &twice).unwrap()
        );
    }

    #[test]
    fn inverse_fourth_power_weights() {
        assert_eq!(weight_ikl(1.0), 1.0);
        assert_eq!(weight_ikl(0.5), 16.0);
        assert_eq!(weight_ikl(0.0), 1e12);
        assert_eq!(weight_ikl(IKL_EPSILON / 2.0), 1e12);
    }

    #[test]
    fn weights_strictly_decrease() {
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let kl = IKL_EPSILON + (10.0 - IKL_EPSILON) * i as f64 / 99.0;
            let w = weight_ikl(kl);
            assert!(w < prev, "not strictly decreasing at {kl}");
            prev = w;
        }
    }

    proptest! {
        #[test]
        fn trigrams_per_sentence_equal_length(tags in proptest::collection::vec(0usize..12, 1..15)) {
            let sent: Vec<Upos> = tags.iter().map(|&t| Upos::ALL[t]).collect();
            let d = dist(&[&sent]);
            prop_assert_eq!(d.total as usize, sent.len());
            let per_sentence: u64 = d.counts.values().sum();
            prop_assert_eq!(per_sentence as usize, sent.len());
        }

        #[test]
        fn divergence_nonnegative_when_support_covered(
            counts_t in proptest::collection::vec(1u64..20, 4),
            counts_s in proptest::collection::vec(1u64..20, 4),
        ) {
            let keys = [
                tri(Bos, Tag(Noun), Eos),
                tri(Bos, Tag(Verb), Eos),
                tri(Bos, Tag(Det), Eos),
                tri(Bos, Tag(Adj), Eos),
            ];
            let tgt = raw(&keys.iter().copied().zip(counts_t).collect::<Vec<_>>());
            let src = raw(&keys.iter().copied().zip(counts_s).collect::<Vec<_>>());
            prop_assert!(kl_cpos3(&tgt, &src) >= -1e-12);
        }
    }
}
