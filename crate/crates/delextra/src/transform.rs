//! Conversion of adposition attachment between two annotation styles:
//! Prague style ("P", adposition governs the noun) and Stanford style
//! ("S", adposition hangs as a leaf under the noun).
//!
//! Both directions run as a single left-to-right pass over the adpositions
//! of a sentence, mutating heads as they go, so stacked adpositions cascade
//! deterministically. Only heads change; token order, forms, lemmas and tags
//! are untouched.

use std::str::FromStr;

use crate::conll::{validate_tree, Sentence, Treebank, Upos};
use crate::error::{Error, Result};

/// Adposition annotation style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Style {
    Prague,
    Stanford,
}

impl Style {
    pub fn as_str(self) -> &'static str {
        match self {
            Style::Prague => "P",
            Style::Stanford => "S",
        }
    }
}

impl std::fmt::Display for Style {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Style> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "prague" => Ok(Style::Prague),
            "s" | "stanford" => Ok(Style::Stanford),
            _ => Err(Error::Config(format!("unknown annotation style {s:?}"))),
        }
    }
}

fn check_input(s: &Sentence) -> Result<()> {
    if !validate_tree(s) {
        return Err(Error::Structure {
            sentence: 0,
            message: "conversion input is not a valid tree".into(),
        });
    }
    Ok(())
}

fn children_of(heads: &[usize], node: usize) -> Vec<usize> {
    (1..=heads.len())
        .filter(|&j| heads[j - 1] == node)
        .collect()
}

/// Follows coordination heads down to the leftmost conjunct that can carry
/// the attachment. Conjuncts with ADP or punctuation tags are skipped.
fn dive_coordination(s: &Sentence, heads: &[usize], node: usize) -> usize {
    if s.upos_at(node) != Upos::Conj {
        return node;
    }
    let conjunct = children_of(heads, node)
        .into_iter()
        .find(|&c| s.upos_at(c) != Upos::Adp && s.upos_at(c) != Upos::Punct);
    match conjunct {
        Some(c) => dive_coordination(s, heads, c),
        None => node,
    }
}

/// Demotes every adposition below its left-most non-adposition child.
///
/// That child takes over the adposition's former head; the adposition and
/// the remaining non-adposition children attach under the child (descending
/// through coordination heads to the leftmost usable conjunct). An
/// adposition whose children are all adpositions stays where it is.
pub fn prague_to_stanford(s: &Sentence) -> Result<Sentence> {
    check_input(s)?;
    let mut heads = s.heads();
    for a in 1..=s.len() {
        if s.upos_at(a) != Upos::Adp {
            continue;
        }
        let lexical: Vec<usize> = children_of(&heads, a)
            .into_iter()
            .filter(|&c| s.upos_at(c) != Upos::Adp)
            .collect();
        let Some(&lift) = lexical.first() else {
            continue;
        };
        let target = dive_coordination(s, &heads, lift);
        let former = heads[a - 1];
        heads[lift - 1] = former;
        heads[a - 1] = target;
        for &c in &lexical[1..] {
            heads[c - 1] = target;
        }
    }
    Ok(s.with_heads(&heads))
}

/// Promotes every adposition above its head: the adposition takes its
/// head's head, and the former head becomes its dependent. Adpositions
/// already on the root or hanging under another adposition (compounds)
/// stay put.
pub fn stanford_to_prague(s: &Sentence) -> Result<Sentence> {
    check_input(s)?;
    let mut heads = s.heads();
    for a in 1..=s.len() {
        if s.upos_at(a) != Upos::Adp {
            continue;
        }
        let h = heads[a - 1];
        if h == 0 || s.upos_at(h) == Upos::Adp {
            continue;
        }
        heads[a - 1] = heads[h - 1];
        heads[h - 1] = a;
    }
    Ok(s.with_heads(&heads))
}

/// Converts between styles; identity when `from == to`.
pub fn convert(s: &Sentence, from: Style, to: Style) -> Result<Sentence> {
    match (from, to) {
        (Style::Prague, Style::Stanford) => prague_to_stanford(s),
        (Style::Stanford, Style::Prague) => stanford_to_prague(s),
        _ => Ok(s.clone()),
    }
}

/// Converts every sentence of a treebank; structure errors carry the
/// 1-based sentence number.
pub fn convert_treebank(tb: &Treebank, from: Style, to: Style) -> Result<Treebank> {
    let mut sentences = Vec::with_capacity(tb.sentences.len());
    for (i, s) in tb.sentences.iter().enumerate() {
        let converted = convert(s, from, to).map_err(|e| match e {
            Error::Structure { message, .. } => Error::Structure {
                sentence: i + 1,
                message,
            },
            other => other,
        })?;
        sentences.push(converted);
    }
    Ok(Treebank::new(tb.language.clone(), sentences))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::Upos::*;
    use proptest::prelude::*;

    fn sent(pairs: &[(Upos, usize)]) -> Sentence {
        Sentence::from_tag_heads(pairs)
    }

    #[test]
    fn bar_of_chocolate_both_directions() {
        let prague = sent(&[(Noun, 0), (Adp, 1), (Noun, 2)]);
        let stanford = prague_to_stanford(&prague).unwrap();
        assert_eq!(stanford.heads(), vec![0, 3, 1]);
        let back = stanford_to_prague(&stanford).unwrap();
        assert_eq!(back.heads(), vec![0, 1, 2]);
    }

    #[test]
    fn no_adpositions_unchanged() {
        let s = sent(&[(Verb, 0), (Noun, 1), (Det, 2), (Punct, 1)]);
        assert_eq!(prague_to_stanford(&s).unwrap(), s);
        assert_eq!(stanford_to_prague(&s).unwrap(), s);
    }

    #[test]
    fn compound_adposition_keeps_inner_adp_as_child() {
        // "off of the table": of hangs under off and has no children of its
        // own, so only off moves, landing on the lexical noun.
        let s = sent(&[(Adp, 0), (Adp, 1), (Det, 4), (Noun, 1)]);
        let out = prague_to_stanford(&s).unwrap();
        assert_eq!(out.heads(), vec![4, 1, 4, 0]);
    }

    #[test]
    fn nested_adposition_chain_cascades() {
        // outer ADP has only an ADP child, inner ADP carries the noun
        let s = sent(&[(Adp, 0), (Adp, 1), (Noun, 2), (Noun, 3)]);
        let out = prague_to_stanford(&s).unwrap();
        assert_eq!(out.heads(), vec![0, 3, 1, 3]);
        let back = stanford_to_prague(&out).unwrap();
        assert_eq!(back.heads(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn coordination_dives_to_leftmost_conjunct() {
        // ADP governs a CONJ head over two nouns; the adposition must land
        // on the first noun while the coordination takes the former head.
        let s = sent(&[(Adp, 0), (Noun, 3), (Conj, 1), (Noun, 3)]);
        let out = prague_to_stanford(&s).unwrap();
        assert_eq!(out.heads(), vec![2, 3, 0, 3]);
    }

    #[test]
    fn coordination_skips_punct_conjunct() {
        let s = sent(&[(Adp, 0), (Punct, 3), (Conj, 1), (Noun, 3)]);
        let out = prague_to_stanford(&s).unwrap();
        assert_eq!(out.heads(), vec![4, 3, 0, 3]);
    }

    #[test]
    fn two_adpositions_sharing_a_head_chain_leftwards() {
        let s = sent(&[(Adp, 3), (Adp, 3), (Noun, 0)]);
        let out = stanford_to_prague(&s).unwrap();
        assert_eq!(out.heads(), vec![0, 1, 2]);
    }

    #[test]
    fn extra_children_follow_the_lifted_child() {
        // ADP with a noun and an adverb child: noun takes the former head,
        // adposition and adverb attach under the noun.
        let s = sent(&[(Verb, 0), (Adp, 1), (Noun, 2), (Adv, 2)]);
        let out = prague_to_stanford(&s).unwrap();
        assert_eq!(out.heads(), vec![0, 3, 1, 3]);
    }

    #[test]
    fn identity_conversion_is_identity() {
        let s = sent(&[(Noun, 0), (Adp, 1), (Noun, 2)]);
        assert_eq!(convert(&s, Style::Prague, Style::Prague).unwrap(), s);
        assert_eq!(convert(&s, Style::Stanford, Style::Stanford).unwrap(), s);
    }

    #[test]
    fn invalid_input_is_a_structure_error() {
        let s = sent(&[(Adp, 2), (Noun, 1)]);
        assert!(matches!(
            prague_to_stanford(&s),
            Err(Error::Structure { .. })
        ));
        assert!(matches!(
            stanford_to_prague(&s),
            Err(Error::Structure { .. })
        ));
    }

    #[test]
    fn style_parsing() {
        assert_eq!("P".parse::<Style>().unwrap(), Style::Prague);
        assert_eq!("stanford".parse::<Style>().unwrap(), Style::Stanford);
        assert!("Q".parse::<Style>().is_err());
    }

    prop_compose! {
        fn arb_sentence()(n in 1usize..10)(
            picks in proptest::collection::vec(0usize..100, n),
            tags in proptest::collection::vec(0usize..12, n),
        ) -> Sentence {
            let pairs: Vec<(Upos, usize)> = picks
                .iter()
                .zip(&tags)
                .enumerate()
                .map(|(i, (&pick, &tag))| (Upos::ALL[tag], pick % (i + 1)))
                .collect();
            Sentence::from_tag_heads(&pairs)
        }
    }

    proptest! {
        #[test]
        fn conversions_preserve_tree_validity(s in arb_sentence()) {
            let fwd = prague_to_stanford(&s).unwrap();
            prop_assert!(validate_tree(&fwd));
            let bwd = stanford_to_prague(&s).unwrap();
            prop_assert!(validate_tree(&bwd));
            prop_assert!(validate_tree(&stanford_to_prague(&fwd).unwrap()));
        }

        #[test]
        fn conversions_only_touch_heads(s in arb_sentence()) {
            let fwd = prague_to_stanford(&s).unwrap();
            prop_assert_eq!(fwd.tags(), s.tags());
            prop_assert_eq!(fwd.len(), s.len());
            for (a, b) in s.tokens.iter().zip(&fwd.tokens) {
                prop_assert_eq!(&a.form, &b.form);
                prop_assert_eq!(&a.lemma, &b.lemma);
                prop_assert_eq!(a.index, b.index);
            }
        }

        #[test]
        fn demotion_only_moves_adpositions_and_their_dependents(s in arb_sentence()) {
            let out = prague_to_stanford(&s).unwrap();
            for i in 1..=s.len() {
                if out.tokens[i - 1].head != s.tokens[i - 1].head {
                    let old_head = s.tokens[i - 1].head;
                    let moved_adp = s.upos_at(i) == Adp;
                    let was_adp_child = old_head != 0 && s.upos_at(old_head) == Adp;
                    prop_assert!(moved_adp || was_adp_child);
                }
            }
        }

        #[test]
        fn promotion_only_moves_adpositions_and_their_captures(s in arb_sentence()) {
            let out = stanford_to_prague(&s).unwrap();
            for i in 1..=s.len() {
                if out.tokens[i - 1].head != s.tokens[i - 1].head {
                    let new_head = out.tokens[i - 1].head;
                    let moved_adp = s.upos_at(i) == Adp;
                    let captured = new_head != 0 && s.upos_at(new_head) == Adp;
                    prop_assert!(moved_adp || captured);
                }
            }
        }
    }
}
