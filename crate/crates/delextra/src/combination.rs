//! Multi-source transfer by treebank concatenation and by weighted
//! parse-tree combination.
//!
//! Tree combination turns N candidate parses of one sentence into a vote
//! graph: every edge scores the summed weights of the parsers that chose
//! it. The combined parse is the maximum spanning arborescence of that
//! graph, so it can mix fragments of several candidates while always
//! staying a valid tree.

use std::collections::BTreeMap;

use crate::conll::Treebank;
use crate::error::{Error, Result};
use crate::model::ParserModel;
use crate::parser::{decode, parse_sentence, EdgeScores, ParseTree};

/// Joins treebanks in input order under the language tag "multi".
pub fn concat_treebanks(tbs: &[Treebank]) -> Result<Treebank> {
    if tbs.is_empty() {
        return Err(Error::EmptyInput("no treebanks to concatenate".into()));
    }
    let sentences = tbs.iter().flat_map(|tb| tb.sentences.clone()).collect();
    Ok(Treebank::new("multi", sentences))
}

fn check_weights(weights: &[f64], expected: usize) -> Result<()> {
    if weights.len() != expected {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} voters",
            weights.len(),
            expected
        )));
    }
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and non-negative, got {w}"
            )));
        }
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidWeights("weights sum to zero".into()));
    }
    Ok(())
}

/// Combines candidate parses of one sentence into the maximum-weight vote
/// tree. Weights must be non-negative with a positive sum.
pub fn combine_parses(trees: &[ParseTree], weights: &[f64]) -> Result<ParseTree> {
    if trees.is_empty() {
        return Err(Error::EmptyInput("no parses to combine".into()));
    }
    check_weights(weights, trees.len())?;
    let n = trees[0].heads.len();
    for t in trees {
        if t.heads.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "cannot combine parses of {} and {} tokens",
                n,
                t.heads.len()
            )));
        }
    }
    let mut votes = EdgeScores::new(n);
    for (t, &w) in trees.iter().zip(weights) {
        for (i, &h) in t.heads.iter().enumerate() {
            votes.set(h, i + 1, votes.get(h, i + 1) + w);
        }
    }
    Ok(decode(&votes))
}

/// Parses the target with every source model and votes the parses into
/// one tree per sentence. `weights` maps source language to vote weight;
/// absent means uniform. Models must share one feature inventory.
pub fn transfer_tree_combination(
    src_models: &BTreeMap<String, ParserModel>,
    tgt: &Treebank,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<Treebank> {
    let Some(first) = src_models.values().next() else {
        return Err(Error::EmptyInput("no source models".into()));
    };
    for m in src_models.values() {
        first.check_compatible(m)?;
    }
    let weight_vec: Vec<f64> = match weights {
        None => vec![1.0; src_models.len()],
        Some(map) => src_models
            .keys()
            .map(|lang| {
                map.get(lang)
                    .copied()
                    .ok_or_else(|| Error::InvalidWeights(format!("no weight for source {lang:?}")))
            })
            .collect::<Result<_>>()?,
    };

    let mut sentences = Vec::with_capacity(tgt.sentences.len());
    for s in &tgt.sentences {
        let parses: Vec<ParseTree> = src_models
            .values()
            .map(|m| parse_sentence(m, s))
            .collect::<Result<_>>()?;
        let combined = combine_parses(&parses, &weight_vec)?;
        sentences.push(s.with_heads(&combined.heads));
    }
    Ok(Treebank::new(tgt.language.clone(), sentences))
}
