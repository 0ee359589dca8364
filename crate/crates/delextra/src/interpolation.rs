//! Model normalization and linear interpolation of parser models.
//!
//! Models trained on different treebanks live on different weight scales,
//! so before mixing, each model is divided by the uncorrected sample
//! standard deviation of its stored weights (the mean enters the SD
//! computation but is never subtracted from the weights themselves).
//! Interpolation is then a sparse weighted sum over the feature union;
//! absent features contribute zero.

use std::collections::BTreeMap;

use crate::conll::Treebank;
use crate::error::{Error, Result};
use crate::model::{ModelMeta, ParserModel};
use crate::parser::parse_treebank;

/// SD below this is treated as degenerate (all weights equal).
pub const SD_FLOOR: f64 = 1e-12;

/// Result of normalization; `degenerate` flags models returned unchanged
/// because their weight SD was effectively zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedModel {
    pub model: ParserModel,
    pub degenerate: bool,
}

/// Uncorrected sample standard deviation over the stored weights only.
fn weight_sd(weights: &BTreeMap<String, f64>) -> f64 {
    let n = weights.len() as f64;
    let mean = weights.values().sum::<f64>() / n;
    let var = weights
        .values()
        .map(|w| (w - mean) * (w - mean))
        .sum::<f64>()
        / n;
    var.sqrt()
}

/// Rescales a model to unit weight standard deviation. A model whose
/// weights are all equal cannot be rescaled and comes back unchanged with
/// the degenerate flag set.
pub fn normalize_model(m: &ParserModel) -> Result<NormalizedModel> {
    if m.weights.is_empty() {
        return Err(Error::EmptyInput(format!(
            "model {:?} has no stored weights",
            m.meta.language
        )));
    }
    let sd = weight_sd(&m.weights);
    if sd < SD_FLOOR {
        return Ok(NormalizedModel {
            model: m.clone(),
            degenerate: true,
        });
    }
    let weights = m.weights.iter().map(|(f, w)| (f.clone(), w / sd)).collect();
    let mut meta = m.meta.clone();
    meta.info.insert("normalized".into(), "weight-sd".into());
    Ok(NormalizedModel {
        model: ParserModel::new(meta, weights)?,
        degenerate: false,
    })
}

/// Weighted sum of models over the union of their features. `weights`
/// defaults to all ones; inputs are expected to be normalized already.
pub fn interpolate(models: &[ParserModel], weights: Option<&[f64]>) -> Result<ParserModel> {
    let Some(first) = models.first() else {
        return Err(Error::EmptyInput("no models to interpolate".into()));
    };
    for m in models {
        first.check_compatible(m)?;
    }
    let uniform = vec![1.0; models.len()];
    let weights = weights.unwrap_or(&uniform);
    if weights.len() != models.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} models",
            weights.len(),
            models.len()
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

    let mut sum: BTreeMap<String, f64> = BTreeMap::new();
    for (m, &w) in models.iter().zip(weights) {
        for (f, &v) in &m.weights {
            *sum.entry(f.clone()).or_insert(0.0) += w * v;
        }
    }

    let mut meta = ModelMeta::new("multi", models.iter().all(|m| m.meta.delex));
    meta.template_version = first.meta.template_version.clone();
    let languages: Vec<&str> = models.iter().map(|m| m.meta.language.as_str()).collect();
    meta.info.insert("sources".into(), languages.join(","));
    meta.info.insert(
        "interp-weights".into(),
        weights
            .iter()
            .map(|w| format!("{w}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    ParserModel::new(meta, sum)
}

/// Full interpolation transfer: normalize every source model, mix them
/// (uniform or per-language weights), parse the target with the result.
pub fn transfer_model_interpolation(
    src_models: &BTreeMap<String, ParserModel>,
    tgt: &Treebank,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<Treebank> {
    let model = interpolated_model(src_models, weights)?;
    parse_treebank(&model, tgt)
}

/// The normalize-then-interpolate half of the interpolation transfer,
/// exposed so pipelines can keep the mixed model as an artifact.
pub fn interpolated_model(
    src_models: &BTreeMap<String, ParserModel>,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<ParserModel> {
    if src_models.is_empty() {
        return Err(Error::EmptyInput("no source models".into()));
    }
    let weight_vec: Option<Vec<f64>> = match weights {
        None => None,
        Some(map) => Some(
            src_models
                .keys()
                .map(|lang| {
                    map.get(lang).copied().ok_or_else(|| {
                        Error::InvalidWeights(format!("no weight for source {lang:?}"))
                    })
                })
                .collect::<Result<_>>()?,
        ),
    };
    let normalized: Vec<ParserModel> = src_models
        .values()
        .map(|m| normalize_model(m).map(|n| n.model))
        .collect::<Result<_>>()?;
    interpolate(&normalized, weight_vec.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::Sentence;
    use crate::conll::Upos::*;
    use crate::parser::{score_edges, train_mira};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(lang: &str, pairs: &[(&str, f64)]) -> ParserModel {
        let weights = pairs.iter().map(|&(f, w)| (f.to_string(), w)).collect();
        ParserModel::new(ModelMeta::new(lang, true), weights).unwrap()
    }

    #[test]
    fn unit_sd_model_is_unchanged() {
        let m = model("xx", &[("A", 1.0), ("B", -1.0)]);
        let n = normalize_model(&m).unwrap();
        assert!(!n.degenerate);
        assert_eq!(n.model.weight("A"), 1.0);
        assert_eq!(n.model.weight("B"), -1.0);
    }

    #[test]
    fn sd_two_model_is_halved() {
        let m = model("xx", &[("A", 2.0), ("B", -2.0)]);
        let n = normalize_model(&m).unwrap();
        assert_eq!(n.model.weight("A"), 1.0);
        assert_eq!(n.model.weight("B"), -1.0);
    }

    #[test]
    fn mean_is_not_subtracted() {
        // weights 1 and 3: mean 2, sd 1; normalization must keep the mean
        // in place rather than centering
        let m = model("xx", &[("A", 1.0), ("B", 3.0)]);
        let n = normalize_model(&m).unwrap();
        assert_eq!(n.model.weight("A"), 1.0);
        assert_eq!(n.model.weight("B"), 3.0);
    }

    #[test]
    fn singleton_model_is_degenerate() {
        let m = model("xx", &[("A", 5.0)]);
        let n = normalize_model(&m).unwrap();
        assert!(n.degenerate);
        assert_eq!(n.model.weights, m.weights);
    }

    #[test]
    fn empty_model_cannot_normalize() {
        let m = ParserModel::empty(ModelMeta::new("xx", true));
        assert!(matches!(normalize_model(&m), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn interpolate_singleton_keeps_weights() {
        let m = model("xx", &[("A", 1.25), ("B", -0.5)]);
        let out = interpolate(std::slice::from_ref(&m), None).unwrap();
        assert_eq!(out.weights, m.weights);
    }

    #[test]
    fn interpolate_disjoint_union() {
        let m1 = model("a", &[("A", 1.0)]);
        let m2 = model("b", &[("B", 2.0)]);
        let out = interpolate(&[m1, m2], None).unwrap();
        assert_eq!(out.weight("A"), 1.0);
        assert_eq!(out.weight("B"), 2.0);
        assert_eq!(out.meta.info["sources"], "a,b");
    }

    #[test]
    fn interpolate_weighted_sum() {
        let m1 = model("a", &[("A", 1.0), ("B", 1.0)]);
        let m2 = model("b", &[("A", 1.0)]);
        let out = interpolate(&[m1, m2], Some(&[2.0, 3.0])).unwrap();
        assert_eq!(out.weight("A"), 5.0);
        assert_eq!(out.weight("B"), 2.0);
    }

    #[test]
    fn interpolate_rejects_bad_weights() {
        let m1 = model("a", &[("A", 1.0)]);
        let m2 = model("b", &[("B", 1.0)]);
        assert!(interpolate(&[m1.clone(), m2.clone()], Some(&[1.0])).is_err());
        assert!(interpolate(&[m1.clone(), m2.clone()], Some(&[0.0, 0.0])).is_err());
        assert!(interpolate(&[m1.clone(), m2.clone()], Some(&[-1.0, 2.0])).is_err());
        let mut alien = model("c", &[("C", 1.0)]);
        alien.meta.template_version = "tmpl-v0".into();
        assert!(matches!(
            interpolate(&[m1, alien], None),
            Err(Error::TemplateMismatch { .. })
        ));
    }

    #[test]
    fn pair_interpolation_is_order_invariant() {
        let m1 = model("a", &[("A", 0.7), ("B", -0.3)]);
        let m2 = model("b", &[("B", 1.1), ("C", 0.4)]);
        let ab = interpolate(&[m1.clone(), m2.clone()], Some(&[2.0, 5.0])).unwrap();
        let ba = interpolate(&[m2, m1], Some(&[5.0, 2.0])).unwrap();
        assert_eq!(ab.weights, ba.weights);
    }

    fn training_data() -> Treebank {
        Treebank::new(
            "src",
            vec![
                Sentence::from_tag_heads(&[(Det, 2), (Noun, 3), (Verb, 0)]),
                Sentence::from_tag_heads(&[(Noun, 2), (Verb, 0), (Det, 4), (Noun, 2)]),
                Sentence::from_tag_heads(&[(Pron, 2), (Verb, 0), (Adv, 2)]),
            ],
        )
    }

    fn unparsed_target() -> Treebank {
        Treebank::new(
            "tgt",
            vec![
                Sentence::from_tag_heads(&[(Det, 0), (Noun, 0), (Verb, 0)]),
                Sentence::from_tag_heads(&[(Pron, 0), (Verb, 0), (Adv, 0)]),
            ],
        )
    }

    #[test]
    fn copies_of_one_model_parse_like_the_original() {
        let m = train_mira(&training_data(), 3, false).unwrap();
        let tgt = unparsed_target();
        let plain = parse_treebank(&m, &tgt).unwrap();
        let models = BTreeMap::from([
            ("c1".to_string(), m.clone()),
            ("c2".to_string(), m.clone()),
            ("c3".to_string(), m),
        ]);
        let mixed = transfer_model_interpolation(&models, &tgt, None).unwrap();
        assert_eq!(mixed.sentences, plain.sentences);
    }

    #[test]
    fn zero_weight_annihilates_a_model() {
        let m1 = train_mira(&training_data(), 3, false).unwrap();
        let other = Treebank::new(
            "q",
            vec![
                Sentence::from_tag_heads(&[(Det, 3), (Noun, 3), (Verb, 0)]),
                Sentence::from_tag_heads(&[(Noun, 4), (Verb, 4), (Det, 4), (Noun, 0)]),
                Sentence::from_tag_heads(&[(Pron, 3), (Verb, 3), (Adv, 0)]),
            ],
        );
        let m2 = train_mira(&other, 3, false).unwrap();
        let tgt = unparsed_target();
        let models = BTreeMap::from([("p".to_string(), m1.clone()), ("q".to_string(), m2)]);
        let weights = BTreeMap::from([("p".to_string(), 1.0), ("q".to_string(), 0.0)]);
        let mixed = transfer_model_interpolation(&models, &tgt, Some(&weights)).unwrap();
        let solo = parse_treebank(&normalize_model(&m1).unwrap().model, &tgt).unwrap();
        assert_eq!(mixed.sentences, solo.sentences);
    }

    #[test]
    fn normalization_does_not_change_parses() {
        let m = train_mira(&training_data(), 3, false).unwrap();
        let n = normalize_model(&m).unwrap().model;
        let tgt = unparsed_target();
        assert_eq!(
            parse_treebank(&m, &tgt).unwrap(),
            parse_treebank(&n, &tgt).unwrap()
        );
    }

    proptest! {
        #[test]
        fn normalized_sd_is_one(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(2..40);
            let mut pairs = Vec::new();
            for i in 0..k {
                pairs.push((format!("F{i}"), rng.gen_range(-5.0..5.0)));
            }
            let m = ParserModel::new(
                ModelMeta::new("xx", true),
                pairs.into_iter().collect(),
            ).unwrap();
            prop_assume!(m.weights.len() >= 2);
            let n = normalize_model(&m).unwrap();
            prop_assume!(!n.degenerate);
            let sd = weight_sd(&n.model.weights);
            prop_assert!((sd - 1.0).abs() < 1e-9, "sd={sd}");
            for (f, w) in &m.weights {
                prop_assert_eq!(w.signum(), n.model.weight(f).signum());
            }
        }

        #[test]
        fn interpolation_is_linear_in_edge_scores(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = Sentence::from_tag_heads(&[(Det, 2), (Noun, 0), (Verb, 2)]);
            let feats = crate::features::extract_edge_features(&s, 2, 3, false).unwrap();
            let mut w1 = BTreeMap::new();
            let mut w2 = BTreeMap::new();
            for f in feats.iter().take(6) {
                w1.insert(f.clone(), rng.gen_range(-2.0..2.0));
            }
            for f in feats.iter().skip(3).take(6) {
                w2.insert(f.clone(), rng.gen_range(-2.0..2.0));
            }
            let m1 = ParserModel::new(ModelMeta::new("a", true), w1).unwrap();
            let m2 = ParserModel::new(ModelMeta::new("b", true), w2).unwrap();
            let a = rng.gen_range(0.1..3.0);
            let b = rng.gen_range(0.1..3.0);
            let mixed = interpolate(&[m1.clone(), m2.clone()], Some(&[a, b])).unwrap();
            let e1 = score_edges(&m1, &s).unwrap();
            let e2 = score_edges(&m2, &s).unwrap();
            let em = score_edges(&mixed, &s).unwrap();
            for h in 0..=3usize {
                for d in 1..=3usize {
                    if h != d {
                        let want = a * e1.get(h, d) + b * e2.get(h, d);
                        prop_assert!((em.get(h, d) - want).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
