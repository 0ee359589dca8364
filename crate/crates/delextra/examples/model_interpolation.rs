//! Mix two source parser models into one, normalizing each by its weight
//! spread first, and compare uniform against closeness-weighted mixing.

use std::collections::BTreeMap;
use std::path::Path;

use delextra::conll::read_treebank_from_path;
use delextra::eval::uas;
use delextra::interpolation::interpolated_model;
use delextra::parser::{parse_treebank, train_mira};
use delextra::similarity::{kl_cpos3, trigram_distribution, weight_ikl};

fn main() -> Result<(), delextra::Error> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let gold = read_treebank_from_path(&dir.join("target_gold.conll"), "target")?;
    let tgt = trigram_distribution(&gold)?;

    let mut models = BTreeMap::new();
    let mut weights = BTreeMap::new();
    for (lang, file) in [("a", "lang_a_train.conll"), ("b", "lang_b_train.conll")] {
        let tb = read_treebank_from_path(&dir.join(file), lang)?;
        models.insert(lang.to_string(), train_mira(&tb, 3, false)?);
        weights.insert(
            lang.to_string(),
            weight_ikl(kl_cpos3(&tgt, &trigram_distribution(&tb)?)),
        );
    }

    for (label, w) in [("uniform", None), ("ikl-weighted", Some(&weights))] {
        let mixed = interpolated_model(&models, w)?;
        let parsed = parse_treebank(&mixed, &gold)?;
        println!(
            "{label:<13} {} features, UAS {:.4}",
            mixed.weights.len(),
            uas(&gold, &parsed)?
        );
    }
    Ok(())
}
