//! Parse a target corpus with two source parsers and vote their trees
//! edge by edge, once uniformly and once weighted by language closeness.

use std::collections::BTreeMap;
use std::path::Path;

use delextra::combination::transfer_tree_combination;
use delextra::conll::read_treebank_from_path;
use delextra::eval::uas;
use delextra::parser::train_mira;
use delextra::similarity::{kl_cpos3, trigram_distribution, weight_ikl};

fn main() -> Result<(), delextra::Error> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let gold = read_treebank_from_path(&dir.join("target_gold.conll"), "target")?;

    let mut models = BTreeMap::new();
    let mut weights = BTreeMap::new();
    let tgt = trigram_distribution(&gold)?;
    for (lang, file) in [("a", "lang_a_train.conll"), ("b", "lang_b_train.conll")] {
        let tb = read_treebank_from_path(&dir.join(file), lang)?;
        models.insert(lang.to_string(), train_mira(&tb, 3, false)?);
        weights.insert(
            lang.to_string(),
            weight_ikl(kl_cpos3(&tgt, &trigram_distribution(&tb)?)),
        );
    }

    let uniform = transfer_tree_combination(&models, &gold, None)?;
    let weighted = transfer_tree_combination(&models, &gold, Some(&weights))?;
    println!("uniform vote UAS:  {:.4}", uas(&gold, &uniform)?);
    println!("weighted vote UAS: {:.4}", uas(&gold, &weighted)?);
    Ok(())
}
