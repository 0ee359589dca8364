//! Rank candidate source treebanks by POS-trigram KL divergence from a
//! target corpus, and show the inverse-KL weights used elsewhere.

use std::path::Path;

use delextra::conll::read_treebank_from_path;
use delextra::similarity::{kl_cpos3, select_source, trigram_distribution, weight_ikl};

fn main() -> Result<(), delextra::Error> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let target = read_treebank_from_path(&dir.join("target_gold.conll"), "target")?;
    let tgt = trigram_distribution(&target)?;

    let mut sources = std::collections::BTreeMap::new();
    for (lang, file) in [("a", "lang_a_train.conll"), ("b", "lang_b_train.conll")] {
        let tb = read_treebank_from_path(&dir.join(file), lang)?;
        let dist = trigram_distribution(&tb)?;
        let kl = kl_cpos3(&tgt, &dist);
        println!("{lang}: kl={kl:.6}  ikl-weight={:.6}", weight_ikl(kl));
        sources.insert(lang.to_string(), dist);
    }

    let best = select_source(&tgt, &sources)?;
    println!("closest source: {best}");
    Ok(())
}
