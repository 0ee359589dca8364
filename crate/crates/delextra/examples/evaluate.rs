//! Score a predicted treebank against gold: overall, punctuation excluded,
//! and broken down by part of speech.

use std::path::Path;

use delextra::conll::read_treebank_from_path;
use delextra::eval::{per_pos_accuracy, uas, uas_nonpunct};
use delextra::parser::{parse_treebank, train_mira};

fn main() -> Result<(), delextra::Error> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let gold = read_treebank_from_path(&dir.join("target_gold.conll"), "target")?;

    // a deliberately mismatched parser: trained on the other convention
    let other = read_treebank_from_path(&dir.join("lang_b_train.conll"), "b")?;
    let model = train_mira(&other, 3, false)?;
    let pred = parse_treebank(&model, &gold)?;

    println!("uas(all):      {:.4}", uas(&gold, &pred)?);
    match uas_nonpunct(&gold, &pred) {
        Ok(v) => println!("uas(nonpunct): {v:.4}"),
        Err(e) => println!("uas(nonpunct): n/a ({e})"),
    }
    for (tag, acc) in per_pos_accuracy(&gold, &pred)? {
        println!("  {tag:<5} {acc:.4}");
    }
    Ok(())
}
