//! Train a delexicalized parser on the bundled toy treebank, then re-parse
//! the same sentences and report attachment accuracy.

use std::path::Path;

use delextra::conll::read_treebank_from_path;
use delextra::eval::uas;
use delextra::parser::{parse_treebank, train_mira};

fn main() -> Result<(), delextra::Error> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/grammar20.conll");
    let gold = read_treebank_from_path(&path, "")?;

    let model = train_mira(&gold, 3, false)?;
    println!(
        "trained on {} sentences, {} features",
        gold.sentences.len(),
        model.weights.len()
    );

    let parsed = parse_treebank(&model, &gold)?;
    for (i, (g, p)) in gold
        .sentences
        .iter()
        .zip(&parsed.sentences)
        .enumerate()
        .take(3)
    {
        println!(
            "sentence {}: gold {:?} parsed {:?}",
            i + 1,
            g.heads(),
            p.heads()
        );
    }
    println!("training-data UAS: {:.4}", uas(&gold, &parsed)?);
    Ok(())
}
