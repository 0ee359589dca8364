//! Run the whole transfer pipeline through the experiment driver: train on
//! every source, weight by language closeness, vote, convert, evaluate.
//! Artifacts land in a temporary directory that is printed at the end.

use std::collections::BTreeMap;
use std::path::Path;

use delextra::experiment::{run_experiment, ExperimentConfig, Method, StyleSetup, Weighting};
use delextra::transform::Style;

fn main() -> Result<(), delextra::Error> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let out = std::env::temp_dir().join("delextra-full-transfer");

    let mut sources = BTreeMap::new();
    sources.insert("a".to_string(), dir.join("lang_a_train.conll"));
    sources.insert("b".to_string(), dir.join("lang_b_train.conll"));

    let cfg = ExperimentConfig {
        target: dir.join("target_gold.conll"),
        target_lang: "tgt".to_string(),
        sources,
        method: Method::TreeComb,
        weighting: Weighting::Ikl,
        styles: StyleSetup::default(),
        input_style: Style::Prague,
        iterations: 3,
        out: out.clone(),
    };

    let report = run_experiment(&cfg)?;
    print!("{}", report.to_tsv());
    println!("artifacts: {}", out.display());
    Ok(())
}
