//! Convert a treebank between the two adposition attachment styles and
//! measure how much of the original structure a roundtrip preserves.

use std::path::Path;

use delextra::conll::read_treebank_from_path;
use delextra::transform::{convert_treebank, Style};

fn main() -> Result<(), delextra::Error> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for name in ["adpositions_clean.conll", "adpositions_adversarial.conll"] {
        let prague = read_treebank_from_path(&dir.join(name), "")?;
        let stanford = convert_treebank(&prague, Style::Prague, Style::Stanford)?;
        let back = convert_treebank(&stanford, Style::Stanford, Style::Prague)?;

        let mut total = 0usize;
        let mut same = 0usize;
        for (a, b) in prague.sentences.iter().zip(&back.sentences) {
            for (x, y) in a.heads().iter().zip(b.heads()) {
                total += 1;
                same += usize::from(*x == y);
            }
        }
        println!("{name}: roundtrip agreement {same}/{total}");
    }

    // show what actually moves on one sentence
    let prague = read_treebank_from_path(&dir.join("adpositions_clean.conll"), "")?;
    let s = &prague.sentences[0];
    let converted = convert_treebank(&prague, Style::Prague, Style::Stanford)?;
    let t = &converted.sentences[0];
    for (tok, new) in s.tokens.iter().zip(&t.tokens) {
        let mark = if tok.head != new.head {
            "  <- moved"
        } else {
            ""
        };
        println!(
            "{:>2} {:<6} {:<5} P:{} S:{}{mark}",
            tok.index, tok.form, tok.upos, tok.head, new.head
        );
    }
    Ok(())
}
