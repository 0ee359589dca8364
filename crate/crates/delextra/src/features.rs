//! Binary feature extraction for candidate dependency edges.
//!
//! Each feature is a string of the form `TEMPLATE:val1|val2|...`; the
//! template prefix makes collisions across templates impossible. The
//! default set is fully delexicalized (POS tags, neighbours, in-between
//! tags, signed bucketed distance); word form and lemma templates can be
//! switched on for supervised upper bounds.
//!
//! The inventory is versioned so model files can refuse mismatched
//! feature spaces.

use std::collections::BTreeSet;

use crate::conll::Sentence;
use crate::error::{Error, Result};

/// Version tag of the template inventory below, recorded in model files.
pub const TEMPLATE_VERSION: &str = "tmpl-v1";

/// Sentinel tag for the technical root at position 0.
pub const ROOT_TAG: &str = "ROOT";
/// Sentinel tag for neighbour positions before the sentence.
pub const BOS_TAG: &str = "BOS";
/// Sentinel tag for neighbour positions after the sentence.
pub const EOS_TAG: &str = "EOS";

/// Active features of one edge. Binary valued: presence means 1.
pub type FeatureVector = BTreeSet<String>;

/// Buckets a signed head-minus-dependent distance. Exact buckets up to
/// |d| = 4, then cumulative thresholds: |d| >= 5 fires the 5-bucket and
/// |d| >= 11 additionally fires the 11-bucket.
///
/// Panics when `d == 0`; a token cannot govern itself.
pub fn bucket_distance(d: i64) -> Vec<&'static str> {
    assert!(d != 0, "edge distance cannot be zero");
    match d {
        1 => vec!["+1"],
        2 => vec!["+2"],
        3 => vec!["+3"],
        4 => vec!["+4"],
        -1 => vec!["-1"],
        -2 => vec!["-2"],
        -3 => vec!["-3"],
        -4 => vec!["-4"],
        5..=10 => vec![">=+5"],
        _ if d >= 11 => vec![">=+5", ">=+11"],
        -10..=-5 => vec!["<=-5"],
        _ => vec!["<=-5", "<=-11"],
    }
}

/// Tag at a 1-based position, with sentinels for the root and for
/// positions outside the sentence.
fn tag_at(s: &Sentence, pos: i64) -> &str {
    let n = s.len() as i64;
    if pos == 0 {
        ROOT_TAG
    } else if pos < 0 {
        BOS_TAG
    } else if pos > n {
        EOS_TAG
    } else {
        s.upos_at(pos as usize).as_str()
    }
}

fn form_at(s: &Sentence, pos: usize) -> &str {
    if pos == 0 {
        ROOT_TAG
    } else {
        &s.tokens[pos - 1].form
    }
}

fn lemma_at(s: &Sentence, pos: usize) -> &str {
    if pos == 0 {
        ROOT_TAG
    } else {
        &s.tokens[pos - 1].lemma
    }
}

/// Extracts the feature set for the directed edge `head -> dep`.
///
/// `head` may be 0 (the technical root); `dep` is a 1-based token index.
pub fn extract_edge_features(
    s: &Sentence,
    head: usize,
    dep: usize,
    lexical: bool,
) -> Result<FeatureVector> {
    let n = s.len();
    if head > n || dep == 0 || dep > n {
        return Err(Error::ShapeMismatch(format!(
            "edge {head}->{dep} out of range for a {n}-token sentence"
        )));
    }
    if head == dep {
        return Err(Error::ShapeMismatch(format!(
            "self-edge {head}->{dep} has no features"
        )));
    }

    let h = head as i64;
    let d = dep as i64;
    let buckets = bucket_distance(h - d);

    let hp = tag_at(s, h);
    let dp = tag_at(s, d);
    let hn = tag_at(s, h + 1);
    let hb = tag_at(s, h - 1);
    let dn = tag_at(s, d + 1);
    let db = tag_at(s, d - 1);

    let mut out = FeatureVector::new();
    let mut put = |base: String| {
        let (name, vals) = base.split_once(':').expect("template has a name");
        for b in &buckets {
            out.insert(format!("{name}.D:{vals}|{b}"));
        }
        out.insert(base);
    };

    put(format!("H:{hp}"));
    put(format!("D:{dp}"));
    put(format!("HD:{hp}|{dp}"));
    put(format!("HN.ND:{hp}|{hn}|{db}|{dp}"));
    put(format!("NH.DN:{hb}|{hp}|{dp}|{dn}"));

    let (lo, hi) = if h < d { (h, d) } else { (d, h) };
    let between: BTreeSet<&str> = ((lo + 1)..hi).map(|p| tag_at(s, p)).collect();
    for b in between {
        put(format!("HBD:{hp}|{b}|{dp}"));
    }

    if lexical {
        let hf = form_at(s, head);
        let hl = lemma_at(s, head);
        let df = form_at(s, dep);
        let dl = lemma_at(s, dep);
        put(format!("HF:{hf}"));
        put(format!("HL:{hl}"));
        put(format!("DF:{df}"));
        put(format!("DL:{dl}"));
        put(format!("HDF:{hf}|{df}"));
        put(format!("HDL:{hl}|{dl}"));
    }

    Ok(out)
}
