//! First-order graph parsing: edge scoring, maximum spanning arborescence
//! decoding and online large-margin training.
//!
//! A sentence is parsed by scoring every directed edge of the complete
//! graph over its tokens plus the technical root, then extracting the
//! highest-scoring arborescence rooted at node 0 with the Chu-Liu-Edmonds
//! algorithm. Ties are broken deterministically: higher score, then lower
//! head index, then shorter edge, then lower dependent index.

use std::collections::BTreeMap;

use crate::conll::{validate_tree, Sentence, Treebank};
use crate::error::{Error, Result};
use crate::features::{extract_edge_features, FeatureVector};
use crate::model::{ModelMeta, ParserModel};

/// MIRA aggressiveness cap.
pub const MIRA_C: f64 = 1.0;

/// Dense scores of the complete directed graph over one sentence. Node 0
/// is the technical root; it has no incoming edges and the diagonal is
/// unused.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScores {
    n: usize,
    scores: Vec<f64>,
}

impl EdgeScores {
    /// All-zero scores for a sentence of `n` tokens.
    pub fn new(n: usize) -> EdgeScores {
        EdgeScores {
            n,
            scores: vec![0.0; (n + 1) * (n + 1)],
        }
    }

    pub fn from_fn(n: usize, mut score: impl FnMut(usize, usize) -> f64) -> EdgeScores {
        let mut es = EdgeScores::new(n);
        for h in 0..=n {
            for d in 1..=n {
                if h != d {
                    es.set(h, d, score(h, d));
                }
            }
        }
        es
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, head: usize, dep: usize) -> f64 {
        self.scores[head * (self.n + 1) + dep]
    }

    pub fn set(&mut self, head: usize, dep: usize, score: f64) {
        debug_assert!(head != dep && dep >= 1 && head <= self.n && dep <= self.n);
        self.scores[head * (self.n + 1) + dep] = score;
    }

    /// Total score of a head assignment.
    pub fn tree_score(&self, tree: &ParseTree) -> f64 {
        tree.heads
            .iter()
            .enumerate()
            .map(|(i, &h)| self.get(h, i + 1))
            .sum()
    }
}

/// A dependency tree as a head array: `heads[i]` governs token `i + 1`,
/// with 0 for the technical root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    pub heads: Vec<usize>,
}

impl ParseTree {
    pub fn new(heads: Vec<usize>) -> ParseTree {
        ParseTree { heads }
    }
}

/// Scores every candidate edge of a sentence under a model. Lexical
/// features are read only when the model was trained with them.
pub fn score_edges(model: &ParserModel, s: &Sentence) -> Result<EdgeScores> {
    let n = s.len();
    let mut es = EdgeScores::new(n);
    for h in 0..=n {
        for d in 1..=n {
            if h == d {
                continue;
            }
            let feats = extract_edge_features(s, h, d, !model.meta.delex)?;
            es.set(h, d, sum_weights(model, &feats));
        }
    }
    Ok(es)
}

fn sum_weights(model: &ParserModel, feats: &FeatureVector) -> f64 {
    feats.iter().map(|f| model.weight(f)).sum()
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    score: f64,
    orig_head: usize,
    orig_dep: usize,
}

fn better(a: &Cell, b: &Cell) -> bool {
    if a.score != b.score {
        return a.score > b.score;
    }
    if a.orig_head != b.orig_head {
        return a.orig_head < b.orig_head;
    }
    let la = a.orig_head.abs_diff(a.orig_dep);
    let lb = b.orig_head.abs_diff(b.orig_dep);
    if la != lb {
        return la < lb;
    }
    a.orig_dep < b.orig_dep
}

/// Chu-Liu-Edmonds on a dense matrix of candidate cells. Node 0 is the
/// root. Returns, for every node 1..k, its chosen incoming edge as
/// (current-graph head, cell carrying the original edge).
fn solve(matrix: &[Vec<Option<Cell>>]) -> Vec<(usize, Cell)> {
    let k = matrix.len();
    let mut best: Vec<Option<(usize, Cell)>> = vec![None; k];
    for d in 1..k {
        for (h, row) in matrix.iter().enumerate() {
            if h == d {
                continue;
            }
            if let Some(c) = row[d] {
                if best[d].map_or(true, |(_, b)| better(&c, &b)) {
                    best[d] = Some((h, c));
                }
            }
        }
    }

    // Walk the chosen-head pointers looking for a cycle.
    let mut color = vec![0u8; k];
    color[0] = 2;
    let mut cycle: Vec<usize> = Vec::new();
    for start in 1..k {
        if color[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut v = start;
        while color[v] == 0 {
            color[v] = 1;
            path.push(v);
            v = best[v].expect("complete graph").0;
        }
        if color[v] == 1 && cycle.is_empty() {
            let pos = path.iter().position(|&x| x == v).unwrap();
            cycle = path[pos..].to_vec();
        }
        for &p in &path {
            color[p] = 2;
        }
        if !cycle.is_empty() {
            break;
        }
    }

    if cycle.is_empty() {
        return (1..k).map(|d| best[d].unwrap()).collect();
    }

    // Contract the cycle into one node and recurse on the smaller graph.
    let mut in_cycle = vec![false; k];
    for &m in &cycle {
        in_cycle[m] = true;
    }
    let mut old_to_new = vec![usize::MAX; k];
    let mut new_to_old = Vec::new();
    for v in 0..k {
        if !in_cycle[v] {
            old_to_new[v] = new_to_old.len();
            new_to_old.push(v);
        }
    }
    let c_id = new_to_old.len();
    let k2 = c_id + 1;

    let mut matrix2: Vec<Vec<Option<Cell>>> = vec![vec![None; k2]; k2];
    // Which cycle member an outside node's edge into the cycle enters,
    // and which member an edge leaving the cycle departs from.
    let mut entry: Vec<Option<usize>> = vec![None; k2];
    let mut exit: Vec<Option<usize>> = vec![None; k2];
    for u in 0..k {
        if in_cycle[u] {
            continue;
        }
        let nu = old_to_new[u];
        for v in 0..k {
            if u == v {
                continue;
            }
            let Some(cell) = matrix[u][v] else { continue };
            if !in_cycle[v] {
                matrix2[nu][old_to_new[v]] = Some(cell);
            } else {
                // Entering the cycle at v: pay the score of the cycle edge
                // into v that this edge would displace.
                let adjusted = Cell {
                    score: cell.score - best[v].unwrap().1.score,
                    ..cell
                };
                if matrix2[nu][c_id].map_or(true, |b| better(&adjusted, &b)) {
                    matrix2[nu][c_id] = Some(adjusted);
                    entry[nu] = Some(v);
                }
            }
        }
    }
    for &m in &cycle {
        for v in 0..k {
            if in_cycle[v] || v == 0 {
                continue;
            }
            let Some(cell) = matrix[m][v] else { continue };
            let nv = old_to_new[v];
            if matrix2[c_id][nv].map_or(true, |b| better(&cell, &b)) {
                matrix2[c_id][nv] = Some(cell);
                exit[nv] = Some(m);
            }
        }
    }

    let solved = solve(&matrix2);
    // Rebuild the answer indexed by dependent in this frame's id space.
    let mut result: Vec<Option<(usize, Cell)>> = vec![None; k];
    let mut entered_at = None;
    let mut outer_into_cycle = None;
    for (i, &(h2, cell)) in solved.iter().enumerate() {
        let d2 = i + 1;
        if d2 == c_id {
            entered_at = Some(entry[h2].expect("cycle entry recorded"));
            outer_into_cycle = Some((new_to_old[h2], cell));
        } else {
            // An edge from the contracted node really leaves its recorded
            // exit member.
            let h = if h2 == c_id {
                exit[d2].expect("cycle exit recorded")
            } else {
                new_to_old[h2]
            };
            result[new_to_old[d2]] = Some((h, cell));
        }
    }
    let entered_at = entered_at.expect("contracted node has a head");
    result[entered_at] = outer_into_cycle;
    for &m in &cycle {
        if m != entered_at {
            result[m] = Some(best[m].unwrap());
        }
    }
    (1..k)
        .map(|d| result[d].expect("spanning solution"))
        .collect()
}

/// Finds the maximum spanning arborescence rooted at the technical root.
pub fn decode(es: &EdgeScores) -> ParseTree {
    let n = es.n();
    if n == 0 {
        return ParseTree::new(Vec::new());
    }
    let k = n + 1;
    let mut matrix: Vec<Vec<Option<Cell>>> = vec![vec![None; k]; k];
    for h in 0..k {
        for d in 1..k {
            if h != d {
                matrix[h][d] = Some(Cell {
                    score: es.get(h, d),
                    orig_head: h,
                    orig_dep: d,
                });
            }
        }
    }
    let mut heads = vec![0usize; n];
    for (_, cell) in solve(&matrix) {
        heads[cell.orig_dep - 1] = cell.orig_head;
    }
    let tree = ParseTree::new(heads);
    debug_assert!(validate_tree(&Sentence::from_tag_heads(
        &tree
            .heads
            .iter()
            .map(|&h| (crate::conll::Upos::X, h))
            .collect::<Vec<_>>()
    )));
    tree
}

/// Reference decoder that enumerates every head assignment. Exponential;
/// usable only for short sentences. Applies the same tie-breaking order
/// as `decode`.
pub fn decode_exhaustive(es: &EdgeScores) -> ParseTree {
    let n = es.n();
    assert!(n <= 8, "exhaustive decoding is exponential");
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut heads = vec![0usize; n];
    loop {
        let probe = Sentence::from_tag_heads(
            &heads
                .iter()
                .map(|&h| (crate::conll::Upos::X, h))
                .collect::<Vec<_>>(),
        );
        if validate_tree(&probe) {
            let score = heads
                .iter()
                .enumerate()
                .map(|(i, &h)| es.get(h, i + 1))
                .sum::<f64>();
            if best.as_ref().map_or(true, |(s, _)| score > *s) {
                best = Some((score, heads.clone()));
            }
        }
        // odometer over head assignments in [0, n]^n
        let mut pos = 0;
        loop {
            if pos == n {
                let (_, h) = best.expect("at least the flat tree is valid");
                return ParseTree::new(h);
            }
            heads[pos] += 1;
            if heads[pos] <= n {
                break;
            }
            heads[pos] = 0;
            pos += 1;
        }
    }
}

/// Parses one sentence with a model.
pub fn parse_sentence(model: &ParserModel, s: &Sentence) -> Result<ParseTree> {
    Ok(decode(&score_edges(model, s)?))
}

/// Parses every sentence, keeping tokens and replacing heads.
pub fn parse_treebank(model: &ParserModel, tb: &Treebank) -> Result<Treebank> {
    let mut sentences = Vec::with_capacity(tb.sentences.len());
    for s in &tb.sentences {
        let tree = parse_sentence(model, s)?;
        sentences.push(s.with_heads(&tree.heads));
    }
    Ok(Treebank::new(tb.language.clone(), sentences))
}

/// Trains a model with single-best MIRA: per sentence, decode under the
/// current weights and, when the prediction is imperfect, move the weights
/// just enough to separate gold from the prediction by its Hamming loss,
/// capped at `MIRA_C`. Sentences are visited strictly in file order with
/// no shuffling; the returned weights are averaged over every visit, so
/// training is bit-for-bit reproducible.
pub fn train_mira(tb: &Treebank, iterations: usize, lexical: bool) -> Result<ParserModel> {
    if tb.sentences.is_empty() {
        return Err(Error::EmptyInput(format!(
            "cannot train on empty treebank {:?}",
            tb.language
        )));
    }
    for (i, s) in tb.sentences.iter().enumerate() {
        if !validate_tree(s) {
            return Err(Error::Structure {
                sentence: i + 1,
                message: "training sentence is not a valid tree".into(),
            });
        }
    }

    // Feature vectors per sentence, extracted once.
    let mut all_feats: Vec<Vec<FeatureVector>> = Vec::with_capacity(tb.sentences.len());
    for s in &tb.sentences {
        let n = s.len();
        let mut per_edge = vec![FeatureVector::new(); (n + 1) * (n + 1)];
        for h in 0..=n {
            for d in 1..=n {
                if h != d {
                    per_edge[h * (n + 1) + d] = extract_edge_features(s, h, d, lexical)?;
                }
            }
        }
        all_feats.push(per_edge);
    }

    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    let mut acc: BTreeMap<String, f64> = BTreeMap::new();
    let total_visits = (iterations * tb.sentences.len()) as f64;
    let mut visit = 0u64;

    for _ in 0..iterations {
        for (s, feats) in tb.sentences.iter().zip(&all_feats) {
            visit += 1;
            let n = s.len();
            let edge_feats = |h: usize, d: usize| &feats[h * (n + 1) + d];
            let es = EdgeScores::from_fn(n, |h, d| {
                edge_feats(h, d)
                    .iter()
                    .map(|f| weights.get(f).copied().unwrap_or(0.0))
                    .sum()
            });
            let pred = decode(&es).heads;
            let gold = s.heads();
            if pred == gold {
                continue;
            }

            let loss = pred.iter().zip(&gold).filter(|(p, g)| p != g).count() as f64;
            let mut delta: BTreeMap<&str, f64> = BTreeMap::new();
            let mut s_gold = 0.0;
            let mut s_pred = 0.0;
            for i in 0..n {
                for f in edge_feats(gold[i], i + 1) {
                    *delta.entry(f).or_insert(0.0) += 1.0;
                }
                for f in edge_feats(pred[i], i + 1) {
                    *delta.entry(f).or_insert(0.0) -= 1.0;
                }
                s_gold += es.get(gold[i], i + 1);
                s_pred += es.get(pred[i], i + 1);
            }
            let norm_sq: f64 = delta.values().map(|d| d * d).sum();
            if norm_sq == 0.0 {
                continue;
            }
            let tau = ((loss + s_pred - s_gold) / norm_sq).max(0.0).min(MIRA_C);
            if tau == 0.0 {
                continue;
            }
            let past = (visit - 1) as f64;
            for (f, d) in delta {
                if d != 0.0 {
                    *weights.entry(f.to_string()).or_insert(0.0) += tau * d;
                    *acc.entry(f.to_string()).or_insert(0.0) += past * tau * d;
                }
            }
        }
    }

    let averaged: BTreeMap<String, f64> = weights
        .iter()
        .map(|(f, &w)| {
            let a = acc.get(f).copied().unwrap_or(0.0);
            (f.clone(), w - a / total_visits)
        })
        .collect();

    let mut meta = ModelMeta::new(tb.language.clone(), !lexical);
    meta.info.insert("trainer".into(), "mira".into());
    meta.info.insert("mira-c".into(), format!("{MIRA_C}"));
    meta.info.insert("mira-averaged".into(), "true".into());
    meta.info.insert("mira-shuffle".into(), "false".into());
    meta.info
        .insert("iterations".into(), iterations.to_string());
    ParserModel::new(meta, averaged)
}
