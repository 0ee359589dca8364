//! End-to-end transfer experiments: load a target and several source
//! treebanks, train per-source parsers, transfer by one of four methods,
//! and write every artifact plus a TSV report into an output directory.
//!
//! Runs are fully deterministic: repeated execution of one configuration
//! produces byte-identical artifacts. Per-source training jobs may run on
//! a small worker pool (capped by `DELEXTRA_THREADS`), but results land
//! in per-job slots, so concurrency never changes the output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::combination::{combine_parses, concat_treebanks};
use crate::conll::{read_treebank_from_path, validate_tree, write_treebank_to_path, Treebank};
use crate::error::{Error, Result};
use crate::eval::{per_pos_accuracy, uas, uas_nonpunct};
use crate::interpolation::interpolated_model;
use crate::model::ParserModel;
use crate::parser::{parse_treebank, train_mira, ParseTree};
use crate::similarity::{kl_cpos3, trigram_distribution, weight_ikl};
use crate::transform::{convert_treebank, Style};

/// Annotation styles used along the pipeline, written "parse styles /
/// combination style / output style", e.g. "P,S/S/P".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StyleSetup {
    /// Styles the source treebanks are converted to before training;
    /// each (source, style) pair becomes one parser.
    pub parse_styles: Vec<Style>,
    /// Style the candidate parses are combined in.
    pub combine_style: Style,
    /// Style of the final output and of the evaluation gold.
    pub output_style: Style,
}

impl Default for StyleSetup {
    fn default() -> StyleSetup {
        StyleSetup {
            parse_styles: vec![Style::Prague],
            combine_style: Style::Prague,
            output_style: Style::Prague,
        }
    }
}

impl fmt::Display for StyleSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parse: Vec<&str> = self.parse_styles.iter().map(|s| s.as_str()).collect();
        write!(
            f,
            "{}/{}/{}",
            parse.join(","),
            self.combine_style,
            self.output_style
        )
    }
}

fn style_letter(s: &str, whole: &str) -> Result<Style> {
    match s {
        "P" => Ok(Style::Prague),
        "S" => Ok(Style::Stanford),
        _ => Err(Error::StyleSetup {
            input: whole.to_string(),
        }),
    }
}

/// Parses a style setup like "P/P/P" or "P,S/S/P". The grammar is exact:
/// single letters P or S, comma-separated in the first slot, three slots
/// separated by slashes, no whitespace.
pub fn parse_style_setup(text: &str) -> Result<StyleSetup> {
    let parts: Vec<&str> = text.split('/').collect();
    let [parse_part, combine_part, output_part] = parts[..] else {
        return Err(Error::StyleSetup {
            input: text.to_string(),
        });
    };
    let mut parse_styles = Vec::new();
    for piece in parse_part.split(',') {
        let style = style_letter(piece, text)?;
        if !parse_styles.contains(&style) {
            parse_styles.push(style);
        }
    }
    Ok(StyleSetup {
        parse_styles,
        combine_style: style_letter(combine_part, text)?,
        output_style: style_letter(output_part, text)?,
    })
}

/// How the source treebanks are turned into one target parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Train one parser on the concatenation of all sources.
    Concat,
    /// Parse with every source parser and vote the trees edge by edge.
    TreeComb,
    /// Normalize and linearly mix the source models, parse once.
    ModelInterp,
    /// Train only on the source closest to the target by KL divergence.
    SingleSource,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Concat => "concat",
            Method::TreeComb => "tree-comb",
            Method::ModelInterp => "model-interp",
            Method::SingleSource => "single-source",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "concat" => Ok(Method::Concat),
            "tree-comb" => Ok(Method::TreeComb),
            "model-interp" => Ok(Method::ModelInterp),
            "single-source" => Ok(Method::SingleSource),
            _ => Err(Error::Config(format!(
                "unknown method {s:?}: expected concat, tree-comb, model-interp or single-source"
            ))),
        }
    }
}

/// Source weighting scheme for tree combination and model interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    /// Inverse fourth power of the source's KL divergence from the target.
    Ikl,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Uniform => "none",
            Weighting::Ikl => "ikl",
        }
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Weighting> {
        match s {
            "none" | "uniform" => Ok(Weighting::Uniform),
            "ikl" => Ok(Weighting::Ikl),
            _ => Err(Error::Config(format!(
                "unknown weighting {s:?}: expected none or ikl"
            ))),
        }
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub target: PathBuf,
    pub target_lang: String,
    pub sources: BTreeMap<String, PathBuf>,
    pub method: Method,
    pub weighting: Weighting,
    pub styles: StyleSetup,
    /// Annotation style of the input treebanks.
    pub input_style: Style,
    pub iterations: usize,
    pub out: PathBuf,
}

/// Parses a flat `key=value` config file. `#` starts a comment; blank
/// lines are skipped; later duplicates win (command-line overrides are
/// merged the same way).
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {} is not key=value: {raw:?}",
                lineno + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: [&str; 8] = [
    "target",
    "target-lang",
    "method",
    "weighting",
    "styles",
    "input-style",
    "iterations",
    "out",
];

/// Builds a config from merged key=value pairs, applying defaults:
/// weighting none, styles P/P/P, input-style P, 3 iterations.
pub fn config_from_map(map: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
    let mut sources = BTreeMap::new();
    for (k, v) in map {
        if let Some(lang) = k.strip_prefix("source.") {
            if lang.is_empty() {
                return Err(Error::Config("empty source language code".into()));
            }
            sources.insert(lang.to_string(), PathBuf::from(v));
        } else if !KNOWN_KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!("unknown config key {k:?}")));
        }
    }
    if sources.is_empty() {
        return Err(Error::Config(
            "at least one source.<lang>=<path> entry is required".into(),
        ));
    }
    let required = |key: &str| {
        map.get(key)
            .cloned()
            .ok_or_else(|| Error::Config(format!("missing config key {key:?}")))
    };
    let target = PathBuf::from(required("target")?);
    let target_lang = match map.get("target-lang") {
        Some(l) => l.clone(),
        None => target
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "tgt".to_string()),
    };
    let method: Method = required("method")?.parse()?;
    let weighting = match map.get("weighting") {
        Some(w) => w.parse()?,
        None => Weighting::Uniform,
    };
    let styles = match map.get("styles") {
        Some(s) => parse_style_setup(s)?,
        None => StyleSetup::default(),
    };
    let input_style = match map.get("input-style") {
        Some(s) => s.parse()?,
        None => Style::Prague,
    };
    let iterations = match map.get("iterations") {
        Some(i) => i.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| {
            Error::Config(format!("iterations must be a positive integer, got {i:?}"))
        })?,
        None => 3,
    };
    let out = PathBuf::from(required("out")?);
    Ok(ExperimentConfig {
        target,
        target_lang,
        sources,
        method,
        weighting,
        styles,
        input_style,
        iterations,
        out,
    })
}

/// Reads a two-column `key<TAB>value` TSV of weights.
pub fn read_weights_tsv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut map = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('\t') else {
            return Err(Error::InvalidWeights(format!(
                "line {} is not key<TAB>value: {line:?}",
                lineno + 1
            )));
        };
        let w: f64 = v.trim().parse().map_err(|_| {
            Error::InvalidWeights(format!("bad weight {v:?} on line {}", lineno + 1))
        })?;
        map.insert(k.to_string(), w);
    }
    Ok(map)
}

/// Writes weights as `key<TAB>value` lines, keys sorted.
pub fn write_weights_tsv(map: &BTreeMap<String, f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (k, w) in map {
        out.push_str(&format!("{k}\t{w:.11e}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Report of one experiment run; renders to a deterministic TSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentReport {
    pub metadata: Vec<(String, String)>,
    /// (metric, key, formatted value) rows.
    pub rows: Vec<(String, String, String)>,
}

impl ExperimentReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# delextra experiment report\n");
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}\t{v}\n"));
        }
        out.push_str("metric\tkey\tvalue\n");
        for (metric, key, value) in &self.rows {
            out.push_str(&format!("{metric}\t{key}\t{value}\n"));
        }
        out
    }
}

fn parse_worker_cap(raw: Option<&str>) -> Result<Option<usize>> {
    match raw {
        None => Ok(None),
        Some(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .map(Some)
            .ok_or_else(|| {
                Error::Config(format!(
                    "DELEXTRA_THREADS must be a positive integer, got {v:?}"
                ))
            }),
    }
}

fn worker_count(jobs: usize) -> Result<usize> {
    let env = std::env::var("DELEXTRA_THREADS").ok();
    let cap = parse_worker_cap(env.as_deref())?.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    Ok(cap.min(jobs).max(1))
}

/// Trains one model per job on a bounded worker pool. Results are stored
/// per job slot, so the outcome is independent of scheduling.
fn train_all(jobs: &[Treebank], iterations: usize) -> Result<Vec<ParserModel>> {
    let workers = worker_count(jobs.len())?;
    if workers <= 1 || jobs.len() <= 1 {
        return jobs
            .iter()
            .map(|tb| train_mira(tb, iterations, false))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<ParserModel>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let result = train_mira(&jobs[i], iterations, false);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every job ran"))
        .collect()
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs the configured experiment, writes all artifacts under `cfg.out`
/// (models/, parsed/, output.conll, gold.conll, kl.tsv, weights.tsv,
/// report.tsv) and returns the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    stage("setup", fs::create_dir_all(&cfg.out).map_err(Error::from))?;
    stage(
        "setup",
        fs::create_dir_all(cfg.out.join("models")).map_err(Error::from),
    )?;

    let target_input = stage(
        "load-target",
        read_treebank_from_path(&cfg.target, &cfg.target_lang),
    )?;
    let mut sources: BTreeMap<String, Treebank> = BTreeMap::new();
    for (lang, path) in &cfg.sources {
        let tb = stage("load-sources", read_treebank_from_path(path, lang))?;
        sources.insert(lang.clone(), tb);
    }

    let gold = stage(
        "prepare-gold",
        convert_treebank(&target_input, cfg.input_style, cfg.styles.output_style),
    )?;
    stage(
        "write-artifacts",
        write_treebank_to_path(&gold, &cfg.out.join("gold.conll")),
    )?;

    let need_similarity = cfg.weighting == Weighting::Ikl || cfg.method == Method::SingleSource;
    let mut kl_map: BTreeMap<String, f64> = BTreeMap::new();
    let mut weight_map: BTreeMap<String, f64> = BTreeMap::new();
    if need_similarity {
        let tgt_dist = stage("similarity", trigram_distribution(&target_input))?;
        for (lang, tb) in &sources {
            let src_dist = stage("similarity", trigram_distribution(tb))?;
            let kl = kl_cpos3(&tgt_dist, &src_dist);
            kl_map.insert(lang.clone(), kl);
            weight_map.insert(lang.clone(), weight_ikl(kl));
        }
        stage(
            "write-artifacts",
            write_weights_tsv(&kl_map, &cfg.out.join("kl.tsv")),
        )?;
        if cfg.weighting == Weighting::Ikl {
            stage(
                "write-artifacts",
                write_weights_tsv(&weight_map, &cfg.out.join("weights.tsv")),
            )?;
        }
    }

    let mut metadata: Vec<(String, String)> = vec![
        ("method".into(), cfg.method.as_str().into()),
        ("weighting".into(), cfg.weighting.as_str().into()),
        ("styles".into(), cfg.styles.to_string()),
        ("input-style".into(), cfg.input_style.to_string()),
        ("target".into(), cfg.target_lang.clone()),
        (
            "sources".into(),
            cfg.sources.keys().cloned().collect::<Vec<_>>().join(","),
        ),
        ("iterations".into(), cfg.iterations.to_string()),
    ];
    if need_similarity {
        metadata.push(("kl-log-base".into(), "natural".into()));
        metadata.push((
            "kl-smoothing".into(),
            "unseen source trigrams counted as 1, denominator renormalized".into(),
        ));
    }

    let operative = cfg.styles.combine_style;
    let combined: Treebank = match cfg.method {
        Method::Concat => {
            metadata.push(("operative-style".into(), operative.to_string()));
            let converted: Vec<Treebank> = sources
                .values()
                .map(|tb| convert_treebank(tb, cfg.input_style, operative))
                .collect::<Result<_>>()
                .map_err(|e| e.in_stage("convert-sources"))?;
            let cat = stage("concat", concat_treebanks(&converted))?;
            let model = stage("train", train_mira(&cat, cfg.iterations, false))?;
            stage(
                "write-artifacts",
                model.save_to_path(&cfg.out.join(format!("models/concat-{operative}.model"))),
            )?;
            stage("parse", parse_treebank(&model, &target_input))?
        }
        Method::SingleSource => {
            metadata.push(("operative-style".into(), operative.to_string()));
            // Always the KL argmin, whatever the weighting flag says.
            let chosen = kl_map
                .iter()
                .fold(None::<(&str, f64)>, |best, (lang, &kl)| {
                    if best.map_or(true, |(_, b)| kl < b) {
                        Some((lang, kl))
                    } else {
                        best
                    }
                })
                .map(|(lang, _)| lang.to_string())
                .ok_or_else(|| {
                    Error::EmptyInput("no sources to select from".into()).in_stage("select-source")
                })?;
            metadata.push(("selected-source".into(), chosen.clone()));
            let converted = stage(
                "convert-sources",
                convert_treebank(&sources[&chosen], cfg.input_style, operative),
            )?;
            let model = stage("train", train_mira(&converted, cfg.iterations, false))?;
            stage(
                "write-artifacts",
                model.save_to_path(&cfg.out.join(format!("models/{chosen}-{operative}.model"))),
            )?;
            stage("parse", parse_treebank(&model, &target_input))?
        }
        Method::ModelInterp => {
            metadata.push(("operative-style".into(), operative.to_string()));
            let mut models: BTreeMap<String, ParserModel> = BTreeMap::new();
            let langs: Vec<&String> = sources.keys().collect();
            let jobs: Vec<Treebank> = sources
                .values()
                .map(|tb| convert_treebank(tb, cfg.input_style, operative))
                .collect::<Result<_>>()
                .map_err(|e| e.in_stage("convert-sources"))?;
            let trained = stage("train", train_all(&jobs, cfg.iterations))?;
            for (lang, model) in langs.iter().zip(trained) {
                stage(
                    "write-artifacts",
                    model.save_to_path(&cfg.out.join(format!("models/{lang}-{operative}.model"))),
                )?;
                models.insert((*lang).clone(), model);
            }
            let weights = (cfg.weighting == Weighting::Ikl).then_some(&weight_map);
            let mixed = stage("interpolate", interpolated_model(&models, weights))?;
            stage(
                "write-artifacts",
                mixed.save_to_path(&cfg.out.join("models/interpolated.model")),
            )?;
            stage("parse", parse_treebank(&mixed, &target_input))?
        }
        Method::TreeComb => {
            if cfg.weighting == Weighting::Ikl && cfg.styles.parse_styles.len() > 1 {
                metadata.push((
                    "style-weight-sharing".into(),
                    "each (source, style) parser carries its source's full weight".into(),
                ));
            }
            stage(
                "setup",
                fs::create_dir_all(cfg.out.join("parsed")).map_err(Error::from),
            )?;
            let mut keys: Vec<(String, Style)> = Vec::new();
            let mut jobs: Vec<Treebank> = Vec::new();
            for (lang, tb) in &sources {
                for &style in &cfg.styles.parse_styles {
                    keys.push((lang.clone(), style));
                    jobs.push(
                        convert_treebank(tb, cfg.input_style, style)
                            .map_err(|e| e.in_stage("convert-sources"))?,
                    );
                }
            }
            let trained = stage("train", train_all(&jobs, cfg.iterations))?;
            let mut votes: Vec<Treebank> = Vec::with_capacity(keys.len());
            let mut vote_weights: Vec<f64> = Vec::with_capacity(keys.len());
            for ((lang, style), model) in keys.iter().zip(&trained) {
                stage(
                    "write-artifacts",
                    model.save_to_path(&cfg.out.join(format!("models/{lang}-{style}.model"))),
                )?;
                let parsed = stage("parse", parse_treebank(model, &target_input))?;
                let in_combine_style = stage(
                    "convert-parses",
                    convert_treebank(&parsed, *style, cfg.styles.combine_style),
                )?;
                stage(
                    "write-artifacts",
                    write_treebank_to_path(
                        &in_combine_style,
                        &cfg.out.join(format!("parsed/{lang}-{style}.conll")),
                    ),
                )?;
                votes.push(in_combine_style);
                vote_weights.push(match cfg.weighting {
                    Weighting::Uniform => 1.0,
                    Weighting::Ikl => weight_map[lang],
                });
            }
            let mut sentences = Vec::with_capacity(target_input.sentences.len());
            for (si, s) in target_input.sentences.iter().enumerate() {
                let trees: Vec<ParseTree> = votes
                    .iter()
                    .map(|tb| ParseTree::new(tb.sentences[si].heads()))
                    .collect();
                let tree = stage("combine", combine_parses(&trees, &vote_weights))?;
                sentences.push(s.with_heads(&tree.heads));
            }
            Treebank::new(target_input.language.clone(), sentences)
        }
    };

    let output = stage(
        "convert-output",
        convert_treebank(&combined, cfg.styles.combine_style, cfg.styles.output_style),
    )?;
    for (i, s) in output.sentences.iter().enumerate() {
        if !validate_tree(s) {
            return Err(Error::Structure {
                sentence: i + 1,
                message: "experiment output is not a valid tree".into(),
            }
            .in_stage("validate-output"));
        }
    }
    stage(
        "write-artifacts",
        write_treebank_to_path(&output, &cfg.out.join("output.conll")),
    )?;

    let mut rows: Vec<(String, String, String)> = Vec::new();
    let all = stage("evaluate", uas(&gold, &output))?;
    rows.push(("uas".into(), "all".into(), format!("{all:.6}")));
    if let Ok(np) = uas_nonpunct(&gold, &output) {
        rows.push(("uas".into(), "nonpunct".into(), format!("{np:.6}")));
    }
    let per_pos = stage("evaluate", per_pos_accuracy(&gold, &output))?;
    for (tag, acc) in per_pos {
        rows.push(("uas".into(), format!("pos:{tag}"), format!("{acc:.6}")));
    }

    let report = ExperimentReport { metadata, rows };
    stage(
        "write-report",
        fs::write(cfg.out.join("report.tsv"), report.to_tsv()).map_err(Error::from),
    )?;
    Ok(report)
}
