//! Parser model container and its portable text format.
//!
//! A model is a sparse map from feature strings to real weights plus
//! metadata describing how it was produced. The file format is line
//! oriented: a magic line, tab-separated header pairs, a `---` separator,
//! then one `feature<TAB>weight` line per nonzero weight. Weights are
//! printed with 12 significant digits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::TEMPLATE_VERSION;

const MAGIC: &str = "delextra-model v1";

/// Header fields carried in the model file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMeta {
    /// Feature inventory the weights refer to.
    pub template_version: String,
    /// Language of the training treebank ("multi" for mixed sources).
    pub language: String,
    /// True when the model uses no word form or lemma features.
    pub delex: bool,
    /// Free-form extras (training settings, interpolation sources, ...).
    pub info: BTreeMap<String, String>,
}

impl ModelMeta {
    pub fn new(language: impl Into<String>, delex: bool) -> ModelMeta {
        ModelMeta {
            template_version: TEMPLATE_VERSION.to_string(),
            language: language.into(),
            delex,
            info: BTreeMap::new(),
        }
    }
}

/// A trained (or combined) edge-scoring model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParserModel {
    pub meta: ModelMeta,
    /// Sparse feature weights; zero entries are never stored.
    pub weights: BTreeMap<String, f64>,
}

impl ParserModel {
    /// Builds a model, dropping zero weights and rejecting non-finite ones.
    pub fn new(meta: ModelMeta, weights: BTreeMap<String, f64>) -> Result<ParserModel> {
        for (f, w) in &weights {
            if !w.is_finite() {
                return Err(Error::ModelFormat(format!(
                    "non-finite weight {w} for feature {f:?}"
                )));
            }
        }
        let weights = weights.into_iter().filter(|&(_, w)| w != 0.0).collect();
        Ok(ParserModel { meta, weights })
    }

    pub fn empty(meta: ModelMeta) -> ParserModel {
        ParserModel {
            meta,
            weights: BTreeMap::new(),
        }
    }

    pub fn weight(&self, feature: &str) -> f64 {
        self.weights.get(feature).copied().unwrap_or(0.0)
    }

    /// Fails unless `other` was extracted with the same template inventory.
    pub fn check_compatible(&self, other: &ParserModel) -> Result<()> {
        if self.meta.template_version != other.meta.template_version {
            return Err(Error::TemplateMismatch {
                expected: self.meta.template_version.clone(),
                found: other.meta.template_version.clone(),
            });
        }
        Ok(())
    }

    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "{MAGIC}")?;
        writeln!(sink, "template-version\t{}", self.meta.template_version)?;
        writeln!(sink, "language\t{}", self.meta.language)?;
        writeln!(sink, "delex\t{}", self.meta.delex)?;
        for (k, v) in &self.meta.info {
            if !is_reserved_key(k) {
                writeln!(sink, "{k}\t{v}")?;
            }
        }
        writeln!(sink, "---")?;
        for (f, w) in &self.weights {
            writeln!(sink, "{f}\t{w:.11e}")?;
        }
        Ok(())
    }

    pub fn save_to_path(&self, path: &Path) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        self.save(&mut file)
    }

    pub fn load<R: BufRead>(reader: R) -> Result<ParserModel> {
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(first)) if first == MAGIC => {}
            Some(Ok(first)) => {
                return Err(Error::ModelFormat(format!(
                    "expected header {MAGIC:?}, found {first:?}"
                )))
            }
            Some(Err(e)) => return Err(e.into()),
            None => return Err(Error::ModelFormat("empty model file".into())),
        }

        let mut meta = ModelMeta::new("", true);
        meta.template_version.clear();
        let mut in_header = true;
        let mut weights = BTreeMap::new();
        for line in lines {
            let line = line?;
            if in_header {
                if line == "---" {
                    in_header = false;
                    continue;
                }
                let Some((k, v)) = line.split_once('\t') else {
                    return Err(Error::ModelFormat(format!("bad header line {line:?}")));
                };
                match k {
                    "template-version" => meta.template_version = v.to_string(),
                    "language" => meta.language = v.to_string(),
                    "delex" => {
                        meta.delex = v
                            .parse()
                            .map_err(|_| Error::ModelFormat(format!("bad delex flag {v:?}")))?
                    }
                    _ => {
                        meta.info.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let Some((f, w)) = line.rsplit_once('\t') else {
                return Err(Error::ModelFormat(format!("bad weight line {line:?}")));
            };
            let w: f64 = w
                .parse()
                .map_err(|_| Error::ModelFormat(format!("bad weight value {w:?}")))?;
            if !w.is_finite() {
                return Err(Error::ModelFormat(format!("non-finite weight {w}")));
            }
            if w != 0.0 {
                weights.insert(f.to_string(), w);
            }
        }
        if in_header {
            return Err(Error::ModelFormat("missing --- separator".into()));
        }
        if meta.template_version.is_empty() {
            return Err(Error::ModelFormat("missing template-version".into()));
        }
        Ok(ParserModel { meta, weights })
    }

    pub fn load_from_path(path: &Path) -> Result<ParserModel> {
        let file = File::open(path)?;
        ParserModel::load(BufReader::new(file))
    }
}

fn is_reserved_key(k: &str) -> bool {
    matches!(k, "template-version" | "language" | "delex")
}
