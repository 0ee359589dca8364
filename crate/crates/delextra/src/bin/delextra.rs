//! Command-line front end for the transfer pipeline. All logic lives in
//! the library; this binary only wires files and flags to it.

use std::collections::BTreeMap;
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use delextra::combination::combine_parses;
use delextra::conll::{read_treebank, read_treebank_from_path, write_treebank, Treebank};
use delextra::error::{Error, Result};
use delextra::eval::{per_pos_accuracy, uas, uas_nonpunct};
use delextra::experiment::{config_from_map, parse_config_text, read_weights_tsv, run_experiment};
use delextra::interpolation::{interpolate, normalize_model};
use delextra::model::ParserModel;
use delextra::parser::{parse_treebank, train_mira, ParseTree};
use delextra::similarity::{kl_cpos3, trigram_distribution, weight_ikl, TrigramDistribution};
use delextra::transform::{convert_treebank, Style};

#[derive(Parser)]
#[command(
    name = "delextra",
    version,
    about = "Cross-lingual transfer of delexicalized dependency parsers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convert adposition attachment style of a CoNLL stream.
    Convert {
        /// Style of the input: P (Prague) or S (Stanford).
        #[arg(long)]
        from: Style,
        /// Style to convert to.
        #[arg(long)]
        to: Style,
        /// Input file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train a parser model on a treebank.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Language tag recorded in the model; input file stem when omitted.
        #[arg(long)]
        language: Option<String>,
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        /// Also use word form and lemma features.
        #[arg(long)]
        lexical: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// Parse a CoNLL file with a trained model, replacing head columns.
    Parse {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// KL divergence matrix between target and source corpora.
    Similarity {
        /// Target corpus as lang=path (repeatable); bare paths use the
        /// file stem as the language.
        #[arg(long = "target", required = true)]
        targets: Vec<String>,
        /// Source corpus as lang=path (repeatable).
        #[arg(long = "source", required = true)]
        sources: Vec<String>,
        /// Directory for kl.tsv and weights.tsv; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vote several parses of the same text into one tree per sentence.
    Combine {
        /// Weight TSV (key = input file stem); uniform when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Parsed CoNLL files, one per voter.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Mix several models into one.
    Interpolate {
        /// Weight TSV (key = input file stem); uniform when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Skip per-model weight-SD normalization before mixing.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        output: PathBuf,
        /// Model files to mix.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Attachment scores of a predicted treebank against gold.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Run a full transfer experiment from a config file and/or flags.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key=value config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long)]
    target_lang: Option<String>,
    /// Source treebank as lang=path (repeatable).
    #[arg(long = "source")]
    sources: Vec<String>,
    /// concat, tree-comb, model-interp or single-source.
    #[arg(long)]
    method: Option<String>,
    /// none or ikl.
    #[arg(long)]
    weighting: Option<String>,
    /// Style setup, e.g. P/P/P or P,S/S/P.
    #[arg(long)]
    styles: Option<String>,
    #[arg(long)]
    input_style: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory for artifacts and report.tsv.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Convert {
            from,
            to,
            input,
            output,
        } => {
            let tb = read_input(input.as_deref())?;
            let converted = convert_treebank(&tb, from, to)?;
            write_output(&converted, output.as_deref())
        }
        Cmd::Train {
            input,
            language,
            iterations,
            lexical,
            output,
        } => {
            let tb = read_treebank_from_path(&input, language.as_deref().unwrap_or(""))?;
            let model = train_mira(&tb, iterations, lexical)?;
            model.save_to_path(&output)
        }
        Cmd::Parse {
            model,
            input,
            output,
        } => {
            let model = ParserModel::load_from_path(&model)?;
            let tb = read_treebank_from_path(&input, "")?;
            let parsed = parse_treebank(&model, &tb)?;
            write_output(&parsed, output.as_deref())
        }
        Cmd::Similarity {
            targets,
            sources,
            out,
        } => similarity_matrix(&targets, &sources, out.as_deref()),
        Cmd::Combine {
            weights,
            output,
            inputs,
        } => combine_files(weights.as_deref(), output.as_deref(), &inputs),
        Cmd::Interpolate {
            weights,
            raw,
            output,
            inputs,
        } => interpolate_files(weights.as_deref(), raw, &output, &inputs),
        Cmd::Eval { gold, pred } => {
            let gold = read_treebank_from_path(&gold, "gold")?;
            let pred = read_treebank_from_path(&pred, "pred")?;
            let mut out = String::from("metric\tkey\tvalue\n");
            out.push_str(&format!("uas\tall\t{:.6}\n", uas(&gold, &pred)?));
            if let Ok(np) = uas_nonpunct(&gold, &pred) {
                out.push_str(&format!("uas\tnonpunct\t{np:.6}\n"));
            }
            for (tag, acc) in per_pos_accuracy(&gold, &pred)? {
                out.push_str(&format!("uas\tpos:{tag}\t{acc:.6}\n"));
            }
            print!("{out}");
            Ok(())
        }
        Cmd::Experiment(args) => {
            let mut map = match &args.config {
                Some(path) => parse_config_text(&std::fs::read_to_string(path)?)?,
                None => BTreeMap::new(),
            };
            let mut set = |k: &str, v: Option<String>| {
                if let Some(v) = v {
                    map.insert(k.to_string(), v);
                }
            };
            set("target", args.target.map(|p| p.display().to_string()));
            set("target-lang", args.target_lang);
            set("method", args.method);
            set("weighting", args.weighting);
            set("styles", args.styles);
            set("input-style", args.input_style);
            set("iterations", args.iterations.map(|i| i.to_string()));
            set("out", args.out.map(|p| p.display().to_string()));
            for spec in &args.sources {
                let (lang, path) = lang_spec(spec)?;
                map.insert(format!("source.{lang}"), path.display().to_string());
            }
            let cfg = config_from_map(&map)?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_tsv());
            Ok(())
        }
    }
}

fn read_input(path: Option<&Path>) -> Result<Treebank> {
    match path {
        Some(p) => read_treebank_from_path(p, ""),
        None => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text)?;
            read_treebank(BufReader::new(text.as_bytes()), "stdin")
        }
    }
}

fn write_output(tb: &Treebank, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)?;
            write_treebank(tb, io::BufWriter::new(file))?;
        }
        None => {
            let stdout = io::stdout();
            write_treebank(tb, stdout.lock())?;
        }
    }
    Ok(())
}

/// Splits "lang=path"; a bare path falls back to its file stem.
fn lang_spec(spec: &str) -> Result<(String, PathBuf)> {
    if let Some((lang, path)) = spec.split_once('=') {
        if lang.is_empty() {
            return Err(Error::Config(format!("empty language in {spec:?}")));
        }
        return Ok((lang.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(spec);
    let lang = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Config(format!("cannot infer language from {spec:?}")))?;
    Ok((lang, path))
}

fn load_distributions(specs: &[String]) -> Result<Vec<(String, TrigramDistribution)>> {
    let mut out = Vec::new();
    for spec in specs {
        let (lang, path) = lang_spec(spec)?;
        let tb = read_treebank_from_path(&path, &lang)?;
        out.push((lang, trigram_distribution(&tb)?));
    }
    Ok(out)
}

fn similarity_matrix(targets: &[String], sources: &[String], out: Option<&Path>) -> Result<()> {
    let targets = load_distributions(targets)?;
    let sources = load_distributions(sources)?;
    let header = {
        let mut h = String::from("target");
        for (lang, _) in &sources {
            h.push('\t');
            h.push_str(lang);
        }
        h.push('\n');
        h
    };
    let mut kl_tsv = header.clone();
    let mut w_tsv = header;
    for (tgt_lang, tgt) in &targets {
        kl_tsv.push_str(tgt_lang);
        w_tsv.push_str(tgt_lang);
        for (_, src) in &sources {
            let kl = kl_cpos3(tgt, src);
            kl_tsv.push_str(&format!("\t{kl:.11e}"));
            w_tsv.push_str(&format!("\t{:.11e}", weight_ikl(kl)));
        }
        kl_tsv.push('\n');
        w_tsv.push('\n');
    }
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("kl.tsv"), kl_tsv)?;
            std::fs::write(dir.join("weights.tsv"), w_tsv)?;
        }
        None => {
            print!("# kl (natural log)\n{kl_tsv}# ikl-weights\n{w_tsv}");
        }
    }
    Ok(())
}

fn stem_of(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Config(format!("no file stem in {path:?}")))
}

/// Resolves per-input weights from a key=stem TSV; uniform when absent.
fn file_weights(paths: &[PathBuf], weights: Option<&Path>) -> Result<Option<Vec<f64>>> {
    let Some(wpath) = weights else {
        return Ok(None);
    };
    let map = read_weights_tsv(wpath)?;
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let stem = stem_of(p)?;
        let w = map.get(&stem).copied().ok_or_else(|| {
            Error::InvalidWeights(format!("no weight for input {stem:?} in weight file"))
        })?;
        out.push(w);
    }
    Ok(Some(out))
}

fn combine_files(weights: Option<&Path>, output: Option<&Path>, inputs: &[PathBuf]) -> Result<()> {
    let banks: Vec<Treebank> = inputs
        .iter()
        .map(|p| read_treebank_from_path(p, ""))
        .collect::<Result<_>>()?;
    let weight_vec = file_weights(inputs, weights)?.unwrap_or_else(|| vec![1.0; banks.len()]);
    let first = &banks[0];
    for b in &banks[1..] {
        if b.sentences.len() != first.sentences.len() {
            return Err(Error::ShapeMismatch(format!(
                "voters disagree on sentence count: {} vs {}",
                first.sentences.len(),
                b.sentences.len()
            )));
        }
    }
    let mut sentences = Vec::with_capacity(first.sentences.len());
    for (si, s) in first.sentences.iter().enumerate() {
        let trees: Vec<ParseTree> = banks
            .iter()
            .map(|b| ParseTree::new(b.sentences[si].heads()))
            .collect();
        let tree = combine_parses(&trees, &weight_vec)?;
        sentences.push(s.with_heads(&tree.heads));
    }
    let combined = Treebank::new(first.language.clone(), sentences);
    write_output(&combined, output)
}

fn interpolate_files(
    weights: Option<&Path>,
    raw: bool,
    output: &Path,
    inputs: &[PathBuf],
) -> Result<()> {
    let mut models = Vec::with_capacity(inputs.len());
    for p in inputs {
        let model = ParserModel::load_from_path(p)?;
        models.push(if raw {
            model
        } else {
            normalize_model(&model)?.model
        });
    }
    let weight_vec = file_weights(inputs, weights)?;
    let mixed = interpolate(&models, weight_vec.as_deref())?;
    mixed.save_to_path(output)
}
