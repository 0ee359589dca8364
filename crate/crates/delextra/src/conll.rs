//! Reading, writing and validating treebanks in a tab-separated CoNLL column
//! format.
//!
//! The column layout is fixed as `index form lemma upos head deprel`. The
//! `head` column may be absent (POS-tagged text without trees), in which case
//! every token is attached to the technical root. The `deprel` column is read
//! but ignored; structures are unlabelled throughout.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// The 12-value coarse universal POS tagset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Upos {
    Noun,
    Verb,
    /// Punctuation; written as `.` in the data.
    Punct,
    Adj,
    Adp,
    Pron,
    Conj,
    Adv,
    Prt,
    Num,
    Det,
    X,
}

impl Upos {
    pub const ALL: [Upos; 12] = [
        Upos::Noun,
        Upos::Verb,
        Upos::Punct,
        Upos::Adj,
        Upos::Adp,
        Upos::Pron,
        Upos::Conj,
        Upos::Adv,
        Upos::Prt,
        Upos::Num,
        Upos::Det,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Noun => "NOUN",
            Upos::Verb => "VERB",
            Upos::Punct => ".",
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Pron => "PRON",
            Upos::Conj => "CONJ",
            Upos::Adv => "ADV",
            Upos::Prt => "PRT",
            Upos::Num => "NUM",
            Upos::Det => "DET",
            Upos::X => "X",
        }
    }

    /// Parses one of the 12 tag values; anything else is `None`.
    pub fn parse(s: &str) -> Option<Upos> {
        Upos::ALL.iter().copied().find(|u| u.as_str() == s)
    }
}

impl std::fmt::Display for Upos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One word position. `head` is an index into the same sentence, with 0
/// denoting the technical root. Empty `form`/`lemma` stand for the `_`
/// placeholder in the file format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based position within the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: Upos,
    /// Index of the governing token; 0 is the technical root.
    pub head: usize,
}

/// A token sequence with an implicit technical root at index 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Sentence {
        Sentence { tokens }
    }

    /// Builds a delexicalized sentence from `(upos, head)` pairs. Forms and
    /// lemmas are left empty. Handy for tests and examples.
    pub fn from_tag_heads(pairs: &[(Upos, usize)]) -> Sentence {
        let tokens = pairs
            .iter()
            .enumerate()
            .map(|(i, &(upos, head))| Token {
                index: i + 1,
                form: String::new(),
                lemma: String::new(),
                upos,
                head,
            })
            .collect();
        Sentence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Head indices in token order: `heads()[i]` governs token `i + 1`.
    pub fn heads(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    /// UPOS tags in token order.
    pub fn tags(&self) -> Vec<Upos> {
        self.tokens.iter().map(|t| t.upos).collect()
    }

    /// Returns a copy with the head column replaced by `heads`.
    ///
    /// Panics if `heads.len()` differs from the sentence length.
    pub fn with_heads(&self, heads: &[usize]) -> Sentence {
        assert_eq!(heads.len(), self.len(), "head array length mismatch");
        let tokens = self
            .tokens
            .iter()
            .zip(heads)
            .map(|(t, &head)| Token { head, ..t.clone() })
            .collect();
        Sentence { tokens }
    }

    /// UPOS of the token at 1-based index `i`.
    pub fn upos_at(&self, i: usize) -> Upos {
        self.tokens[i - 1].upos
    }
}

/// A collection of sentences for one language.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Treebank {
    pub language: String,
    pub sentences: Vec<Sentence>,
}

impl Treebank {
    pub fn new(language: impl Into<String>, sentences: Vec<Sentence>) -> Treebank {
        Treebank {
            language: language.into(),
            sentences,
        }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

/// Counters accumulated while reading; real data is noisy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadStats {
    /// Tokens whose UPOS was outside the 12-value set and was mapped to X.
    pub unknown_upos: usize,
}

/// True iff the head values form a single tree over `{0..n}` rooted at the
/// technical root: all heads in range, no self-loops, every token reaches 0.
pub fn validate_tree(sentence: &Sentence) -> bool {
    let n = sentence.len();
    let heads = sentence.heads();
    for (i, &h) in heads.iter().enumerate() {
        if h > n || h == i + 1 {
            return false;
        }
    }
    // Follow head links; more than n steps without reaching 0 means a cycle.
    for start in 1..=n {
        let mut node = start;
        let mut steps = 0;
        while node != 0 {
            node = heads[node - 1];
            steps += 1;
            if steps > n {
                return false;
            }
        }
    }
    true
}

/// Reads a treebank, mapping unknown UPOS values to X and counting them.
pub fn read_treebank_with_stats<R: BufRead>(
    reader: R,
    language: &str,
) -> Result<(Treebank, ReadStats)> {
    let mut stats = ReadStats::default();
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();

    let flush = |tokens: &mut Vec<Token>, sentences: &mut Vec<Sentence>| -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        let sentence = Sentence::new(std::mem::take(tokens));
        if !validate_tree(&sentence) {
            return Err(Error::Structure {
                sentence: sentences.len() + 1,
                message: "head indices do not form a tree rooted at 0".into(),
            });
        }
        sentences.push(sentence);
        Ok(())
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sentences)?;
            continue;
        }
        let token = parse_token_line(&line, lineno, tokens.len() + 1, &mut stats)?;
        tokens.push(token);
    }
    flush(&mut tokens, &mut sentences)?;

    Ok((Treebank::new(language, sentences), stats))
}

/// Reads a treebank from a character stream. Sentences are blank-line
/// separated; `#` lines are comments. Every sentence is validated.
pub fn read_treebank<R: BufRead>(reader: R, language: &str) -> Result<Treebank> {
    read_treebank_with_stats(reader, language).map(|(tb, _)| tb)
}

/// Reads a treebank from a file, using the file stem as the language when
/// `language` is empty.
pub fn read_treebank_from_path(path: &Path, language: &str) -> Result<Treebank> {
    let lang = if language.is_empty() {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "und".to_string())
    } else {
        language.to_string()
    };
    let file = File::open(path)?;
    read_treebank(BufReader::new(file), &lang)
}

fn parse_token_line(
    line: &str,
    lineno: usize,
    expected_index: usize,
    stats: &mut ReadStats,
) -> Result<Token> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 4 || cols.len() > 6 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected 4-6 tab-separated columns, found {}", cols.len()),
        });
    }
    let index: usize = cols[0].parse().map_err(|_| Error::Parse {
        line: lineno,
        message: format!("invalid token index {:?}", cols[0]),
    })?;
    if index != expected_index {
        return Err(Error::Parse {
            line: lineno,
            message: format!("token index {index} out of sequence, expected {expected_index}"),
        });
    }
    let unescape = |s: &str| {
        if s == "_" {
            String::new()
        } else {
            s.to_string()
        }
    };
    let upos = match Upos::parse(cols[3]) {
        Some(u) => u,
        None => {
            stats.unknown_upos += 1;
            Upos::X
        }
    };
    // Missing head column (or "_") reads as attachment to the technical root,
    // so plain POS-tagged text loads as flat trees.
    let head = match cols.get(4) {
        None => 0,
        Some(&"_") => 0,
        Some(s) => s.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid head {s:?}"),
        })?,
    };
    Ok(Token {
        index,
        form: unescape(cols[1]),
        lemma: unescape(cols[2]),
        upos,
        head,
    })
}

/// Writes a treebank in the fixed six-column layout, one blank line after
/// each sentence. Reading the output back reproduces the input field for
/// field.
pub fn write_treebank<W: Write>(tb: &Treebank, mut sink: W) -> io::Result<()> {
    fn escape(s: &str) -> &str {
        if s.is_empty() {
            "_"
        } else {
            s
        }
    }
    for sentence in &tb.sentences {
        for t in &sentence.tokens {
            writeln!(
                sink,
                "{}\t{}\t{}\t{}\t{}\t_",
                t.index,
                escape(&t.form),
                escape(&t.lemma),
                t.upos,
                t.head
            )?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

/// Writes a treebank to a file path.
pub fn write_treebank_to_path(tb: &Treebank, path: &Path) -> Result<()> {
    let mut file = io::BufWriter::new(File::create(path)?);
    write_treebank(tb, &mut file)?;
    Ok(())
}
