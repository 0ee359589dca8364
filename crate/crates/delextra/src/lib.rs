//! Cross-lingual transfer of delexicalized dependency parsers.
//!
//! The toolkit trains first-order graph-based parsers on treebanks whose
//! only usable signal is the 12-value coarse POS tagset, then transfers
//! them to languages without training data. Core pieces:
//!
//! - [`conll`]: treebank reading, writing and tree validation
//! - [`transform`]: Prague/Stanford adposition-attachment conversion
//! - [`features`]: binary edge features over tags and bucketed distances
//! - [`parser`]: edge scoring, Chu-Liu-Edmonds decoding, MIRA training
//! - [`similarity`]: coarse-POS trigram KL divergence and iKL weights
//! - [`combination`]: treebank concatenation and weighted tree voting
//! - [`interpolation`]: model normalization and linear model mixing
//! - [`eval`]: attachment scores, overall and per POS tag
//! - [`experiment`]: configuration-driven transfer pipelines
//!
//! Everything is deterministic: same inputs, same bytes out.
//!
//! ```
//! use delextra::conll::{Sentence, Treebank, Upos};
//! use delextra::parser::{parse_treebank, train_mira};
//!
//! let tb = Treebank::new(
//!     "demo",
//!     vec![
//!         Sentence::from_tag_heads(&[(Upos::Det, 2), (Upos::Noun, 3), (Upos::Verb, 0)]),
//!         Sentence::from_tag_heads(&[(Upos::Pron, 2), (Upos::Verb, 0)]),
//!     ],
//! );
//! let model = train_mira(&tb, 3, false)?;
//! let parsed = parse_treebank(&model, &tb)?;
//! assert_eq!(parsed.sentences.len(), 2);
//! # Ok::<(), delextra::Error>(())
//! ```

pub mod combination;
pub mod conll;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod interpolation;
pub mod model;
pub mod parser;
pub mod similarity;
pub mod transform;

pub use error::{Error, Result};
