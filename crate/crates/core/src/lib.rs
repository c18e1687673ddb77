//! Caption masking for vision-language pre-training corpora.
//!
//! Six strategies reduce a caption to at most `k` words: truncation, random,
//! block, syntax (POS priority), word-frequency subsampling, and the
//! independent-Bernoulli SW-CLIP variant. Around them sit the pieces needed
//! to run them over real corpora (tokenizer, frequency tables, POS tagging,
//! streaming I/O) and to compare them (distribution, POS-share, token-budget,
//! length and slot-utilization reports).
//!
//! Floating-point code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiations.

pub mod analysis;
pub mod cli;
pub mod corpus_io;
pub mod error;
pub mod freq;
pub mod maskers;
pub mod parallel;
pub mod postag;
pub mod scalar;
pub mod seed;
pub mod synth;
pub mod tokenizer;

pub use error::{Error, Result};
pub use freq::{FrequencyTable, WordProbability};
pub use maskers::{MaskedOutput, Masker, Strategy};
pub use postag::{PosLexicon, PosTag};
pub use scalar::Scalar;
pub use tokenizer::{tokenize, TokenSequence};

pub type Threshold = freq::Threshold<f64>;
pub type Threshold32 = freq::Threshold<f32>;
pub type MaskingConfig = maskers::MaskingConfig<f64>;
pub type MaskingConfig32 = maskers::MaskingConfig<f32>;
pub type CorpusStats = analysis::CorpusStats<f64>;
pub type CorpusStats32 = analysis::CorpusStats<f32>;
pub type LengthMoments = analysis::LengthMoments<f64>;
pub type CurvePoint = freq::CurvePoint<f64>;
