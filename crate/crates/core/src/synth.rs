//! Seeded synthetic corpora: Zipf-distributed captions and mixed
//! part-of-speech captions with known category shares.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;

use crate::postag::PosTag;
use crate::seed::RecordRng;

/// Zipf rank sampler: rank `r` (1-based) has weight `r^-exponent`.
#[derive(Debug, Clone)]
pub struct ZipfSampler {
    index: WeightedIndex<f64>,
    vocab: usize,
}

impl ZipfSampler {
    pub fn new(vocab: usize, exponent: f64) -> Self {
        assert!(vocab >= 1, "vocabulary must be nonempty");
        let weights: Vec<f64> = (1..=vocab).map(|r| (r as f64).powf(-exponent)).collect();
        Self {
            index: WeightedIndex::new(weights).expect("positive weights"),
            vocab,
        }
    }

    /// Draw a 0-based rank.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfCorpusConfig {
    pub captions: usize,
    pub vocab: usize,
    pub exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for ZipfCorpusConfig {
    /// 10k captions over 1k words, exponent 1, lengths 12..=32 (mean 22).
    fn default() -> Self {
        Self {
            captions: 10_000,
            vocab: 1_000,
            exponent: 1.0,
            min_len: 12,
            max_len: 32,
            seed: 0,
        }
    }
}

/// Word for a 0-based Zipf rank.
pub fn zipf_word(rank: usize) -> String {
    format!("w{}", rank + 1)
}

/// Streams captions as 0-based word ranks.
pub struct ZipfGenerator {
    sampler: ZipfSampler,
    rng: RecordRng,
    min_len: usize,
    max_len: usize,
    remaining: usize,
}

impl ZipfGenerator {
    pub fn new(config: &ZipfCorpusConfig) -> Self {
        assert!(config.min_len <= config.max_len);
        Self {
            sampler: ZipfSampler::new(config.vocab, config.exponent),
            rng: RecordRng::seed_from_u64(config.seed),
            min_len: config.min_len,
            max_len: config.max_len,
            remaining: config.captions,
        }
    }

    /// Fill `buf` with the next caption's ranks; false when exhausted.
    pub fn next_into(&mut self, buf: &mut Vec<usize>) -> bool {
        if self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        buf.clear();
        let len = self.rng.gen_range(self.min_len..=self.max_len);
        buf.extend((0..len).map(|_| self.sampler.sample(&mut self.rng)));
        true
    }
}

pub fn zipf_corpus(config: &ZipfCorpusConfig) -> Vec<Vec<String>> {
    let mut gen = ZipfGenerator::new(config);
    let mut buf = Vec::new();
    let mut out = Vec::with_capacity(config.captions);
    while gen.next_into(&mut buf) {
        out.push(buf.iter().map(|&r| zipf_word(r)).collect());
    }
    out
}

/// Captions whose tokens carry known POS categories. Each category draws
/// from its own Zipf vocabulary; OTHER is a small closed class, so its words
/// are frequent, as function words are in real captions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosCorpusConfig {
    pub captions: usize,
    /// Category probabilities in `PosTag::ALL` order (NN, JJ, VB, OTHER).
    pub shares: [f64; 4],
    pub vocab: [usize; 4],
    pub exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for PosCorpusConfig {
    /// Category shares follow a web caption corpus before masking.
    fn default() -> Self {
        Self {
            captions: 10_000,
            shares: [0.5030, 0.0498, 0.0518, 0.3955],
            vocab: [5_000, 500, 500, 50],
            exponent: 1.0,
            min_len: 12,
            max_len: 32,
            seed: 0,
        }
    }
}

fn pos_word(tag: PosTag, rank: usize) -> String {
    let prefix = match tag {
        PosTag::Noun => "nn",
        PosTag::Adjective => "jj",
        PosTag::Verb => "vb",
        PosTag::Other => "ot",
    };
    format!("{prefix}{}", rank + 1)
}

pub fn pos_corpus(config: &PosCorpusConfig) -> Vec<(Vec<String>, Vec<PosTag>)> {
    let categories = WeightedIndex::new(config.shares).expect("valid category shares");
    let samplers: Vec<ZipfSampler> = config
        .vocab
        .iter()
        .map(|&v| ZipfSampler::new(v, config.exponent))
        .collect();
    let mut rng = RecordRng::seed_from_u64(config.seed);
    (0..config.captions)
        .map(|_| {
            let len = rng.gen_range(config.min_len..=config.max_len);
            (0..len)
                .map(|_| {
                    let c = categories.sample(&mut rng);
                    let tag = PosTag::ALL[c];
                    (pos_word(tag, samplers[c].sample(&mut rng)), tag)
                })
                .unzip()
        })
        .collect()
}
