//! Text masking strategies.
//!
//! Every strategy maps a token sequence of length `n` to a subsequence of at
//! most `k` tokens, preserving the original order. All strategies except
//! SW-CLIP always fill `min(n, k)` slots.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::freq::{mask_probability, FrequencyTable, Threshold};
use crate::postag::PosTag;
use crate::scalar::Scalar;
use crate::seed::record_rng;

/// Removal weight floor for frequency masking. Keeps words with zero masking
/// probability removable when more than `k` of them appear in one caption.
pub const REMOVAL_WEIGHT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Truncation,
    Random,
    Block,
    Syntax,
    Frequency,
    SwClip,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Truncation,
        Strategy::Random,
        Strategy::Block,
        Strategy::Syntax,
        Strategy::Frequency,
        Strategy::SwClip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Truncation => "truncation",
            Strategy::Random => "random",
            Strategy::Block => "block",
            Strategy::Syntax => "syntax",
            Strategy::Frequency => "frequency",
            Strategy::SwClip => "swclip",
        }
    }

    /// Whether output depends on the seed (and therefore on the epoch).
    pub fn is_stochastic(self) -> bool {
        !matches!(self, Strategy::Truncation | Strategy::Syntax)
    }

    pub fn needs_frequency_table(self) -> bool {
        matches!(self, Strategy::Frequency | Strategy::SwClip)
    }

    pub fn needs_tags(self) -> bool {
        self == Strategy::Syntax
    }

    /// Whether `|kept| = min(n, k)` is guaranteed.
    pub fn fills_all_slots(self) -> bool {
        self != Strategy::SwClip
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .or_else(|| s.eq_ignore_ascii_case("sw-clip").then_some(Strategy::SwClip))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy {s:?} (expected truncation, random, block, syntax, frequency or swclip)"
                ))
            })
    }
}

/// Retained tokens in original order plus their positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedOutput {
    pub kept: Vec<String>,
    pub kept_indices: Vec<usize>,
    pub strategy: Strategy,
}

impl MaskedOutput {
    /// `indices` must be strictly increasing and in bounds.
    pub fn from_indices<S: AsRef<str>>(tokens: &[S], indices: Vec<usize>, strategy: Strategy) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let kept = indices
            .iter()
            .map(|&i| tokens[i].as_ref().to_string())
            .collect();
        Self {
            kept,
            kept_indices: indices,
            strategy,
        }
    }

    fn identity<S: AsRef<str>>(tokens: &[S], strategy: Strategy) -> Self {
        Self::from_indices(tokens, (0..tokens.len()).collect(), strategy)
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// Kept tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.kept.join(" ")
    }
}

pub fn mask_truncation<S: AsRef<str>>(tokens: &[S], k: usize) -> MaskedOutput {
    let keep = tokens.len().min(k);
    MaskedOutput::from_indices(tokens, (0..keep).collect(), Strategy::Truncation)
}

/// Keep `k` positions chosen uniformly without replacement.
pub fn mask_random<S: AsRef<str>, R: Rng + ?Sized>(tokens: &[S], k: usize, rng: &mut R) -> MaskedOutput {
    let n = tokens.len();
    if n <= k {
        return MaskedOutput::identity(tokens, Strategy::Random);
    }
    let mut picked = rand::seq::index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    MaskedOutput::from_indices(tokens, picked, Strategy::Random)
}

/// Keep a contiguous window of `k` tokens. The start is uniform over all
/// `n - k + 1` windows, including the last one.
pub fn mask_block<S: AsRef<str>, R: Rng + ?Sized>(tokens: &[S], k: usize, rng: &mut R) -> MaskedOutput {
    let n = tokens.len();
    if n <= k {
        return MaskedOutput::identity(tokens, Strategy::Block);
    }
    let start = rng.gen_range(0..=n - k);
    MaskedOutput::from_indices(tokens, (start..start + k).collect(), Strategy::Block)
}

/// Keep `k` tokens by priority NN > JJ > VB > OTHER, earlier positions first
/// within a class.
pub fn mask_syntax<S: AsRef<str>>(tokens: &[S], tags: &[PosTag], k: usize) -> Result<MaskedOutput> {
    let n = tokens.len();
    if tags.len() != n {
        return Err(Error::LengthMismatch {
            tokens: n,
            tags: tags.len(),
        });
    }
    if n <= k {
        return Ok(MaskedOutput::identity(tokens, Strategy::Syntax));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (tags[i].priority(), i));
    order.truncate(k);
    order.sort_unstable();
    Ok(MaskedOutput::from_indices(tokens, order, Strategy::Syntax))
}

/// Remove exactly `n - k` tokens by weighted sampling without replacement.
///
/// Removal weight is `max(P(w), REMOVAL_WEIGHT_FLOOR)` with `P` the
/// subsampling probability. Sampling uses exponential keys `ln(u) / w`: the
/// removal order by descending key is distributed exactly like sequential
/// draws proportional to weight.
pub fn mask_frequency<S, F, R>(
    tokens: &[S],
    table: &FrequencyTable,
    threshold: Threshold<F>,
    k: usize,
    rng: &mut R,
) -> MaskedOutput
where
    S: AsRef<str>,
    F: Scalar,
    R: Rng + ?Sized,
{
    let n = tokens.len();
    if n <= k {
        return MaskedOutput::identity(tokens, Strategy::Frequency);
    }
    let floor = F::of(REMOVAL_WEIGHT_FLOOR);
    let mut keyed: Vec<(F, usize)> = tokens
        .iter()
        .enumerate()
        .map(|(i, tok)| {
            let weight = mask_probability(tok.as_ref(), table, threshold).max(floor);
            // u in (0, 1]
            let u = F::of(1.0 - rng.gen::<f64>());
            (u.ln() / weight, i)
        })
        .collect();
    let removals = n - k;
    keyed.select_nth_unstable_by(removals - 1, |a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let mut kept: Vec<usize> = keyed[removals..].iter().map(|&(_, i)| i).collect();
    kept.sort_unstable();
    MaskedOutput::from_indices(tokens, kept, Strategy::Frequency)
}

/// Mask every token independently with its subsampling probability and keep
/// at most the first `k` survivors. May leave slots unused.
pub fn mask_swclip<S, F, R>(
    tokens: &[S],
    table: &FrequencyTable,
    threshold: Threshold<F>,
    k: usize,
    rng: &mut R,
) -> MaskedOutput
where
    S: AsRef<str>,
    F: Scalar,
    R: Rng + ?Sized,
{
    let mut kept = Vec::with_capacity(tokens.len().min(k));
    for (i, tok) in tokens.iter().enumerate() {
        let p = mask_probability(tok.as_ref(), table, threshold);
        let masked = F::of(rng.gen::<f64>()) < p;
        if !masked {
            kept.push(i);
        }
    }
    kept.truncate(k);
    MaskedOutput::from_indices(tokens, kept, Strategy::SwClip)
}

/// Strategy selection and parameters shared by every record of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskingConfig<F> {
    pub strategy: Strategy,
    pub keep: usize,
    pub threshold: Threshold<F>,
    pub seed: u64,
    pub epoch: u64,
}

impl<F: Scalar> MaskingConfig<F> {
    pub fn new(strategy: Strategy, keep: usize) -> Result<Self> {
        if keep == 0 {
            return Err(Error::Config("keep-length k must be at least 1".into()));
        }
        Ok(Self {
            strategy,
            keep,
            threshold: Threshold::default(),
            seed: 0,
            epoch: 0,
        })
    }

    pub fn with_threshold(mut self, threshold: Threshold<F>) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epoch(mut self, epoch: u64) -> Self {
        self.epoch = epoch;
        self
    }
}

/// A validated [`MaskingConfig`] bound to its frequency table.
///
/// Per-record randomness comes from `(seed, epoch, record index)`, so the
/// result for a record never depends on processing order.
#[derive(Debug, Clone, Copy)]
pub struct Masker<'a, F> {
    config: MaskingConfig<F>,
    table: Option<&'a FrequencyTable>,
}

impl<'a, F: Scalar> Masker<'a, F> {
    pub fn new(config: MaskingConfig<F>, table: Option<&'a FrequencyTable>) -> Result<Self> {
        if config.keep == 0 {
            return Err(Error::Config("keep-length k must be at least 1".into()));
        }
        if config.strategy.needs_frequency_table() && table.is_none() {
            return Err(Error::Config(format!(
                "{} masking requires a frequency table",
                config.strategy
            )));
        }
        Ok(Self { config, table })
    }

    pub fn config(&self) -> &MaskingConfig<F> {
        &self.config
    }

    pub fn strategy(&self) -> Strategy {
        self.config.strategy
    }

    pub fn mask<S: AsRef<str>>(
        &self,
        record_index: u64,
        tokens: &[S],
        tags: Option<&[PosTag]>,
    ) -> Result<MaskedOutput> {
        let MaskingConfig {
            strategy,
            keep: k,
            threshold,
            seed,
            epoch,
        } = self.config;
        let table = || self.table.expect("checked in Masker::new");
        Ok(match strategy {
            Strategy::Truncation => mask_truncation(tokens, k),
            Strategy::Syntax => {
                let tags = tags.ok_or_else(|| {
                    Error::Config("syntax masking requires POS tags".into())
                })?;
                mask_syntax(tokens, tags, k)?
            }
            Strategy::Random => mask_random(tokens, k, &mut record_rng(seed, epoch, record_index)),
            Strategy::Block => mask_block(tokens, k, &mut record_rng(seed, epoch, record_index)),
            Strategy::Frequency => mask_frequency(
                tokens,
                table(),
                threshold,
                k,
                &mut record_rng(seed, epoch, record_index),
            ),
            Strategy::SwClip => mask_swclip(
                tokens,
                table(),
                threshold,
                k,
                &mut record_rng(seed, epoch, record_index),
            ),
        })
    }
}
