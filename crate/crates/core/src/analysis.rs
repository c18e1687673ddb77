//! Corpus diagnostics: word-frequency distributions before and after
//! masking, POS-category shares, token budgets, caption length statistics,
//! and slot utilization.
//!
//! Every report renders as an aligned text table and as CSV. Column layouts:
//!
//! | report | columns |
//! |--------|---------|
//! | distribution | `rank,word,before,after_<strategy>...` |
//! | pos | `strategy,NN,JJ,VB,OTHER,total,NN_pct,JJ_pct,VB_pct,OTHER_pct` |
//! | budget | `image_tokens,text_tokens,total,percentage` |
//! | stats | `sample_count,total_words,mean,std` |
//! | slots | `strategy,slot_utilization` |

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::maskers::{MaskedOutput, Strategy};
use crate::postag::PosTag;
use crate::scalar::Scalar;
use crate::tokenizer::is_special_token;

pub const DEFAULT_TOP_N: usize = 50;
pub const DEFAULT_IMAGE_PATCHES: usize = 196;
pub const DEFAULT_TEXT_CONTEXT: usize = 32;
pub const DEFAULT_IMAGE_MASK_RATIO: f64 = 0.75;

/// Outputs of one strategy over a whole corpus, in record order.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedCorpus {
    pub strategy: Strategy,
    pub outputs: Vec<MaskedOutput>,
}

fn check_records(label: &str, before: usize, after: usize) -> Result<()> {
    if before == after {
        Ok(())
    } else {
        Err(Error::RecordCountMismatch {
            label: label.to_string(),
            before,
            after,
        })
    }
}

/// `num / den` as a percentage in hundredths, rounded half-up. Exact.
pub fn percent_hundredths(num: u64, den: u64) -> u64 {
    assert!(den > 0, "percentage of an empty total");
    let num = num as u128 * 10_000;
    let den = den as u128;
    ((2 * num + den) / (2 * den)) as u64
}

pub fn format_hundredths(h: u64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

/// Occurrence counts of non-special words.
pub fn word_counts<'a, I, S>(sequences: I) -> HashMap<String, u64>
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for seq in sequences {
        for tok in seq {
            let tok = tok.as_ref();
            if is_special_token(tok) {
                continue;
            }
            match counts.get_mut(tok) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(tok.to_string(), 1);
                }
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionRow {
    pub rank: usize,
    pub word: String,
    pub before: u64,
    /// One count per strategy, in [`DistributionReport::strategies`] order.
    pub after: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionReport {
    pub strategies: Vec<Strategy>,
    pub rows: Vec<DistributionRow>,
}

/// Top `top_n` words of the original corpus (punctuation excluded) with
/// their counts after each masking strategy. Ties rank lexicographically.
pub fn distribution_report<T, S>(before: &[T], after: &[MaskedCorpus], top_n: usize) -> Result<DistributionReport>
where
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    if top_n == 0 {
        return Err(Error::Config("top-n must be at least 1".into()));
    }
    for m in after {
        check_records(m.strategy.name(), before.len(), m.outputs.len())?;
    }
    let counts_before = word_counts(before.iter().map(AsRef::as_ref));
    let counts_after: Vec<HashMap<String, u64>> = after
        .iter()
        .map(|m| word_counts(m.outputs.iter().map(|o| o.kept.as_slice())))
        .collect();

    let mut ranked: Vec<(&String, u64)> = counts_before.iter().map(|(w, &c)| (w, c)).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let rows = ranked
        .into_iter()
        .take(top_n)
        .enumerate()
        .map(|(i, (word, before))| DistributionRow {
            rank: i + 1,
            word: word.clone(),
            before,
            after: counts_after
                .iter()
                .map(|c| c.get(word).copied().unwrap_or(0))
                .collect(),
        })
        .collect();
    Ok(DistributionReport {
        strategies: after.iter().map(|m| m.strategy).collect(),
        rows,
    })
}

impl DistributionReport {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["rank".to_string(), "word".to_string(), "before".to_string()];
        h.extend(self.strategies.iter().map(|s| format!("after_{s}")));
        h
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut rec = vec![r.rank.to_string(), r.word.clone(), r.before.to_string()];
                rec.extend(r.after.iter().map(u64::to_string));
                rec
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(out, &self.header(), &self.records())
    }

    pub fn render(&self) -> String {
        render_table(&self.header(), &self.records())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosShareRow {
    /// `before` or a strategy name.
    pub label: String,
    /// Counts in `PosTag::ALL` order.
    pub counts: [u64; 4],
    pub total: u64,
}

impl PosShareRow {
    fn from_tags<'a>(label: &str, tags: impl IntoIterator<Item = &'a PosTag>) -> Self {
        let mut counts = [0u64; 4];
        for t in tags {
            counts[t.index()] += 1;
        }
        Self {
            label: label.to_string(),
            counts,
            total: counts.iter().sum(),
        }
    }

    pub fn count(&self, tag: PosTag) -> u64 {
        self.counts[tag.index()]
    }

    /// Share of `tag` in percent; zero for an empty row.
    pub fn percentage<F: Scalar>(&self, tag: PosTag) -> F {
        if self.total == 0 {
            return F::zero();
        }
        F::of(100.0) * F::of_count(self.count(tag)) / F::of_count(self.total)
    }

    /// Percentage rounded half-up to hundredths.
    pub fn rounded_percentage(&self, tag: PosTag) -> u64 {
        if self.total == 0 {
            0
        } else {
            percent_hundredths(self.count(tag), self.total)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosShareReport {
    pub rows: Vec<PosShareRow>,
}

/// POS category counts over all tokens (`before` row) and over the tokens
/// each strategy retained.
pub fn pos_share_report<T>(tags: &[T], after: &[MaskedCorpus]) -> Result<PosShareReport>
where
    T: AsRef<[PosTag]>,
{
    let mut rows = vec![PosShareRow::from_tags(
        "before",
        tags.iter().flat_map(|t| t.as_ref().iter()),
    )];
    for m in after {
        check_records(m.strategy.name(), tags.len(), m.outputs.len())?;
        let mut kept_tags = Vec::new();
        for (rec_tags, out) in tags.iter().zip(&m.outputs) {
            let rec_tags = rec_tags.as_ref();
            for &i in &out.kept_indices {
                let tag = rec_tags.get(i).ok_or(Error::LengthMismatch {
                    tokens: i + 1,
                    tags: rec_tags.len(),
                })?;
                kept_tags.push(*tag);
            }
        }
        rows.push(PosShareRow::from_tags(m.strategy.name(), &kept_tags));
    }
    Ok(PosShareReport { rows })
}

impl PosShareReport {
    pub fn row(&self, label: &str) -> Option<&PosShareRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["strategy".to_string()];
        h.extend(PosTag::ALL.iter().map(|t| t.to_string()));
        h.push("total".into());
        h.extend(PosTag::ALL.iter().map(|t| format!("{t}_pct")));
        h
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut rec = vec![r.label.clone()];
                rec.extend(r.counts.iter().map(u64::to_string));
                rec.push(r.total.to_string());
                rec.extend(
                    PosTag::ALL
                        .iter()
                        .map(|&t| format_hundredths(r.rounded_percentage(t))),
                );
                rec
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(out, &self.header(), &self.records())
    }

    pub fn render(&self) -> String {
        render_table(&self.header(), &self.records())
    }
}

/// Image plus text tokens processed per training sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenBudget {
    pub image_tokens: usize,
    pub text_tokens: usize,
    pub total: usize,
    /// Unmasked token count the percentage is relative to.
    pub baseline: usize,
}

impl TokenBudget {
    pub fn percentage<F: Scalar>(&self) -> F {
        F::of(100.0) * F::of_count(self.total as u64) / F::of_count(self.baseline as u64)
    }

    pub fn percentage_hundredths(&self) -> u64 {
        percent_hundredths(self.total as u64, self.baseline as u64)
    }

    pub fn header() -> Vec<String> {
        ["image_tokens", "text_tokens", "total", "percentage"]
            .map(String::from)
            .to_vec()
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.image_tokens.to_string(),
            self.text_tokens.to_string(),
            self.total.to_string(),
            format_hundredths(self.percentage_hundredths()),
        ]
    }
}

/// Token budget for a given image masking ratio and text keep-length.
/// Image tokens are `round(patches * (1 - ratio))`; the percentage is
/// relative to `patches + text_context`.
pub fn token_budget<F: Scalar>(
    image_mask_ratio: F,
    keep: usize,
    image_patches: usize,
    text_context: usize,
) -> Result<TokenBudget> {
    if !(image_mask_ratio >= F::zero() && image_mask_ratio < F::one()) {
        return Err(Error::Config(format!(
            "image mask ratio must lie in [0, 1), got {image_mask_ratio}"
        )));
    }
    if image_patches == 0 {
        return Err(Error::Config("image patch count must be positive".into()));
    }
    if keep == 0 || keep > text_context {
        return Err(Error::Config(format!(
            "keep-length must lie in 1..={text_context}, got {keep}"
        )));
    }
    let image = F::of_count(image_patches as u64) * (F::one() - image_mask_ratio);
    let image_tokens = image
        .round()
        .to_usize()
        .expect("bounded by image_patches");
    Ok(TokenBudget {
        image_tokens,
        text_tokens: keep,
        total: image_tokens + keep,
        baseline: image_patches + text_context,
    })
}

pub fn write_budgets<W: Write>(out: W, budgets: &[TokenBudget]) -> Result<()> {
    let rows: Vec<_> = budgets.iter().map(TokenBudget::record).collect();
    write_csv(out, &TokenBudget::header(), &rows)
}

pub fn render_budgets(budgets: &[TokenBudget]) -> String {
    let rows: Vec<_> = budgets.iter().map(TokenBudget::record).collect();
    render_table(&TokenBudget::header(), &rows)
}

/// Streaming mean/variance of caption lengths (Welford), mergeable across
/// shards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthMoments<F> {
    count: u64,
    total: u64,
    mean: F,
    m2: F,
}

impl<F: Scalar> Default for LengthMoments<F> {
    fn default() -> Self {
        Self {
            count: 0,
            total: 0,
            mean: F::zero(),
            m2: F::zero(),
        }
    }
}

impl<F: Scalar> LengthMoments<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, len: usize) {
        self.count += 1;
        self.total += len as u64;
        let x = F::of_count(len as u64);
        let delta = x - self.mean;
        self.mean = self.mean + delta / F::of_count(self.count);
        self.m2 = self.m2 + delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n_a = F::of_count(self.count);
        let n_b = F::of_count(other.count);
        let n = n_a + n_b;
        let delta = other.mean - self.mean;
        Self {
            count: self.count + other.count,
            total: self.total + other.total,
            mean: self.mean + delta * n_b / n,
            m2: self.m2 + other.m2 + delta * delta * n_a * n_b / n,
        }
    }

    pub fn finish(&self) -> Result<CorpusStats<F>> {
        if self.count == 0 {
            return Err(Error::EmptyCorpus);
        }
        let var = (self.m2 / F::of_count(self.count)).max(F::zero());
        Ok(CorpusStats {
            sample_count: self.count,
            total_words: self.total,
            mean: self.mean,
            std: var.sqrt(),
        })
    }
}

/// Caption count and length moments (population standard deviation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats<F> {
    pub sample_count: u64,
    pub total_words: u64,
    pub mean: F,
    pub std: F,
}

impl<F: Scalar> CorpusStats<F> {
    pub fn header() -> Vec<String> {
        ["sample_count", "total_words", "mean", "std"]
            .map(String::from)
            .to_vec()
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.sample_count.to_string(),
            self.total_words.to_string(),
            format!("{:.6}", self.mean.to_f64_lossy()),
            format!("{:.6}", self.std.to_f64_lossy()),
        ]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(out, &Self::header(), &[self.record()])
    }

    pub fn render(&self) -> String {
        render_table(&Self::header(), &[self.record()])
    }
}

pub fn corpus_stats<F: Scalar, I: IntoIterator<Item = usize>>(lengths: I) -> Result<CorpusStats<F>> {
    let mut acc = LengthMoments::new();
    for len in lengths {
        acc.push(len);
    }
    acc.finish()
}

/// Mean over records of `|kept| / min(n, k)`. Records with nothing to fill
/// (`n == 0`) count as fully used, as does an empty corpus.
pub fn slot_utilization<F: Scalar>(original_lengths: &[usize], masked: &[MaskedOutput], keep: usize) -> Result<F> {
    check_records("slot utilization", original_lengths.len(), masked.len())?;
    if masked.is_empty() {
        return Ok(F::one());
    }
    let mut sum = F::zero();
    for (&n, out) in original_lengths.iter().zip(masked) {
        let slots = n.min(keep);
        sum = sum
            + if slots == 0 {
                F::one()
            } else {
                F::of_count(out.len() as u64) / F::of_count(slots as u64)
            };
    }
    Ok(sum / F::of_count(masked.len() as u64))
}

/// 1-based ranks, ties receiving the mean of the positions they span.
pub fn average_ranks<F: Scalar>(values: &[F]) -> Vec<F> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![F::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share rank (i + j) / 2 + 1
        let r = F::of_count((i + j) as u64) / F::of(2.0) + F::one();
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when the
/// inputs differ in length, have fewer than two points, or either side is
/// constant.
pub fn spearman<F: Scalar>(x: &[F], y: &[F]) -> Option<F> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = F::of_count(x.len() as u64);
    let mx = rx.iter().fold(F::zero(), |a, &b| a + b) / n;
    let my = ry.iter().fold(F::zero(), |a, &b| a + b) / n;
    let (mut sxy, mut sxx, mut syy) = (F::zero(), F::zero(), F::zero());
    for (&a, &b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if sxx == F::zero() || syy == F::zero() {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub fn write_csv<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::Config(format!("CSV write failed: {e}"));
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Config(format!("CSV write failed: {e}")))
}

/// Left-aligned text table with a rule under the header.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(cell);
            if i + 1 < cells.len() {
                s.extend(std::iter::repeat_n(' ', w - cell.chars().count()));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header);
    let rule: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}
