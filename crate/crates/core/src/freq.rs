//! Word-frequency tables and the subsampling probability
//! `P(w) = 1 - sqrt(t / f(w))`.
//!
//! `f(w)` is always the relative frequency `count(w) / total`. The raw
//! formula goes negative for words rarer than the threshold, so results are
//! clamped to `[0, 1]`; words the table has never seen get probability 0.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus_io;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// Relative-frequency threshold `t`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold<F> {
    value: F,
}

impl<F: Scalar> Threshold<F> {
    pub fn new(value: F) -> Result<Self> {
        if value.is_finite() && value > F::zero() && value < F::one() {
            Ok(Self { value })
        } else {
            Err(Error::InvalidThreshold(value.to_f64_lossy()))
        }
    }

    pub fn value(self) -> F {
        self.value
    }
}

impl<F: Scalar> Default for Threshold<F> {
    fn default() -> Self {
        Self {
            value: F::of(DEFAULT_THRESHOLD),
        }
    }
}

/// Word occurrence counts. Every stored count is at least one and `total`
/// is always the sum of the counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    /// An empty table. Only useful as the identity for [`merge`](Self::merge);
    /// relative frequencies are undefined until something is added.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str, n: u64) {
        if n == 0 {
            return;
        }
        match self.counts.get_mut(word) {
            Some(c) => *c += n,
            None => {
                self.counts.insert(word.to_string(), n);
            }
        }
        self.total += n;
    }

    pub fn add_tokens<S: AsRef<str>>(&mut self, tokens: &[S]) {
        for t in tokens {
            self.add(t.as_ref(), 1);
        }
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct words.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    /// `count(word) / total`, or `None` for words not in the table.
    pub fn relative_frequency<F: Scalar>(&self, word: &str) -> Option<F> {
        let c = *self.counts.get(word)?;
        Some(F::of_count(c) / F::of_count(self.total))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, c)| (w.as_str(), *c))
    }

    /// Entries by descending count, ties broken lexicographically.
    pub fn sorted_entries(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<_> = self.iter().collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }

    pub fn merge(mut self, other: &FrequencyTable) -> Self {
        self.merge_from(other);
        self
    }

    pub fn merge_from(&mut self, other: &FrequencyTable) {
        for (w, c) in other.iter() {
            self.add(w, c);
        }
    }

    /// Serialize as `#total <N>` followed by `word\tcount` lines in
    /// [`sorted_entries`](Self::sorted_entries) order.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#total {}", self.total)?;
        for (w, c) in self.sorted_entries() {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let declared = match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(|e| parse_err(1, e.to_string()))?;
                line.strip_prefix("#total ")
                    .and_then(|n| n.trim().parse::<u64>().ok())
                    .ok_or_else(|| parse_err(1, "expected header `#total <N>`".into()))?
            }
            None => return Err(parse_err(1, "missing `#total` header".into())),
        };

        let mut table = FrequencyTable::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(lineno, "expected `<word>\\t<count>`".into()))?;
            if word.is_empty() {
                return Err(parse_err(lineno, "empty word".into()));
            }
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid count {count:?}")))?;
            if count == 0 {
                return Err(parse_err(lineno, "counts must be at least 1".into()));
            }
            if table.contains(word) {
                return Err(parse_err(lineno, format!("duplicate word {word:?}")));
            }
            table.add(word, count);
        }
        if table.total != declared {
            return Err(parse_err(
                1,
                format!("header total {declared} does not match sum of counts {}", table.total),
            ));
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let out = corpus_io::create_output(path)?;
        self.write_to(out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let input = corpus_io::open_input(path)?;
        Self::read_from(input).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }
}

fn parse_err(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

/// Count every token of every sequence.
///
/// Fails with [`Error::EmptyCorpus`] when no tokens were seen, since
/// relative frequencies are undefined for a zero total.
pub fn build_frequency_table<I, T, S>(corpus: I) -> Result<FrequencyTable>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut table = FrequencyTable::new();
    for seq in corpus {
        table.add_tokens(seq.as_ref());
    }
    non_empty(table)
}

/// Sharded build over an in-memory corpus; equal to the sequential build.
pub fn build_frequency_table_parallel<T, S>(corpus: &[T]) -> Result<FrequencyTable>
where
    T: AsRef<[S]> + Sync,
    S: AsRef<str>,
{
    let table = corpus
        .par_iter()
        .fold(FrequencyTable::new, |mut acc, seq| {
            acc.add_tokens(seq.as_ref());
            acc
        })
        .reduce(FrequencyTable::new, |a, b| {
            // fold into the larger map
            if a.len() >= b.len() {
                a.merge(&b)
            } else {
                b.merge(&a)
            }
        });
    non_empty(table)
}

fn non_empty(table: FrequencyTable) -> Result<FrequencyTable> {
    if table.total == 0 {
        Err(Error::EmptyCorpus)
    } else {
        Ok(table)
    }
}

/// `clamp(1 - sqrt(t / f), 0, 1)`, exactly zero whenever `f <= t`.
pub fn subsample_probability<F: Scalar>(relative_frequency: F, threshold: Threshold<F>) -> F {
    let f = relative_frequency;
    let t = threshold.value();
    if f.is_nan() || f <= t {
        return F::zero();
    }
    (F::one() - (t / f).sqrt()).max(F::zero()).min(F::one())
}

/// Masking probability of a word together with the unknown-word diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordProbability<F> {
    pub probability: F,
    pub unknown_word: bool,
}

pub fn word_probability<F: Scalar>(
    word: &str,
    table: &FrequencyTable,
    threshold: Threshold<F>,
) -> WordProbability<F> {
    match table.relative_frequency::<F>(word) {
        Some(f) => WordProbability {
            probability: subsample_probability(f, threshold),
            unknown_word: false,
        },
        None => WordProbability {
            probability: F::zero(),
            unknown_word: true,
        },
    }
}

/// Masking probability of `word`; unseen words are never masked.
pub fn mask_probability<F: Scalar>(word: &str, table: &FrequencyTable, threshold: Threshold<F>) -> F {
    word_probability(word, table, threshold).probability
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<F> {
    pub threshold: F,
    pub frequency: F,
    pub probability: F,
}

/// Evaluate the masking probability over every (threshold, frequency) pair,
/// thresholds outermost.
pub fn probability_curve<F: Scalar>(thresholds: &[Threshold<F>], frequencies: &[F]) -> Vec<CurvePoint<F>> {
    thresholds
        .iter()
        .flat_map(|&t| {
            frequencies.iter().map(move |&f| CurvePoint {
                threshold: t.value(),
                frequency: f,
                probability: subsample_probability(f, t),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn t64(x: f64) -> Threshold<f64> {
        Threshold::new(x).unwrap()
    }

    fn seqs(xs: &[&[&str]]) -> Vec<Vec<String>> {
        xs.iter()
            .map(|s| s.iter().map(|w| w.to_string()).collect())
            .collect()
    }

    #[test]
    fn threshold_bounds() {
        assert!(Threshold::new(0.0f64).is_err());
        assert!(Threshold::new(1.0f64).is_err());
        assert!(Threshold::new(f64::NAN).is_err());
        assert!(Threshold::new(-1e-6f64).is_err());
        assert_eq!(Threshold::<f64>::default().value(), 1e-6);
        assert_eq!(Threshold::<f32>::default().value(), 1e-6f32);
    }

    #[test]
    fn build_counts() {
        let t = build_frequency_table(seqs(&[&["a", "b", "a"]])).unwrap();
        assert_eq!((t.count("a"), t.count("b"), t.total()), (2, 1, 3));
        let t = build_frequency_table(seqs(&[&["a"], &["a"], &["b"]])).unwrap();
        assert_eq!((t.count("a"), t.count("b"), t.total()), (2, 1, 3));
    }

    #[test]
    fn build_many_identical_records() {
        let corpus = vec![vec!["x".to_string()]; 1000];
        let t = build_frequency_table(&corpus).unwrap();
        // independent single-pass recount
        let mut n = 0u64;
        for rec in &corpus {
            for w in rec {
                if w == "x" {
                    n += 1;
                }
            }
        }
        assert_eq!(t.count("x"), n);
        assert_eq!(t.total(), 1000);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn empty_corpus_rejected() {
        let empty: Vec<Vec<String>> = vec![];
        assert!(matches!(build_frequency_table(&empty), Err(Error::EmptyCorpus)));
        assert!(matches!(
            build_frequency_table(vec![Vec::<String>::new(); 3]),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            build_frequency_table_parallel(&empty),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn merge_basics() {
        let mut a = FrequencyTable::new();
        a.add("a", 1);
        let mut b = FrequencyTable::new();
        b.add("a", 2);
        let m = a.clone().merge(&b);
        assert_eq!((m.count("a"), m.total()), (3, 3));
        assert_eq!(a.clone().merge(&FrequencyTable::new()), a);
        assert_eq!(FrequencyTable::new().merge(&a), a);
    }

    #[test]
    fn probability_hand_values() {
        let t = 1e-6;
        assert_eq!(subsample_probability(t, t64(t)), 0.0);
        assert_relative_eq!(subsample_probability(4.0 * t, t64(t)), 0.5, max_relative = 1e-12);
        assert_relative_eq!(subsample_probability(100.0 * t, t64(t)), 0.9, max_relative = 1e-12);
        assert_eq!(subsample_probability(t / 4.0, t64(t)), 0.0);
    }

    #[test]
    fn probability_in_f32() {
        let t = Threshold::new(1e-4f32).unwrap();
        assert_relative_eq!(subsample_probability(4e-4f32, t), 0.5, max_relative = 1e-6);
    }

    #[test]
    fn unknown_words_never_masked() {
        let table = build_frequency_table(seqs(&[&["a"]])).unwrap();
        let p = word_probability::<f64>("zzz", &table, t64(1e-6));
        assert_eq!(p.probability, 0.0);
        assert!(p.unknown_word);
        let p = word_probability::<f64>("a", &table, t64(1e-6));
        assert!(!p.unknown_word);
        assert_relative_eq!(p.probability, 1.0 - 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn two_word_table_probabilities() {
        let mut table = FrequencyTable::new();
        table.add("a", 3);
        table.add("b", 1);
        let t = t64(1.0 / 16.0);
        let pa: f64 = mask_probability("a", &table, t);
        let pb: f64 = mask_probability("b", &table, t);
        assert_relative_eq!(pa, 1.0 - (1.0f64 / 12.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(pa, 0.711324865, max_relative = 1e-8);
        assert_relative_eq!(pb, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn curve_points() {
        let ts = [t64(1e-5), t64(1e-6), t64(1e-7)];
        let fs = [1e-6, 1e-4, 1e-2];
        let curve = probability_curve(&ts, &fs);
        assert_eq!(curve.len(), 9);
        let at = |t: f64, f: f64| {
            curve
                .iter()
                .find(|p| p.threshold == t && p.frequency == f)
                .unwrap()
                .probability
        };
        assert_eq!(at(1e-6, 1e-6), 0.0);
        assert!(at(1e-5, 1e-4) < at(1e-7, 1e-4));
        assert_relative_eq!(at(1e-6, 1e-2), 0.99, max_relative = 1e-12);
    }

    #[test]
    fn file_format_layout() {
        let table = build_frequency_table(seqs(&[&["b", "a", "c", "a", "b", "."]])).unwrap();
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "#total 6\na\t2\nb\t2\n.\t1\nc\t1\n"
        );
    }

    #[test]
    fn read_rejects_bad_files() {
        let bad = [
            "",
            "total 3\na\t3\n",
            "#total 3\na\t2\n",
            "#total 2\na 2\n",
            "#total 2\na\t0\n",
            "#total 4\na\t2\na\t2\n",
            "#total 2\na\tx\n",
        ];
        for text in bad {
            assert!(FrequencyTable::read_from(text.as_bytes()).is_err(), "{text:?}");
        }
    }

    #[test]
    fn read_reports_line_number() {
        let err = FrequencyTable::read_from("#total 3\na\t2\nb\tq\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    fn word_lists() -> impl Strategy<Value = Vec<Vec<String>>> {
        prop::collection::vec(prop::collection::vec("[a-e.]{1,3}", 0..8), 0..20)
    }

    proptest! {
        #[test]
        fn serialization_round_trip(corpus in word_lists()) {
            prop_assume!(corpus.iter().any(|r| !r.is_empty()));
            let table = build_frequency_table(&corpus).unwrap();
            let mut buf = Vec::new();
            table.write_to(&mut buf).unwrap();
            prop_assert_eq!(FrequencyTable::read_from(&buf[..]).unwrap(), table);
        }

        #[test]
        fn split_build_equals_whole(corpus in word_lists(), cut in 0usize..20) {
            prop_assume!(corpus.iter().any(|r| !r.is_empty()));
            let cut = cut.min(corpus.len());
            let (left, right) = corpus.split_at(cut);
            let mut merged = FrequencyTable::new();
            for part in [left, right] {
                if let Ok(t) = build_frequency_table(part) {
                    merged = merged.merge(&t);
                }
            }
            prop_assert_eq!(&merged, &build_frequency_table(&corpus).unwrap());
            prop_assert_eq!(&merged, &build_frequency_table_parallel(&corpus).unwrap());
        }

        #[test]
        fn merge_commutes_and_associates(a in word_lists(), b in word_lists(), c in word_lists()) {
            let mk = |x: &Vec<Vec<String>>| build_frequency_table(x).unwrap_or_default();
            let (ta, tb, tc) = (mk(&a), mk(&b), mk(&c));
            prop_assert_eq!(ta.clone().merge(&tb), tb.clone().merge(&ta));
            prop_assert_eq!(
                ta.clone().merge(&tb).merge(&tc),
                ta.clone().merge(&tb.clone().merge(&tc))
            );
        }

        #[test]
        fn total_is_sum_of_counts(corpus in word_lists()) {
            let table = build_frequency_table(&corpus).unwrap_or_default();
            prop_assert_eq!(table.iter().map(|(_, c)| c).sum::<u64>(), table.total());
            prop_assert!(table.iter().all(|(_, c)| c >= 1));
        }

        #[test]
        fn probability_bounded_and_rank_preserving(corpus in word_lists(), exp in -8i32..-1) {
            prop_assume!(corpus.iter().any(|r| !r.is_empty()));
            let table = build_frequency_table(&corpus).unwrap();
            let t = t64(10f64.powi(exp));
            let entries = table.sorted_entries();
            for (u, cu) in &entries {
                let pu: f64 = mask_probability(u, &table, t);
                prop_assert!((0.0..=1.0).contains(&pu));
                for (v, cv) in &entries {
                    if cu >= cv {
                        prop_assert!(pu >= mask_probability::<f64>(v, &table, t));
                    }
                }
            }
        }

        #[test]
        fn probability_monotone_in_frequency(a in 1e-9f64..1.0, b in 1e-9f64..1.0, t in 1e-8f64..0.5) {
            let t = t64(t);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(subsample_probability(lo, t) <= subsample_probability(hi, t));
        }
    }
}
