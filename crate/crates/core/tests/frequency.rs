use textmask::analysis::word_counts;
use textmask::freq::build_frequency_table;
use textmask::maskers::{Masker, MaskingConfig, Strategy};
use textmask::synth::{zipf_corpus, zipf_word, ZipfCorpusConfig};

/// Retained share of all occurrences of the words in `ranks`.
fn retention(
    before: &std::collections::HashMap<String, u64>,
    after: &std::collections::HashMap<String, u64>,
    ranks: std::ops::Range<usize>,
) -> f64 {
    let (mut pre, mut post) = (0, 0);
    for r in ranks {
        let w = zipf_word(r);
        pre += before.get(&w).copied().unwrap_or(0);
        post += after.get(&w).copied().unwrap_or(0);
    }
    post as f64 / pre as f64
}

// Coarse buckets: hundreds of retained tokens each, so the head/tail gap
// is several standard errors wide even though per-word ratios are noisy.
#[test]
fn head_words_retained_less_than_tail_words() {
    let corpus = zipf_corpus(&ZipfCorpusConfig::default());
    let table = build_frequency_table(&corpus).unwrap();
    let cfg = MaskingConfig::<f64>::new(Strategy::Frequency, 6).unwrap();
    let m = Masker::new(cfg, Some(&table)).unwrap();
    let outputs: Vec<_> = corpus
        .iter()
        .enumerate()
        .map(|(i, c)| m.mask(i as u64, c, None).unwrap())
        .collect();
    let before = word_counts(corpus.iter().map(|c| c.as_slice()));
    let after = word_counts(outputs.iter().map(|o| o.kept.as_slice()));
    let head = retention(&before, &after, 0..10);
    let tail = retention(&before, &after, 500..1000);
    assert!(head + 0.015 < tail, "head {head:.4} tail {tail:.4}");
}
