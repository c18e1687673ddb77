//! Coarse part-of-speech tagging into four classes: NN, JJ, VB, OTHER.
//!
//! The built-in tagger is a lexicon lookup followed by suffix heuristics.
//! It is a convenience; for faithful tags run an external tagger and feed
//! the result through [`load_pretagged`].

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use crate::corpus_io;
use crate::error::{Error, Result};
use crate::tokenizer::is_special_token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosTag {
    Noun,
    Adjective,
    Verb,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 4] = [PosTag::Noun, PosTag::Adjective, PosTag::Verb, PosTag::Other];

    /// Retention priority for syntax masking; 0 is kept first.
    pub fn priority(self) -> u8 {
        match self {
            PosTag::Noun => 0,
            PosTag::Adjective => 1,
            PosTag::Verb => 2,
            PosTag::Other => 3,
        }
    }

    pub fn index(self) -> usize {
        self.priority() as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NN",
            PosTag::Adjective => "JJ",
            PosTag::Verb => "VB",
            PosTag::Other => "OTHER",
        }
    }

    /// Collapse a Penn Treebank style tag by prefix: `NN*`, `JJ*`, `VB*`,
    /// anything else is OTHER. Total over all strings.
    pub fn from_penn(tag: &str) -> PosTag {
        if tag.starts_with("NN") {
            PosTag::Noun
        } else if tag.starts_with("JJ") {
            PosTag::Adjective
        } else if tag.starts_with("VB") {
            PosTag::Verb
        } else {
            PosTag::Other
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NN" => Ok(PosTag::Noun),
            "JJ" => Ok(PosTag::Adjective),
            "VB" => Ok(PosTag::Verb),
            "OTHER" => Ok(PosTag::Other),
            _ => Err(Error::Config(format!(
                "unknown POS category {s:?} (expected NN, JJ, VB or OTHER)"
            ))),
        }
    }
}

/// Word to tag lookup. Keys are lowercased.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosLexicon {
    entries: HashMap<String, PosTag>,
}

const BUILTIN_OTHER: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "of", "in", "on", "at", "to", "for",
    "with", "by", "from", "into", "onto", "over", "under", "above", "below", "near", "behind",
    "between", "through", "during", "about", "against", "along", "around", "across", "and",
    "or", "but", "nor", "so", "yet", "if", "as", "than", "while", "i", "you", "he", "she",
    "it", "we", "they", "me", "him", "her", "us", "them", "my", "your", "his", "its", "our",
    "their", "who", "whom", "whose", "which", "what", "there", "here", "not", "no", "very",
    "up", "down", "out", "off", "some", "any", "each", "every", "all", "both", "one", "two",
    "three", "then", "also", "just", "only", "too",
];

const BUILTIN_VERB: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does",
    "did", "can", "could", "will", "would", "shall", "should", "may", "might", "must", "sit",
    "sits", "stand", "stands", "run", "runs", "look", "looks", "hold", "holds",
    "play", "plays", "make", "makes", "take", "takes", "go", "goes", "get", "gets", "eat", "eats",
];

const BUILTIN_ADJ: &[&str] = &[
    "happy", "young", "old", "new", "big", "small", "little", "large", "red", "blue", "green",
    "white", "black", "yellow", "brown", "pink", "gray", "grey", "handsome", "beautiful",
    "pretty", "good", "great", "long", "short", "tall", "high", "low", "hot", "cold", "dark",
    "bright", "sad", "smiling",
];

impl PosLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// A small English lexicon of closed-class words plus a handful of
    /// frequent caption adjectives and verbs that the suffix rules get wrong.
    pub fn builtin() -> Self {
        let mut lex = Self::new();
        for (words, tag) in [
            (BUILTIN_OTHER, PosTag::Other),
            (BUILTIN_VERB, PosTag::Verb),
            (BUILTIN_ADJ, PosTag::Adjective),
        ] {
            for w in words {
                lex.entries.insert((*w).to_string(), tag);
            }
        }
        lex
    }

    /// Insert an entry; fails if the lowercased word is already present.
    pub fn insert(&mut self, word: &str, tag: PosTag) -> Result<()> {
        let key = word.to_lowercase();
        if self.entries.contains_key(&key) {
            return Err(Error::Config(format!("duplicate lexicon entry {key:?}")));
        }
        self.entries.insert(key, tag);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<PosTag> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse `<word>\t<TAG>` lines. TAG may be one of the four categories
    /// or a Penn tag.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lex = Self::new();
        for (i, line) in input.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, tag) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno,
                message: "expected `<word>\\t<TAG>`".into(),
            })?;
            let word = word.trim();
            let tag = tag.trim();
            if word.is_empty() || tag.is_empty() {
                return Err(Error::Parse {
                    line: lineno,
                    message: "empty word or tag".into(),
                });
            }
            lex.insert(word, parse_tag(tag)).map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(corpus_io::open_input(path)?)
    }
}

fn parse_tag(tag: &str) -> PosTag {
    tag.parse().unwrap_or_else(|_| PosTag::from_penn(tag))
}

const VERB_SUFFIXES: &[&str] = &["ing", "ed", "ize"];
const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "ive", "able", "al"];

fn has_suffix(word: &str, suffixes: &[&str]) -> bool {
    suffixes
        .iter()
        .any(|s| word.len() > s.len() && word.ends_with(s))
}

/// Tag a single token: lexicon, then punctuation, then suffix rules, then NN.
pub fn tag_word(word: &str, lexicon: &PosLexicon) -> PosTag {
    if let Some(tag) = lexicon.get(word) {
        return tag;
    }
    if is_special_token(word) {
        PosTag::Other
    } else if has_suffix(word, VERB_SUFFIXES) {
        PosTag::Verb
    } else if has_suffix(word, ADJ_SUFFIXES) {
        PosTag::Adjective
    } else {
        PosTag::Noun
    }
}

pub fn tag<S: AsRef<str>>(tokens: &[S], lexicon: &PosLexicon) -> Vec<PosTag> {
    tokens
        .iter()
        .map(|t| tag_word(t.as_ref(), lexicon))
        .collect()
}

/// Parse one `word/TAG word/TAG ...` line. Words are lowercased; the tag is
/// taken after the last `/` so words may themselves contain slashes.
pub fn load_pretagged(line: &str) -> Result<(Vec<String>, Vec<PosTag>)> {
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for (index, pair) in line.split_whitespace().enumerate() {
        let malformed = || Error::MalformedTag {
            index,
            pair: pair.to_string(),
        };
        let (word, tag) = pair.rsplit_once('/').ok_or_else(malformed)?;
        if word.is_empty() || tag.is_empty() {
            return Err(malformed());
        }
        tokens.push(word.to_lowercase());
        tags.push(parse_tag(tag));
    }
    Ok((tokens, tags))
}
