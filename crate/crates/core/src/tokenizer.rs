//! Word-level tokenization of raw captions.
//!
//! Text is lowercased, split on Unicode whitespace, and every maximal run of
//! punctuation or symbol characters is emitted as its own token, so
//! `"dog."` becomes `["dog", "."]`.

use std::ops::Deref;

use unicode_general_category::{get_general_category, GeneralCategory};

/// Ordered word tokens of one caption.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub source_id: Option<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        Self {
            tokens,
            source_id: None,
        }
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = Some(id.into());
        self
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.tokens
    }
}

impl From<Vec<String>> for TokenSequence {
    fn from(tokens: Vec<String>) -> Self {
        Self::new(tokens)
    }
}

/// True for Unicode punctuation (P*) and symbol (S*) characters.
pub fn is_special_char(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

/// True when the token is made up only of punctuation/symbol characters.
pub fn is_special_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_special_char)
}

pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence::new(tokenize_words(text))
}

/// Tokenize into a plain vector; see the module docs for the rules.
pub fn tokenize_words(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut out = Vec::new();
    for chunk in lowered.split_whitespace() {
        split_chunk(chunk, &mut out);
    }
    out
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let mut start = 0;
    let mut current: Option<bool> = None;
    for (pos, c) in chunk.char_indices() {
        let special = is_special_char(c);
        match current {
            Some(prev) if prev != special => {
                out.push(chunk[start..pos].to_string());
                start = pos;
            }
            _ => {}
        }
        current = Some(special);
    }
    if start < chunk.len() {
        out.push(chunk[start..].to_string());
    }
}

/// Drop tokens that consist entirely of punctuation or symbols.
pub fn strip_special(tokens: &TokenSequence) -> TokenSequence {
    TokenSequence {
        tokens: strip_special_tokens(&tokens.tokens),
        source_id: tokens.source_id.clone(),
    }
}

pub fn strip_special_tokens<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !is_special_token(t))
        .map(str::to_string)
        .collect()
}
