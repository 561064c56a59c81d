//! Article text preparation: XML stripping, sentence splitting,
//! tokenization and the frequency-capped vocabulary.

mod sentences;
mod tokenize;
mod vocab;
mod xml;

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};

use serde::{Deserialize, Serialize};

pub use sentences::SentenceSplitter;
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, OOV_ID, PAD_ID, RESERVED};
pub use xml::strip_xml;

/// Half-open byte range into a document's text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn intersects(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn midpoint2(&self) -> usize {
        self.start + self.end
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    /// Lowercased text of `start..end`.
    pub surface: alloc::string::String,
}

impl Token {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

/// Cleaned article text with sentence and token spans (byte offsets).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedDocument {
    pub text: alloc::string::String,
    pub sentences: Vec<Span>,
    pub tokens: Vec<Token>,
}

impl ProcessedDocument {
    /// Split `text` into sentences and tokenize each one.
    pub fn from_text(text: &str, splitter: &SentenceSplitter) -> Self {
        let sentences = splitter.split(text);
        ProcessedDocument::tokenize_sentences(text, sentences)
    }

    /// Rebuild a document from stored sentence spans, tokenizing each one.
    pub fn from_sentences(text: &str, sentences: Vec<Span>) -> Result<Self> {
        let mut prev_end = 0;
        for s in &sentences {
            if s.start < prev_end || s.start > s.end || s.end > text.len() {
                return Err(Error::Parse(alloc::format!("sentence {}..{} is out of order or out of range", s.start, s.end)));
            }
            if !text.is_char_boundary(s.start) || !text.is_char_boundary(s.end) {
                return Err(Error::Parse(alloc::format!("sentence {}..{} splits a character", s.start, s.end)));
            }
            prev_end = s.end;
        }
        Ok(ProcessedDocument::tokenize_sentences(text, sentences))
    }

    fn tokenize_sentences(text: &str, sentences: Vec<Span>) -> Self {
        let mut tokens = Vec::new();
        for s in &sentences {
            tokens.extend(tokenize(&text[s.start..s.end]).into_iter().map(|t| Token {
                start: t.start + s.start,
                end: t.end + s.start,
                surface: t.surface,
            }));
        }
        ProcessedDocument { text: text.into(), sentences, tokens }
    }

    pub fn sentence_text(&self, index: usize) -> &str {
        let s = self.sentences[index];
        &self.text[s.start..s.end]
    }

    /// Token index ranges, one per sentence.
    pub fn sentence_token_ranges(&self) -> Vec<Range<usize>> {
        let mut ranges = Vec::with_capacity(self.sentences.len());
        let mut t = 0;
        for s in &self.sentences {
            while t < self.tokens.len() && self.tokens[t].start < s.start {
                t += 1;
            }
            let first = t;
            while t < self.tokens.len() && self.tokens[t].end <= s.end {
                t += 1;
            }
            ranges.push(first..t);
        }
        ranges
    }

    /// Index of the sentence containing byte offset `pos`, if any.
    pub fn sentence_at(&self, pos: usize) -> Option<usize> {
        let i = self.sentences.partition_point(|s| s.end <= pos);
        (i < self.sentences.len() && self.sentences[i].start <= pos).then_some(i)
    }

    /// Marks every token whose span intersects `span`.
    pub fn token_mask(&self, span: Span) -> Vec<bool> {
        self.tokens.iter().map(|t| t.span().intersects(&span)).collect()
    }

    /// Marks every sentence containing at least one masked token.
    pub fn sentence_mask(&self, token_mask: &[bool]) -> Vec<bool> {
        self.sentence_token_ranges()
            .into_iter()
            .map(|r| r.into_iter().any(|t| token_mask.get(t).copied().unwrap_or(false)))
            .collect()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> ProcessedDocument {
        ProcessedDocument::from_text(text, &SentenceSplitter::default())
    }

    #[test]
    fn stored_sentences_rebuild_the_document() {
        let d = doc("Mortality fell (p = 0.02). Next sentence here.");
        assert_eq!(ProcessedDocument::from_sentences(&d.text, d.sentences.clone()).unwrap(), d);
        assert!(ProcessedDocument::from_sentences("abc", vec![Span::new(0, 4)]).is_err());
        assert!(ProcessedDocument::from_sentences("abc def", vec![Span::new(4, 7), Span::new(0, 3)]).is_err());
        assert!(ProcessedDocument::from_sentences("é", vec![Span::new(0, 1)]).is_err());
    }

    #[test]
    fn tokens_lie_inside_exactly_one_sentence() {
        let d = doc("Patients were enrolled. The mean was 4.5 (p = 0.03). Done!");
        assert_eq!(d.sentences.len(), 3);
        for t in &d.tokens {
            let n = d.sentences.iter().filter(|s| s.contains(&t.span())).count();
            assert_eq!(n, 1);
            assert_eq!(t.surface, d.text[t.start..t.end].to_lowercase());
        }
        let ranges = d.sentence_token_ranges();
        assert_eq!(ranges.iter().map(|r| r.len()).sum::<usize>(), d.tokens.len());
        assert_eq!(d.sentence_at(d.sentences[1].start + 2), Some(1));
    }

    #[test]
    fn token_mask_marks_intersecting_tokens() {
        let d = doc("abc DEF ghi");
        assert_eq!(d.token_mask(Span::new(4, 7)), alloc::vec![false, true, false]);
        assert_eq!(d.token_mask(Span::new(5, 9)), alloc::vec![false, true, true]);
        assert_eq!(d.sentence_mask(&[false, true, false]), alloc::vec![true]);
    }
}
