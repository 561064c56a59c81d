use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Span;

const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

/// Rule-based sentence splitter.
///
/// A sentence ends at `.`, `!` or `?` (plus any closing brackets or quotes)
/// when it is followed by whitespace and then an uppercase letter or digit,
/// unless the terminator sits inside parentheses or ends a known
/// abbreviation. Spans exclude surrounding whitespace.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceSplitter {
    abbreviations: BTreeSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl SentenceSplitter {
    /// One abbreviation per line, `#` starts a comment.
    pub fn from_list(list: &str) -> Self {
        let abbreviations = list
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.to_lowercase())
            .collect();
        SentenceSplitter { abbreviations }
    }

    pub fn with_abbreviation(mut self, abbr: &str) -> Self {
        self.abbreviations.insert(abbr.to_lowercase());
        self
    }

    pub fn split(&self, text: &str) -> Vec<Span> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut spans = Vec::new();
        let mut start: Option<usize> = None;
        let mut depth: i32 = 0;
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if start.is_none() {
                if c.is_whitespace() {
                    i += 1;
                    continue;
                }
                start = Some(pos);
                depth = 0;
            }
            match c {
                '(' | '[' => depth += 1,
                ')' | ']' => depth = (depth - 1).max(0),
                _ => {}
            }
            if matches!(c, '.' | '!' | '?') && depth == 0 {
                let mut j = i + 1;
                while j < chars.len() && matches!(chars[j].1, ')' | ']' | '"' | '\'') {
                    j += 1;
                }
                let mut k = j;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    k += 1;
                }
                let boundary = k > j
                    && k < chars.len()
                    && (chars[k].1.is_uppercase() || chars[k].1.is_ascii_digit())
                    && !(c == '.' && self.ends_abbreviation(text, pos));
                if boundary {
                    let end = chars.get(j).map_or(text.len(), |x| x.0);
                    spans.push(Span::new(start.take().unwrap(), end));
                    i = k;
                    continue;
                }
            }
            i += 1;
        }
        if let Some(s) = start {
            let end = s + text[s..].trim_end().len();
            if end > s {
                spans.push(Span::new(s, end));
            }
        }
        spans
    }

    /// True when the word ending with the period at `dot` is an abbreviation.
    fn ends_abbreviation(&self, text: &str, dot: usize) -> bool {
        let before = &text[..dot + 1];
        let word_start = before.rfind(char::is_whitespace).map_or(0, |p| p + 1);
        let word = before[word_start..].trim_start_matches(|c: char| !c.is_alphanumeric());
        !word.is_empty() && self.abbreviations.contains(&word.to_lowercase().to_string())
    }
}
