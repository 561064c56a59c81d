//! Rule-based evidence inference.
//!
//! Stage one picks the sentence sharing the most prompt words. Stage two
//! reads p-values in that sentence to decide between "no significant
//! difference" and "significant difference", and for the latter counts
//! increase/decrease synonyms to pick a direction.

mod pvalue;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use pvalue::{extract_p_values, PValueForm, PValueMatch};

use crate::corpus::{IcoPrompt, Label};
use crate::error::{Error, Result};
use crate::preprocess::{tokenize, ProcessedDocument, Span};

const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.txt");
const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Significance threshold for `p = X` matches; exactly 0.05 counts as not significant.
pub const SIGNIFICANCE: f64 = 0.05;

/// Increase and decrease synonym sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionLexicon {
    pub increase: BTreeSet<String>,
    pub decrease: BTreeSet<String>,
}

impl Default for DirectionLexicon {
    fn default() -> Self {
        DirectionLexicon::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

impl DirectionLexicon {
    /// Parse `[increase]` / `[decrease]` sections of one term per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut increase = BTreeSet::new();
        let mut decrease = BTreeSet::new();
        let mut section: Option<bool> = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[increase]" => section = Some(true),
                "[decrease]" => section = Some(false),
                term => match section {
                    Some(true) => {
                        increase.insert(term.to_lowercase());
                    }
                    Some(false) => {
                        decrease.insert(term.to_lowercase());
                    }
                    None => return Err(Error::Parse(format!("lexicon line {}: term outside a section", n + 1))),
                },
            }
        }
        if let Some(both) = increase.intersection(&decrease).next() {
            return Err(Error::Parse(format!("lexicon term {both:?} is in both sections")));
        }
        Ok(DirectionLexicon { increase, decrease })
    }

    /// `(increase, decrease)` token occurrence counts.
    pub fn count(&self, sentence: &str) -> (usize, usize) {
        let mut inc = 0;
        let mut dec = 0;
        for t in tokenize(sentence) {
            if self.increase.contains(&t.surface) {
                inc += 1;
            } else if self.decrease.contains(&t.surface) {
                dec += 1;
            }
        }
        (inc, dec)
    }
}

/// Points accumulated for the two coarse outcomes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PointsTally {
    pub no_sig_diff: u32,
    pub sig_different: u32,
}

impl PointsTally {
    fn add(&mut self, significant: bool) {
        if significant {
            self.sig_different += 1;
        } else {
            self.no_sig_diff += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heuristics {
    pub lexicon: DirectionLexicon,
    pub stopwords: BTreeSet<String>,
}

impl Default for Heuristics {
    fn default() -> Self {
        Heuristics { lexicon: DirectionLexicon::default(), stopwords: parse_word_list(DEFAULT_STOPWORDS) }
    }
}

/// One word per line, `#` comments.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

impl Heuristics {
    pub fn new(lexicon: DirectionLexicon, stopwords: BTreeSet<String>) -> Self {
        Heuristics { lexicon, stopwords }
    }

    /// Distinct non-stopword alphanumeric tokens of the given texts.
    pub fn content_words<'a>(&self, texts: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        texts
            .into_iter()
            .flat_map(tokenize)
            .map(|t| t.surface)
            .filter(|s| s.chars().any(char::is_alphanumeric) && !self.stopwords.contains(s))
            .collect()
    }

    /// Sentence with the most distinct prompt words; earliest wins ties.
    pub fn rank_sentences(&self, doc: &ProcessedDocument, prompt: &IcoPrompt) -> usize {
        let words = self.content_words([prompt.intervention.as_str(), prompt.comparator.as_str(), prompt.outcome.as_str()]);
        let mut best = (0usize, 0usize);
        for (i, range) in doc.sentence_token_ranges().into_iter().enumerate() {
            let present: BTreeSet<&str> = doc.tokens[range].iter().map(|t| t.surface.as_str()).collect();
            let points = words.iter().filter(|w| present.contains(w.as_str())).count();
            if points > best.1 {
                best = (i, points);
            }
        }
        best.0
    }

    /// Tally significance points for the p-values found in `sentence`.
    ///
    /// When the intervention or comparator is mentioned, only the `p = X`
    /// match nearest to a mention counts; otherwise every `p = X` counts.
    /// Every `p > X` and `p < X` counts.
    pub fn score_labels(&self, sentence: &str, matches: &[PValueMatch], prompt: &IcoPrompt) -> PointsTally {
        let ic = self.content_words([prompt.intervention.as_str(), prompt.comparator.as_str()]);
        let mentions: Vec<usize> =
            tokenize(sentence).into_iter().filter(|t| ic.contains(&t.surface)).map(|t| t.span().midpoint2()).collect();
        let mut tally = PointsTally::default();
        let eq: Vec<&PValueMatch> = matches.iter().filter(|m| m.form == PValueForm::Eq).collect();
        if mentions.is_empty() {
            for m in &eq {
                tally.add(m.value < SIGNIFICANCE);
            }
        } else if let Some(nearest) = eq.iter().min_by_key(|m| {
            let mid = Span::new(m.position, m.end).midpoint2();
            mentions.iter().map(|x| x.abs_diff(mid)).min().unwrap()
        }) {
            tally.add(nearest.value < SIGNIFICANCE);
        }
        for m in matches {
            match m.form {
                PValueForm::Gt => tally.add(false),
                PValueForm::Lt => tally.add(true),
                PValueForm::Eq => {}
            }
        }
        tally
    }

    /// More increase synonyms → increased; more decrease → decreased; ties → increased.
    pub fn infer_direction(&self, sentence: &str) -> Label {
        let (inc, dec) = self.lexicon.count(sentence);
        if dec > inc {
            Label::SigDecreased
        } else {
            Label::SigIncreased
        }
    }

    /// Interpret one evidence sentence.
    pub fn classify_sentence(&self, sentence: &str, prompt: &IcoPrompt) -> Label {
        let matches = extract_p_values(sentence);
        if matches.is_empty() {
            return self.infer_direction(sentence);
        }
        let tally = self.score_labels(sentence, &matches, prompt);
        if tally.no_sig_diff >= tally.sig_different {
            Label::NoSigDiff
        } else {
            self.infer_direction(sentence)
        }
    }

    /// Full two-stage classification; also returns the chosen sentence span.
    pub fn classify(&self, doc: &ProcessedDocument, prompt: &IcoPrompt) -> (Label, Span) {
        if doc.sentences.is_empty() {
            return (self.classify_sentence("", prompt), Span::new(0, 0));
        }
        let idx = self.rank_sentences(doc, prompt);
        (self.classify_sentence(doc.sentence_text(idx), prompt), doc.sentences[idx])
    }

    /// Stage two applied directly to a given evidence span.
    pub fn classify_oracle(&self, evidence: &str, prompt: &IcoPrompt) -> Result<Label> {
        if evidence.trim().is_empty() {
            return Err(Error::EmptyInput("evidence span"));
        }
        Ok(self.classify_sentence(evidence, prompt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::SentenceSplitter;

    fn prompt(i: &str, c: &str, o: &str) -> IcoPrompt {
        IcoPrompt { prompt_id: 1, article_id: "a".into(), intervention: i.into(), comparator: c.into(), outcome: o.into() }
    }

    fn doc(text: &str) -> ProcessedDocument {
        ProcessedDocument::from_text(text, &SentenceSplitter::default())
    }

    #[test]
    fn bundled_lexicon_is_disjoint_and_sized() {
        let l = DirectionLexicon::default();
        assert!(l.increase.len() >= 25 && l.decrease.len() >= 25);
        assert!(l.increase.is_disjoint(&l.decrease));
        assert!(DirectionLexicon::parse("[increase]\nup\n[decrease]\nup\n").is_err());
        assert!(DirectionLexicon::parse("orphan\n").is_err());
    }

    #[test]
    fn ranking_counts_distinct_prompt_words() {
        let d = doc("Blood glucose was measured. Fasting blood glucose levels were stable. Nothing here.");
        let p = prompt("metformin", "placebo", "fasting blood glucose");
        assert_eq!(self::Heuristics::default().rank_sentences(&d, &p), 1);
    }

    #[test]
    fn ranking_ties_pick_earliest() {
        let d = doc("Glucose first. Glucose second.");
        assert_eq!(Heuristics::default().rank_sentences(&d, &prompt("x", "y", "glucose")), 0);
        let d = doc("No overlap. None at all.");
        assert_eq!(Heuristics::default().rank_sentences(&d, &prompt("x", "y", "z")), 0);
    }

    #[test]
    fn score_single_eq_near_intervention() {
        let h = Heuristics::default();
        let p = prompt("aspirin", "placebo", "pain");
        let s = "aspirin (p = 0.03) lowered pain";
        let t = h.score_labels(s, &extract_p_values(s), &p);
        assert_eq!(t, PointsTally { no_sig_diff: 0, sig_different: 1 });
    }

    #[test]
    fn score_gt_counts_no_difference() {
        let h = Heuristics::default();
        let s = "pain was similar (p > 0.05)";
        let t = h.score_labels(s, &extract_p_values(s), &prompt("aspirin", "placebo", "pain"));
        assert_eq!(t, PointsTally { no_sig_diff: 1, sig_different: 0 });
    }

    #[test]
    fn score_sums_all_eq_without_mentions() {
        let h = Heuristics::default();
        let s = "pain scores (p = 0.2) and mobility (p = 0.01)";
        let t = h.score_labels(s, &extract_p_values(s), &prompt("aspirin", "placebo", "pain"));
        assert_eq!(t, PointsTally { no_sig_diff: 1, sig_different: 1 });
    }

    #[test]
    fn direction_rules() {
        let h = Heuristics::default();
        assert_eq!(h.infer_direction("significantly increased"), Label::SigIncreased);
        assert_eq!(h.infer_direction("reduced"), Label::SigDecreased);
        assert_eq!(h.infer_direction("no direction words"), Label::SigIncreased);
    }

    #[test]
    fn classify_compositions() {
        let h = Heuristics::default();
        let p = prompt("X", "C", "O");
        let d = doc("Unrelated filler sentence. X significantly increased O versus C (p = 0.01).");
        assert_eq!(h.classify(&d, &p).0, Label::SigIncreased);
        assert_eq!(h.classify(&d, &p).1, d.sentences[1]);
        assert_eq!(h.classify_sentence("effect (p = 0.20) and (p < 0.01)", &prompt("q", "r", "s")), Label::NoSigDiff);
        assert_eq!(h.classify_sentence("X decreased O", &p), Label::SigDecreased);
    }

    #[test]
    fn oracle_spans() {
        let h = Heuristics::default();
        let p = prompt("a", "b", "c");
        assert_eq!(h.classify_oracle("(p > 0.05)", &p).unwrap(), Label::NoSigDiff);
        assert_eq!(h.classify_oracle("greater reduction (p < 0.001)", &p).unwrap(), Label::SigDecreased);
        assert!(h.classify_oracle(" ", &p).is_err());
    }

    #[test]
    fn empty_document_is_handled() {
        let h = Heuristics::default();
        let (l, s) = h.classify(&doc(""), &prompt("a", "b", "c"));
        assert_eq!(l, Label::SigIncreased);
        assert!(s.is_empty());
    }
}
