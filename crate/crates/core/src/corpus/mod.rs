//! Corpus data model: prompts, annotation records, articles and splits,
//! plus ingestion, validity filtering, split statistics, agreement and the
//! synthetic corpus generator.

mod agreement;
mod align;
mod synth;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use agreement::{dataset_agreement, krippendorff_alpha};
pub use align::{levenshtein, locate_rationale, similarity, Alignment, AlignmentConfig};
pub use synth::{generate_synthetic, SynthConfig, SyntheticCorpus};

use crate::error::{Error, Result};
use crate::preprocess::{ProcessedDocument, Span};

/// Effect direction of the intervention relative to the comparator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    SigDecreased,
    NoSigDiff,
    SigIncreased,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::SigDecreased, Label::NoSigDiff, Label::SigIncreased];

    pub fn code(self) -> i8 {
        match self {
            Label::SigDecreased => -1,
            Label::NoSigDiff => 0,
            Label::SigIncreased => 1,
        }
    }

    pub fn from_code(code: i64) -> Option<Label> {
        match code {
            -1 => Some(Label::SigDecreased),
            0 => Some(Label::NoSigDiff),
            1 => Some(Label::SigIncreased),
            _ => None,
        }
    }

    /// Position in [`Label::ALL`]; also the class index used by models.
    pub fn index(self) -> usize {
        (self.code() + 1) as usize
    }

    pub fn from_index(i: usize) -> Label {
        Label::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::SigDecreased => "significantly decreased",
            Label::NoSigDiff => "no significant difference",
            Label::SigIncreased => "significantly increased",
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        l.code()
    }
}

impl TryFrom<i8> for Label {
    type Error = String;
    fn try_from(v: i8) -> core::result::Result<Self, String> {
        Label::from_code(v as i64).ok_or_else(|| format!("label code {v} not in {{-1, 0, 1}}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl core::fmt::Display for Split {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "validation" | "val" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Parse(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcoPrompt {
    pub prompt_id: u64,
    pub article_id: String,
    pub intervention: String,
    pub comparator: String,
    pub outcome: String,
}

/// One labelled answer to a prompt. `user_id` 0 is the prompt generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub prompt_id: u64,
    pub user_id: u32,
    /// `None` marks an answer flagging the prompt itself as invalid.
    pub label: Option<Label>,
    pub rationale: String,
    pub evidence: Option<Span>,
    pub label_valid: bool,
    pub rationale_valid: bool,
}

impl AnnotationRecord {
    pub fn is_generator(&self) -> bool {
        self.user_id == 0
    }
}

/// Evidence location for a prompt, as a character span and its token mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvidenceSpan {
    pub span: Span,
    pub token_mask: Vec<bool>,
}

impl EvidenceSpan {
    pub fn new(doc: &ProcessedDocument, span: Span) -> Self {
        EvidenceSpan { span, token_mask: doc.token_mask(span) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub doc: ProcessedDocument,
    pub split: Split,
}

/// Immutable collection of articles, prompts and records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub articles: BTreeMap<String, Article>,
    pub prompts: Vec<IcoPrompt>,
    pub records: Vec<AnnotationRecord>,
    /// Prompts with fewer than two records.
    pub degenerate: Vec<u64>,
}

impl Dataset {
    /// Assemble and validate referential integrity.
    pub fn new(
        articles: BTreeMap<String, Article>,
        prompts: Vec<IcoPrompt>,
        records: Vec<AnnotationRecord>,
    ) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for p in &prompts {
            if !ids.insert(p.prompt_id) {
                return Err(Error::Parse(format!("duplicate prompt id {}", p.prompt_id)));
            }
            if !articles.contains_key(&p.article_id) {
                return Err(Error::MissingData(format!("prompt {} references unknown article {}", p.prompt_id, p.article_id)));
            }
            if p.intervention.trim().is_empty() || p.comparator.trim().is_empty() || p.outcome.trim().is_empty() {
                return Err(Error::Parse(format!("prompt {} has an empty ICO field", p.prompt_id)));
            }
        }
        let mut per_prompt: BTreeMap<u64, usize> = BTreeMap::new();
        for r in &records {
            if !ids.contains(&r.prompt_id) {
                return Err(Error::MissingData(format!("record references unknown prompt {}", r.prompt_id)));
            }
            *per_prompt.entry(r.prompt_id).or_default() += 1;
            if let Some(span) = r.evidence {
                let prompt = prompts.iter().find(|p| p.prompt_id == r.prompt_id).unwrap();
                let len = articles[&prompt.article_id].doc.text.len();
                if span.start >= span.end || span.end > len {
                    return Err(Error::Parse(format!(
                        "record for prompt {} has evidence {}..{} outside 0..{len}",
                        r.prompt_id, span.start, span.end
                    )));
                }
            }
        }
        let degenerate = prompts
            .iter()
            .map(|p| p.prompt_id)
            .filter(|id| per_prompt.get(id).copied().unwrap_or(0) < 2)
            .collect();
        Ok(Dataset { articles, prompts, records, degenerate })
    }

    pub fn prompt(&self, prompt_id: u64) -> Option<&IcoPrompt> {
        self.prompts.iter().find(|p| p.prompt_id == prompt_id)
    }

    pub fn records_for(&self, prompt_id: u64) -> impl Iterator<Item = &AnnotationRecord> {
        self.records.iter().filter(move |r| r.prompt_id == prompt_id)
    }

    pub fn article(&self, article_id: &str) -> Option<&Article> {
        self.articles.get(article_id)
    }

    pub fn split_of(&self, prompt: &IcoPrompt) -> Split {
        self.articles[&prompt.article_id].split
    }

    pub fn prompts_in(&self, split: Split) -> impl Iterator<Item = &IcoPrompt> {
        self.prompts.iter().filter(move |p| self.articles[&p.article_id].split == split)
    }

    /// The generator's verified label for a prompt.
    pub fn gold_label(&self, prompt_id: u64) -> Option<Label> {
        self.records_for(prompt_id).find(|r| r.is_generator() && r.label_valid).and_then(|r| r.label)
    }

    /// Evidence span: the generator's if present, else the first verified
    /// rationale with offsets.
    pub fn gold_evidence(&self, prompt_id: u64) -> Option<Span> {
        let records: Vec<&AnnotationRecord> = self.records_for(prompt_id).collect();
        records
            .iter()
            .find(|r| r.is_generator() && r.evidence.is_some())
            .or_else(|| records.iter().find(|r| r.rationale_valid && r.evidence.is_some()))
            .and_then(|r| r.evidence)
    }

    /// Records grouped by prompt id.
    pub fn records_by_prompt(&self) -> BTreeMap<u64, Vec<&AnnotationRecord>> {
        let mut out: BTreeMap<u64, Vec<&AnnotationRecord>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.prompt_id).or_default().push(r);
        }
        out
    }

    /// [`Dataset::gold_label`] for every prompt that has one, in one pass.
    pub fn gold_labels(&self) -> BTreeMap<u64, Label> {
        self.records_by_prompt()
            .into_iter()
            .filter_map(|(id, rs)| rs.iter().find(|r| r.is_generator() && r.label_valid).and_then(|r| r.label).map(|l| (id, l)))
            .collect()
    }

    /// [`Dataset::gold_evidence`] for every prompt that has one, in one pass.
    pub fn gold_evidence_spans(&self) -> BTreeMap<u64, Span> {
        self.records_by_prompt()
            .into_iter()
            .filter_map(|(id, rs)| {
                rs.iter()
                    .find(|r| r.is_generator() && r.evidence.is_some())
                    .or_else(|| rs.iter().find(|r| r.rationale_valid && r.evidence.is_some()))
                    .and_then(|r| r.evidence)
                    .map(|s| (id, s))
            })
            .collect()
    }

    pub fn evidence_for(&self, prompt: &IcoPrompt) -> Option<EvidenceSpan> {
        let span = self.gold_evidence(prompt.prompt_id)?;
        Some(EvidenceSpan::new(&self.articles[&prompt.article_id].doc, span))
    }
}

/// One row of a tabular annotation source.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub prompt_id: u64,
    pub article_id: String,
    pub user_id: i64,
    pub intervention: String,
    pub comparator: String,
    pub outcome: String,
    /// `-1`, `0`, `1`, a label name, or `invalid`.
    pub label: String,
    pub rationale: String,
    pub evidence_start: Option<usize>,
    pub evidence_end: Option<usize>,
    pub label_valid: bool,
    pub rationale_valid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowError {
    pub row: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IngestOutcome {
    pub dataset: Dataset,
    pub errors: Vec<RowError>,
    /// Records whose offsets were recomputed by fuzzy alignment.
    pub realigned: usize,
}

/// Parse a label cell. `Ok(None)` is the invalid-prompt marker.
pub fn parse_label(cell: &str) -> Result<Option<Label>> {
    let c = cell.trim().to_ascii_lowercase();
    if let Ok(code) = c.parse::<i64>() {
        return Label::from_code(code).map(Some).ok_or_else(|| Error::Parse(format!("label code {code}")));
    }
    match c.as_str() {
        "significantly decreased" => Ok(Some(Label::SigDecreased)),
        "no significant difference" => Ok(Some(Label::NoSigDiff)),
        "significantly increased" => Ok(Some(Label::SigIncreased)),
        "invalid" | "invalid prompt" => Ok(None),
        _ => Err(Error::Parse(format!("unrecognised label {cell:?}"))),
    }
}

/// Build a dataset from rows and processed articles. Rows referring to
/// unknown articles, carrying an unparseable label, or contradicting an
/// earlier row's prompt text are skipped and reported.
///
/// Offsets are kept when they index the article text and the text there
/// resembles the rationale; otherwise the rationale is re-located by fuzzy
/// alignment.
pub fn ingest(rows: &[RawRow], articles: BTreeMap<String, Article>) -> Result<IngestOutcome> {
    let mut errors = Vec::new();
    let mut prompts: BTreeMap<u64, IcoPrompt> = BTreeMap::new();
    let mut records = Vec::new();
    let mut realigned = 0;
    let align_cfg = AlignmentConfig::default();
    for (i, row) in rows.iter().enumerate() {
        let err = |m: String| RowError { row: i, message: m };
        let Some(article) = articles.get(&row.article_id) else {
            errors.push(err(format!("unknown article {}", row.article_id)));
            continue;
        };
        let label = match parse_label(&row.label) {
            Ok(l) => l,
            Err(e) => {
                errors.push(err(e.to_string()));
                continue;
            }
        };
        if row.user_id < 0 {
            errors.push(err(format!("negative user id {}", row.user_id)));
            continue;
        }
        let prompt = IcoPrompt {
            prompt_id: row.prompt_id,
            article_id: row.article_id.clone(),
            intervention: row.intervention.clone(),
            comparator: row.comparator.clone(),
            outcome: row.outcome.clone(),
        };
        if [&prompt.intervention, &prompt.comparator, &prompt.outcome].iter().any(|s| s.trim().is_empty()) {
            errors.push(err(format!("prompt {} has an empty ICO field", row.prompt_id)));
            continue;
        }
        match prompts.get(&row.prompt_id) {
            Some(existing) if existing.article_id != prompt.article_id => {
                errors.push(err(format!("prompt {} bound to two articles", row.prompt_id)));
                continue;
            }
            Some(_) => {}
            None => {
                prompts.insert(row.prompt_id, prompt);
            }
        }
        let text = &article.doc.text;
        let given = match (row.evidence_start, row.evidence_end) {
            (Some(s), Some(e)) if s < e && e <= text.len() && text.is_char_boundary(s) && text.is_char_boundary(e) => {
                let rationale = row.rationale.trim();
                (rationale.is_empty() || similarity(&text[s..e], rationale) >= align_cfg.threshold).then(|| Span::new(s, e))
            }
            _ => None,
        };
        let evidence = match given {
            Some(span) => Some(span),
            None if !row.rationale.trim().is_empty() => {
                match locate_rationale(text, &row.rationale, &align_cfg)? {
                    Alignment::Found { start, end, .. } => {
                        realigned += 1;
                        Some(Span::new(start, end))
                    }
                    Alignment::NoAlignment { .. } => None,
                }
            }
            None => None,
        };
        records.push(AnnotationRecord {
            prompt_id: row.prompt_id,
            user_id: row.user_id as u32,
            label,
            rationale: row.rationale.clone(),
            evidence,
            label_valid: row.label_valid,
            rationale_valid: row.rationale_valid,
        });
    }
    let dataset = Dataset::new(articles, prompts.into_values().collect(), records)?;
    Ok(IngestOutcome { dataset, errors, realigned })
}

/// Drop invalid prompts and rejected answers.
///
/// A prompt is removed when the generator flagged it invalid, when the
/// verifier rejected every answer, or when it rejected every rationale.
/// Surviving prompts lose their records with `label_valid == false`.
pub fn filter_valid(dataset: &Dataset) -> Dataset {
    let keep: BTreeSet<u64> = dataset
        .prompts
        .iter()
        .map(|p| p.prompt_id)
        .filter(|&id| {
            let recs: Vec<&AnnotationRecord> = dataset.records_for(id).collect();
            let flagged = recs.iter().any(|r| r.is_generator() && r.label.is_none());
            !recs.is_empty() && !flagged && recs.iter().any(|r| r.label_valid) && recs.iter().any(|r| r.rationale_valid)
        })
        .collect();
    let prompts: Vec<IcoPrompt> = dataset.prompts.iter().filter(|p| keep.contains(&p.prompt_id)).cloned().collect();
    let records: Vec<AnnotationRecord> =
        dataset.records.iter().filter(|r| keep.contains(&r.prompt_id) && r.label_valid).cloned().collect();
    Dataset::new(dataset.articles.clone(), prompts, records).expect("filtering preserves integrity")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub prompts: usize,
    pub articles: usize,
    /// Gold label counts indexed by [`Label::index`].
    pub labels: [usize; 3],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitReport {
    pub counts: BTreeMap<Split, SplitCounts>,
    /// `(check name, expected, actual)` for every supplied expectation.
    pub checks: Vec<(String, usize, usize)>,
}

impl SplitReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, e, a)| e == a)
    }

    pub fn total(&self) -> SplitCounts {
        let mut t = SplitCounts::default();
        for c in self.counts.values() {
            t.prompts += c.prompts;
            t.articles += c.articles;
            for k in 0..3 {
                t.labels[k] += c.labels[k];
            }
        }
        t
    }
}

/// Counts per split, checked against `expected` when given.
/// Articles are counted when at least one prompt refers to them.
pub fn verify_split_counts(dataset: &Dataset, expected: Option<&BTreeMap<Split, SplitCounts>>) -> SplitReport {
    let mut counts: BTreeMap<Split, SplitCounts> = Split::ALL.iter().map(|s| (*s, SplitCounts::default())).collect();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for p in &dataset.prompts {
        let split = dataset.split_of(p);
        let c = counts.get_mut(&split).unwrap();
        c.prompts += 1;
        if seen.insert(p.article_id.as_str()) {
            c.articles += 1;
        }
        if let Some(l) = dataset.gold_label(p.prompt_id) {
            c.labels[l.index()] += 1;
        }
    }
    let mut checks = Vec::new();
    if let Some(expected) = expected {
        for (split, e) in expected {
            let a = &counts[split];
            let name = split.name();
            checks.push((format!("{name} prompts"), e.prompts, a.prompts));
            checks.push((format!("{name} articles"), e.articles, a.articles));
            for l in Label::ALL {
                checks.push((format!("{name} label {}", l.code()), e.labels[l.index()], a.labels[l.index()]));
            }
        }
    }
    SplitReport { counts, checks }
}

/// Corpus statistics of the released evidence inference dataset.
pub fn published_split_counts() -> BTreeMap<Split, SplitCounts> {
    BTreeMap::from([
        (Split::Train, SplitCounts { prompts: 8168, articles: 1931, labels: [1981, 3619, 2568] }),
        (Split::Dev, SplitCounts { prompts: 1004, articles: 248, labels: [232, 448, 324] }),
        (Split::Test, SplitCounts { prompts: 965, articles: 240, labels: [215, 403, 347] }),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::SentenceSplitter;
    use alloc::vec;

    fn article(text: &str, split: Split) -> Article {
        Article { doc: ProcessedDocument::from_text(text, &SentenceSplitter::default()), split }
    }

    fn row(prompt_id: u64, user_id: i64, article: &str, label: &str) -> RawRow {
        RawRow {
            prompt_id,
            article_id: article.into(),
            user_id,
            intervention: "aspirin".into(),
            comparator: "placebo".into(),
            outcome: "pain".into(),
            label: label.into(),
            rationale: "Pain fell".into(),
            evidence_start: Some(0),
            evidence_end: Some(9),
            label_valid: true,
            rationale_valid: true,
        }
    }

    fn articles() -> BTreeMap<String, Article> {
        BTreeMap::from([("PMC1".to_string(), article("Pain fell with aspirin (p = 0.01).", Split::Train))])
    }

    #[test]
    fn minimal_ingest() {
        let out = ingest(&[row(7, 0, "PMC1", "-1"), row(7, 3, "PMC1", "significantly decreased")], articles()).unwrap();
        assert!(out.errors.is_empty());
        assert_eq!(out.dataset.prompts.len(), 1);
        assert_eq!(out.dataset.records.len(), 2);
        assert!(out.dataset.degenerate.is_empty());
        assert_eq!(out.dataset.gold_label(7), Some(Label::SigDecreased));
    }

    #[test]
    fn unknown_article_and_bad_label_are_collected() {
        let out = ingest(&[row(1, 0, "PMC1", "1"), row(1, 2, "PMC9", "1"), row(1, 3, "PMC1", "7")], articles()).unwrap();
        assert_eq!(out.errors.len(), 2);
        assert_eq!(out.errors[0].row, 1);
        assert_eq!(out.dataset.records.len(), 1);
        assert_eq!(out.dataset.degenerate, vec![1]);
    }

    #[test]
    fn bad_offsets_are_realigned() {
        let mut r = row(1, 0, "PMC1", "0");
        r.rationale = "with aspirin".into();
        r.evidence_start = Some(500);
        let out = ingest(&[r], articles()).unwrap();
        assert_eq!(out.realigned, 1);
        assert_eq!(out.dataset.records[0].evidence, Some(Span::new(10, 22)));
    }

    #[test]
    fn in_range_offsets_pointing_elsewhere_are_realigned() {
        let mut r = row(1, 0, "PMC1", "0");
        r.rationale = "with aspirin".into();
        r.evidence_start = Some(0);
        r.evidence_end = Some(12);
        let out = ingest(&[r.clone()], articles()).unwrap();
        assert_eq!((out.realigned, out.dataset.records[0].evidence), (1, Some(Span::new(10, 22))));
        r.evidence_start = Some(10);
        r.evidence_end = Some(22);
        let out = ingest(&[r], articles()).unwrap();
        assert_eq!((out.realigned, out.dataset.records[0].evidence), (0, Some(Span::new(10, 22))));
    }

    fn dataset_with(records: Vec<(u64, u32, bool, bool)>) -> Dataset {
        let ids: BTreeSet<u64> = records.iter().map(|r| r.0).collect();
        let prompts = ids
            .iter()
            .map(|&id| IcoPrompt {
                prompt_id: id,
                article_id: "PMC1".into(),
                intervention: "a".into(),
                comparator: "b".into(),
                outcome: "c".into(),
            })
            .collect();
        let records = records
            .into_iter()
            .map(|(p, u, lv, rv)| AnnotationRecord {
                prompt_id: p,
                user_id: u,
                label: Some(Label::NoSigDiff),
                rationale: "x".into(),
                evidence: None,
                label_valid: lv,
                rationale_valid: rv,
            })
            .collect();
        Dataset::new(articles(), prompts, records).unwrap()
    }

    #[test]
    fn filter_rules() {
        let d = dataset_with(vec![(1, 0, false, true), (1, 1, false, true), (2, 0, true, true), (2, 1, false, true), (3, 0, true, false), (3, 1, true, false)]);
        let f = filter_valid(&d);
        assert_eq!(f.prompts.iter().map(|p| p.prompt_id).collect::<Vec<_>>(), vec![2]);
        assert_eq!(f.records.len(), 1);
        assert_eq!(filter_valid(&f), f);

        let clean = dataset_with(vec![(1, 0, true, true), (1, 1, true, true)]);
        assert_eq!(filter_valid(&clean), clean);
    }

    #[test]
    fn generator_invalid_flag_removes_prompt() {
        let mut d = dataset_with(vec![(1, 0, true, true), (1, 1, true, true)]);
        d.records[0].label = None;
        assert!(filter_valid(&d).prompts.is_empty());
    }

    #[test]
    fn split_counts_without_expectations_pass() {
        let d = dataset_with(vec![(1, 0, true, true), (1, 1, true, true), (2, 0, true, true)]);
        let r = verify_split_counts(&d, None);
        assert!(r.passed());
        assert_eq!(r.counts[&Split::Train], SplitCounts { prompts: 2, articles: 1, labels: [0, 2, 0] });
        let mut exp = BTreeMap::new();
        exp.insert(Split::Train, SplitCounts { prompts: 3, articles: 1, labels: [0, 2, 0] });
        assert!(!verify_split_counts(&d, Some(&exp)).passed());
    }

    #[test]
    fn published_totals_are_consistent() {
        let t = SplitReport { counts: published_split_counts(), checks: vec![] }.total();
        assert_eq!(t.prompts, 10137);
        assert_eq!(t.articles, 2419);
        assert_eq!(t.labels, [2428, 4470, 3239]);
    }

    #[test]
    fn label_codes_round_trip() {
        for l in Label::ALL {
            assert_eq!(Label::from_code(l.code() as i64), Some(l));
            assert_eq!(Label::from_index(l.index()), l);
            assert_eq!(parse_label(l.name()).unwrap(), Some(l));
        }
        assert_eq!(parse_label("Invalid Prompt").unwrap(), None);
        assert!(parse_label("maybe").is_err());
    }
}
