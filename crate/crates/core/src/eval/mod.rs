//! Metrics and the evaluation harness shared by every system.

mod metrics;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

pub use metrics::{
    entropy, evidence_mass, macro_prf, mean_defined, sentence_ceiling_auc, sentence_scores_to_tokens, token_auc,
    ClassMetrics, ConfusionMatrix, MetricsReport,
};

use crate::corpus::{Dataset, IcoPrompt, Label, Split};
use crate::error::{Error, Result};
use crate::heuristics::Heuristics;
use crate::linear::{featurize, lr_predict, prompt_tokens, str_refs, LinearModel, PipelineLr};
use crate::models::{Model, ModelInput};
use crate::preprocess::{ProcessedDocument, Vocabulary};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Restrict inputs to the gold evidence.
    pub oracle_spans: bool,
    /// Hide the intervention, comparator and outcome.
    pub ablate_prompt: bool,
    /// Hide the article.
    pub ablate_article: bool,
}

/// One prompt to classify.
pub struct EvalCase<'a> {
    pub prompt: &'a IcoPrompt,
    pub doc: &'a ProcessedDocument,
    /// Gold evidence token mask, when known.
    pub evidence: Option<&'a [bool]>,
}

impl EvalCase<'_> {
    fn evidence(&self) -> Result<&[bool]> {
        self.evidence.ok_or_else(|| Error::MissingData(format!("prompt {} has no gold evidence", self.prompt.prompt_id)))
    }

    /// Prompt with its fields blanked when ablated.
    fn prompt_view(&self, opts: &EvalOptions) -> IcoPrompt {
        if opts.ablate_prompt {
            IcoPrompt { intervention: String::new(), comparator: String::new(), outcome: String::new(), ..self.prompt.clone() }
        } else {
            self.prompt.clone()
        }
    }

    /// Article tokens visible under `opts`.
    fn article_tokens(&self, opts: &EvalOptions) -> Result<Vec<&str>> {
        if opts.ablate_article {
            return Ok(Vec::new());
        }
        let mask = if opts.oracle_spans { Some(self.evidence()?) } else { None };
        Ok(self
            .doc
            .tokens
            .iter()
            .enumerate()
            .filter(|(i, _)| mask.is_none_or(|m| m.get(*i).copied().unwrap_or(false)))
            .map(|(_, t)| t.surface.as_str())
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Relevance per article token (prefix of the document when truncated).
    pub token_scores: Option<Vec<f64>>,
    /// Normalized attention, when the system has one.
    pub attention: Option<Vec<f64>>,
}

impl Prediction {
    fn label(label: Label) -> Self {
        Prediction { label, token_scores: None, attention: None }
    }
}

/// Anything that labels (article, prompt) pairs.
pub trait EvidenceSystem {
    fn name(&self) -> String;
    fn predict(&self, case: &EvalCase<'_>, opts: &EvalOptions) -> Result<Prediction>;
}

/// Always predicts one label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Majority(pub Label);

impl Majority {
    /// Most frequent gold label of a split; ties go to the lowest class.
    pub fn fit(dataset: &Dataset, split: Split) -> Result<Self> {
        let gold = dataset.gold_labels();
        let mut counts = [0usize; 3];
        for p in dataset.prompts_in(split) {
            if let Some(l) = gold.get(&p.prompt_id) {
                counts[l.index()] += 1;
            }
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::EmptyInput("labelled prompts"));
        }
        let best = (0..3).fold(0, |b, k| if counts[k] > counts[b] { k } else { b });
        Ok(Majority(Label::from_index(best)))
    }
}

impl EvidenceSystem for Majority {
    fn name(&self) -> String {
        "majority".into()
    }

    fn predict(&self, _: &EvalCase<'_>, _: &EvalOptions) -> Result<Prediction> {
        Ok(Prediction::label(self.0))
    }
}

impl EvidenceSystem for Heuristics {
    fn name(&self) -> String {
        "heuristics".into()
    }

    fn predict(&self, case: &EvalCase<'_>, opts: &EvalOptions) -> Result<Prediction> {
        let prompt = case.prompt_view(opts);
        if opts.ablate_article {
            return Ok(Prediction::label(self.classify_sentence("", &prompt)));
        }
        if opts.oracle_spans {
            let mask = case.evidence()?;
            let first = mask.iter().position(|&b| b);
            let last = mask.iter().rposition(|&b| b);
            let (Some(first), Some(last)) = (first, last) else {
                return Err(Error::MissingData(format!("prompt {} has an empty evidence mask", case.prompt.prompt_id)));
            };
            let text = &case.doc.text[case.doc.tokens[first].start..case.doc.tokens[last].end];
            return Ok(Prediction::label(self.classify_oracle(text, &prompt)?));
        }
        let (label, span) = self.classify(case.doc, &prompt);
        let scores = case.doc.tokens.iter().map(|t| span.contains(&t.span()) as u8 as f64).collect();
        Ok(Prediction { label, token_scores: Some(scores), attention: None })
    }
}

/// Logistic regression over the concatenated bag of words.
pub struct LrSystem<'a> {
    pub model: &'a LinearModel,
    pub vocab: &'a Vocabulary,
}

impl EvidenceSystem for LrSystem<'_> {
    fn name(&self) -> String {
        "lr".into()
    }

    fn predict(&self, case: &EvalCase<'_>, opts: &EvalOptions) -> Result<Prediction> {
        let article = case.article_tokens(opts)?;
        let [i, c, o] = prompt_tokens(&case.prompt_view(opts));
        let x = featurize([&article, &str_refs(&i), &str_refs(&c), &str_refs(&o)], self.vocab);
        Ok(Prediction::label(lr_predict(self.model, &x).0))
    }
}

pub struct PipelineLrSystem<'a> {
    pub model: &'a PipelineLr,
    pub vocab: &'a Vocabulary,
}

impl EvidenceSystem for PipelineLrSystem<'_> {
    fn name(&self) -> String {
        "pipeline-lr".into()
    }

    fn predict(&self, case: &EvalCase<'_>, opts: &EvalOptions) -> Result<Prediction> {
        let prompt = prompt_tokens(&case.prompt_view(opts));
        if opts.ablate_article {
            let (label, _) = self.model.predict(case.doc, &prompt, Some(&[]), self.vocab);
            return Ok(Prediction::label(label));
        }
        if opts.oracle_spans {
            let gold: Vec<usize> =
                case.doc.sentence_mask(case.evidence()?).iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
            return Ok(Prediction::label(self.model.predict(case.doc, &prompt, Some(&gold), self.vocab).0));
        }
        let probs = self.model.sentence_probabilities(case.doc, self.vocab);
        let (label, _) = self.model.predict(case.doc, &prompt, None, self.vocab);
        Ok(Prediction { label, token_scores: Some(sentence_scores_to_tokens(&probs, case.doc)), attention: None })
    }
}

pub struct NeuralSystem<'a> {
    pub model: &'a Model,
    pub vocab: &'a Vocabulary,
}

impl NeuralSystem<'_> {
    /// Model input for a case under the given options.
    pub fn input(&self, case: &EvalCase<'_>, opts: &EvalOptions) -> Result<ModelInput> {
        let mut input = ModelInput::new(case.doc, case.prompt, self.vocab, self.model.config.max_tokens);
        input.ablate_prompt = opts.ablate_prompt;
        input.ablate_article = opts.ablate_article;
        if opts.oracle_spans && !opts.ablate_article {
            let mask = crate::models::truncate_mask(case.evidence()?, &input);
            if self.model.variant().is_pipeline() {
                let selected = input
                    .sentences
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| (r.start..r.end).any(|t| mask.get(t).copied().unwrap_or(false)))
                    .map(|(i, _)| i)
                    .collect();
                input.selected = Some(selected);
            } else {
                input = input.restrict(&mask);
                if input.tokens.is_empty() {
                    log::warn!("prompt {}: no evidence inside the truncation cap", case.prompt.prompt_id);
                    input.ablate_article = true;
                }
            }
        }
        Ok(input)
    }
}

impl EvidenceSystem for NeuralSystem<'_> {
    fn name(&self) -> String {
        self.model.variant().name().into()
    }

    fn predict(&self, case: &EvalCase<'_>, opts: &EvalOptions) -> Result<Prediction> {
        let input = self.input(case, opts)?;
        let trace = self.model.forward(&input)?;
        let restricted = opts.oracle_spans || opts.ablate_article;
        Ok(Prediction {
            label: trace.label(),
            token_scores: if restricted { None } else { trace.token_relevance(&input) },
            attention: if restricted { None } else { trace.alpha.clone() },
        })
    }
}

/// Score `system` on every labelled prompt of `split`.
pub fn evaluate_model(
    system: &dyn EvidenceSystem,
    dataset: &Dataset,
    split: Split,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    let gold = dataset.gold_labels();
    let evidence = dataset.gold_evidence_spans();
    let mut confusion = ConfusionMatrix::default();
    let mut aucs = Vec::new();
    let mut masses = Vec::new();
    let mut excluded = 0;
    for prompt in dataset.prompts_in(split) {
        let Some(&label) = gold.get(&prompt.prompt_id) else {
            excluded += 1;
            continue;
        };
        let doc = &dataset.articles[&prompt.article_id].doc;
        let mask = evidence.get(&prompt.prompt_id).map(|&s| doc.token_mask(s));
        if opts.oracle_spans && mask.is_none() {
            return Err(Error::MissingData(format!("oracle evaluation needs evidence for prompt {}", prompt.prompt_id)));
        }
        let case = EvalCase { prompt, doc, evidence: mask.as_deref() };
        let pred = system.predict(&case, opts)?;
        confusion.add(label, pred.label);
        if let Some(mask) = &mask {
            if let Some(scores) = &pred.token_scores {
                aucs.push(token_auc(scores, mask));
            }
            if let Some(alpha) = &pred.attention {
                masses.push(Some(evidence_mass(alpha, mask)));
            }
        }
    }
    let mut report = macro_prf(&confusion)?;
    report.token_auc = mean_defined(aucs);
    report.evidence_mass = mean_defined(masses);
    report.excluded = excluded;
    Ok(report)
}

/// Mean sentence-ceiling token AUC over a split.
pub fn split_sentence_ceiling(dataset: &Dataset, split: Split) -> Option<f64> {
    let evidence = dataset.gold_evidence_spans();
    mean_defined(dataset.prompts_in(split).filter_map(|p| {
        let doc = &dataset.articles[&p.article_id].doc;
        evidence.get(&p.prompt_id).map(|&s| sentence_ceiling_auc(doc, &doc.token_mask(s)))
    }))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

/// Aligned table: one row per system with macro P/R/F1, token AUC and mass.
pub fn format_table(rows: &[(String, MetricsReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>6}  {:>6}  {:>9}  {:>6}", "System", "Precision", "Recall", "F1", "Token AUC", "Mass");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.3}  {:>6.3}  {:>6.3}  {:>9}  {:>6}",
            name,
            r.precision,
            r.recall,
            r.f1,
            opt(r.token_auc),
            opt(r.evidence_mass)
        );
    }
    out
}

/// Per-class precision, recall and F1 rows.
pub fn format_per_class(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<25}  {:>9}  {:>6}  {:>6}", "Class", "Precision", "Recall", "F1");
    for l in Label::ALL {
        let m = report.per_class[l.index()];
        let _ = writeln!(out, "{:<25}  {:>9.3}  {:>6.3}  {:>6.3}", l.name(), m.precision, m.recall, m.f1);
    }
    out
}

/// Confusion counts keyed by gold then predicted label name.
pub fn confusion_map(c: &ConfusionMatrix) -> BTreeMap<&'static str, BTreeMap<&'static str, u64>> {
    Label::ALL
        .iter()
        .map(|g| (g.name(), Label::ALL.iter().map(|p| (p.name(), c.counts[g.index()][p.index()])).collect()))
        .collect()
}
