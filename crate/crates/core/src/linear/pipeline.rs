use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use super::{featurize, str_refs, lr_predict, lr_train, BoWVector, LinearModel, LrConfig, LrExample};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::numerics::argmax;
use crate::preprocess::{ProcessedDocument, Vocabulary};

/// Sentences scoring above this are passed to the document model.
pub const EVIDENCE_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineLrConfig {
    pub sentence: LrConfig,
    pub document: LrConfig,
}

/// Single-segment BoW over the tokens of one sentence.
pub fn sentence_features(doc: &ProcessedDocument, range: Range<usize>, vocab: &Vocabulary) -> BoWVector {
    BoWVector::from_indices(vocab.len(), doc.tokens[range].iter().map(|t| vocab.lookup(&t.surface)))
}

/// Indices above the threshold, or the single best sentence when none is.
pub fn select_sentences(probs: &[f64]) -> Vec<usize> {
    let chosen: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > EVIDENCE_THRESHOLD).collect();
    if chosen.is_empty() && !probs.is_empty() {
        return alloc::vec![argmax(probs)];
    }
    chosen
}

/// One training prompt for the pipeline: its article, prompt tokens,
/// evidence mask over the article tokens and gold class index.
pub struct PipelineExample<'a> {
    pub doc: &'a ProcessedDocument,
    pub prompt: [Vec<String>; 3],
    pub evidence: Vec<bool>,
    pub class: usize,
}

/// Unconditioned sentence tagger feeding a document classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineLr {
    pub sentence: LinearModel,
    pub document: LinearModel,
}

impl PipelineLr {
    /// Evidence probability of each sentence.
    pub fn sentence_probabilities(&self, doc: &ProcessedDocument, vocab: &Vocabulary) -> Vec<f64> {
        doc.sentence_token_ranges()
            .into_iter()
            .map(|r| self.sentence.probabilities(&sentence_features(doc, r, vocab))[1])
            .collect()
    }

    /// Article segment restricted to the chosen sentences, plus the prompt.
    pub fn document_features(
        doc: &ProcessedDocument,
        selected: &[usize],
        prompt: &[Vec<String>; 3],
        vocab: &Vocabulary,
    ) -> BoWVector {
        let ranges = doc.sentence_token_ranges();
        let article: Vec<&str> =
            selected.iter().flat_map(|&s| doc.tokens[ranges[s].clone()].iter().map(|t| t.surface.as_str())).collect();
        let [i, c, o] = prompt;
        featurize([&article, &str_refs(i), &str_refs(c), &str_refs(o)], vocab)
    }

    /// Classify using the tagger's selection, or an externally supplied one.
    pub fn predict(
        &self,
        doc: &ProcessedDocument,
        prompt: &[Vec<String>; 3],
        selected: Option<&[usize]>,
        vocab: &Vocabulary,
    ) -> (Label, [f64; 3]) {
        let own;
        let selected = match selected {
            Some(s) => s,
            None => {
                own = select_sentences(&self.sentence_probabilities(doc, vocab));
                &own
            }
        };
        lr_predict(&self.document, &PipelineLr::document_features(doc, selected, prompt, vocab))
    }

    /// Fit the tagger on sentence evidence labels, then the document model on
    /// the sentences the fitted tagger selects.
    pub fn train(examples: &[PipelineExample<'_>], vocab: &Vocabulary, config: &PipelineLrConfig) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptyInput("pipeline training examples"));
        }
        let mut sentence_examples = Vec::new();
        for ex in examples {
            if ex.evidence.len() != ex.doc.tokens.len() {
                return Err(Error::ShapeMismatch("evidence mask does not match article tokens".into()));
            }
            for r in ex.doc.sentence_token_ranges() {
                let class = ex.evidence[r.clone()].iter().any(|&b| b) as usize;
                sentence_examples.push(LrExample { features: sentence_features(ex.doc, r, vocab), class });
            }
        }
        let sentence = lr_train(&sentence_examples, 2, vocab.len(), &config.sentence)?;
        let mut model = PipelineLr { sentence, document: LinearModel::zeros(3, 0, 0.0) };
        let doc_examples: Vec<LrExample> = examples
            .iter()
            .map(|ex| {
                let selected = select_sentences(&model.sentence_probabilities(ex.doc, vocab));
                LrExample { features: PipelineLr::document_features(ex.doc, &selected, &ex.prompt, vocab), class: ex.class }
            })
            .collect();
        model.document = lr_train(&doc_examples, 3, super::SEGMENTS * vocab.len(), &config.document)?;
        Ok(model)
    }
}
